"""Symmetric-compensation path: saturation, band-pass bias extraction,
and the first-order compensator state.

The line-frequency bias of the sliding variable is extracted by a
second-order band-pass H(s) = 2*zeta*w0*s / (s^2 + 2*zeta*w0*s + w0^2)
discretized with the bilinear transform prewarped at w0, so the discrete
gain at w0 is exactly 1 and the dc gain exactly 0.  The extracted bias
s_error drives dx_comp/dt + lambda*x_comp = s_error, advanced by the
exact exponential update on the decision grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

@dataclass(frozen=True)
class BandPassConfig:
    """Center frequency (rad/s), damping ratio, and sample time (s)."""

    omega0: float = 2.0 * math.pi * 50.0
    zeta: float = 2.0
    sample_time: float = 10e-6

    def __post_init__(self):
        for name in ("omega0", "zeta", "sample_time"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")
        if self.omega0 * self.sample_time >= math.pi:
            raise ConfigError(
                f"omega0*sample_time = {self.omega0 * self.sample_time:.3g} "
                "must stay below pi (Nyquist)")


@dataclass(frozen=True)
class BiquadState:
    """Simplified band-pass biquad: y = b0*x + b2*x[-2] - a1*y[-1] - a2*y[-2]
    (the z^-1 numerator tap is identically zero), plus two transposed
    direct-form-II delay registers."""

    b0: float
    b2: float
    a1: float
    a2: float
    z1: float = 0.0
    z2: float = 0.0

    def poles(self):
        return np.roots([1.0, self.a1, self.a2])

    def gain_at(self, omega: float, sample_time: float) -> complex:
        """Discrete transfer function evaluated at z = exp(j*omega*T)."""
        z = np.exp(1j * omega * sample_time)
        return (self.b0 + self.b2 * z**-2) / (1.0 + self.a1 / z + self.a2 * z**-2)


def bpf_coeffs(cfg: BandPassConfig) -> BiquadState:
    """Bilinear discretization with prewarp at omega0.

    Written in the sin/cos form: alpha = sin(w0*T)/(2*Q) with
    Q = 1/(2*zeta); this is algebraically the prewarped bilinear
    transform of the analog prototype and pins |H| = 1 at omega0 and
    |H| = 0 at dc and Nyquist.
    """
    w = cfg.omega0 * cfg.sample_time
    alpha = math.sin(w) * cfg.zeta  # sin(w)/(2Q), Q = 1/(2*zeta)
    a0 = 1.0 + alpha
    state = BiquadState(
        b0=alpha / a0,
        b2=-alpha / a0,
        a1=-2.0 * math.cos(w) / a0,
        a2=(1.0 - alpha) / a0,
    )
    if np.any(np.abs(state.poles()) >= 1.0):
        raise ConfigError("band-pass poles are not strictly inside the unit circle")
    return state


def bpf_step(state: BiquadState, x: float):
    """One sample of the difference equation; returns (output, new state)."""
    y = state.b0 * x + state.z1
    z1 = -state.a1 * y + state.z2
    z2 = state.b2 * x - state.a2 * y
    return y, replace(state, z1=z1, z2=z2)


def saturate(v: float, limit: float) -> float:
    """Clamp to [-limit, +limit]."""
    if v > limit:
        return limit
    if v < -limit:
        return -limit
    return v


@dataclass(frozen=True)
class CompensatorState:
    """Compensator memory carried across decision ticks."""

    biquad: BiquadState
    sat_limit: float
    x_comp: float = 0.0
    s_error: float = 0.0
    x_comp_dot: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sat_limit) and self.sat_limit > 0.0):
            raise ConfigError(f"sat_limit must be > 0, got {self.sat_limit!r}")


def comp_update(state: CompensatorState, s_prev: float, lambda_: float,
                dt: float) -> CompensatorState:
    """Advance the compensator one decision interval.

    s_prev is the sliding value recorded at the previous tick (the
    one-tick delay that breaks the algebraic loop).  The new bias
    estimate is the band-pass output of the saturated input; x_comp
    advances dx_comp/dt = s_error - lambda*x_comp by the exact
    exponential (zero-order hold on s_error over dt).
    """
    s_err, biquad = bpf_step(state.biquad, saturate(s_prev, state.sat_limit))
    decay = math.exp(-lambda_ * dt)
    x_comp = state.x_comp * decay + (s_err / lambda_) * (1.0 - decay)
    return replace(state, biquad=biquad, s_error=s_err, x_comp=x_comp,
                   x_comp_dot=s_err - lambda_ * x_comp)
