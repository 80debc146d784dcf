"""Sliding surface, hysteresis relay with digital decision latency, and
the average-model ideal control law.

The sliding variable is s = d(x_tilde)/dt + lambda * x_tilde with
x_tilde the (optionally compensator-augmented) voltage tracking error.
Switching decisions are taken only every t_di seconds; the level is held
in between, which is exactly what produces the line-frequency asymmetry
this lab studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, InvalidInput, SchedulingError

MODE_SMC = 0
MODE_SSMC = 1
MODE_IDEAL = 2

_MODES = {"smc": MODE_SMC, "ssmc": MODE_SSMC, "ideal": MODE_IDEAL}


@dataclass(frozen=True)
class ControllerConfig:
    """Relay controller parameters.

    lambda_ (1/s) sets the error-filter pole; eta (V/s^2) the required
    minimum reaching speed; f_bound (V/s^2) the modeling-uncertainty
    allowance; h (V/s) the hysteresis half-band on s; t_di (s) the
    decision interval of the digital controller.
    """

    lambda_: float = 4480.0
    eta: float = 1.0e7
    f_bound: float = 0.0
    h: float = 20000.0
    t_di: float = 10e-6
    mode: str = "smc"

    def __post_init__(self):
        for name in ("lambda_", "eta", "h", "t_di"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")
        if not (math.isfinite(self.f_bound) and self.f_bound >= 0.0):
            raise ConfigError(f"f_bound must be >= 0, got {self.f_bound!r}")
        if self.mode not in _MODES:
            raise ConfigError(f"unknown controller mode {self.mode!r}")

    @property
    def mode_code(self) -> int:
        return _MODES[self.mode]


@dataclass(frozen=True)
class SlidingSample:
    """Sliding-variable snapshot recorded at one decision tick."""

    s_raw: float
    s_used: float
    s_error: float
    x_tilde: float
    x_tilde_dot: float


def sliding_value(x, x_dot, x_d, xd_dot, lambda_, x_comp=0.0, x_comp_dot=0.0):
    """s = (x_dot - xd_dot + x_comp_dot) + lambda*(x - x_d + x_comp)."""
    if lambda_ <= 0.0:
        raise InvalidInput(f"lambda must be > 0, got {lambda_!r}")
    return (x_dot - xd_dot + x_comp_dot) + lambda_ * (x - x_d + x_comp)


def s_dot_diag(f, xd_ddot, lambda_, x_tilde_dot, u):
    """ds/dt = f - xd_ddot + lambda*x_tilde_dot + u (diagnostic form)."""
    return f - xd_ddot + lambda_ * x_tilde_dot + u


def hysteresis_decide(s_used: float, h: float, prev_level: int) -> int:
    """Relay with memory: drive s down above +h, up below -h, else hold."""
    if s_used > h:
        return -1
    if s_used < -h:
        return 1
    return prev_level


def ideal_control(f_hat, xd_ddot, lambda_, x_tilde_dot, f_bound, eta, s):
    """Average-model control law u = -f_hat + xd_ddot - lambda*x_tilde_dot
    - (F + eta)*sgn(s), with sgn(0) = 0."""
    sgn = 0.0 if s == 0.0 else math.copysign(1.0, s)
    return -f_hat + xd_ddot - lambda_ * x_tilde_dot - (f_bound + eta) * sgn


def controller_tick(now, x, x_dot, x_d, xd_dot, comp, cfg: ControllerConfig,
                    prev_level: int):
    """One decision: returns (new level, SlidingSample).

    Must be called on the decision grid (now = k*t_di).  ``comp`` is the
    compensator state (or None); in smc mode the compensator terms are
    forced to zero.
    """
    k = now / cfg.t_di
    if abs(k - round(k)) > 1e-6:
        raise SchedulingError(f"tick at t={now!r} is off the t_di={cfg.t_di!r} grid")
    if cfg.mode == "ssmc" and comp is not None:
        x_comp, x_comp_dot, s_err = comp.x_comp, comp.x_comp_dot, comp.s_error
    else:
        x_comp, x_comp_dot, s_err = 0.0, 0.0, 0.0
    s_raw = sliding_value(x, x_dot, x_d, xd_dot, cfg.lambda_)
    s_used = sliding_value(x, x_dot, x_d, xd_dot, cfg.lambda_, x_comp, x_comp_dot)
    level = hysteresis_decide(s_used, cfg.h, prev_level)
    sample = SlidingSample(
        s_raw=s_raw,
        s_used=s_used,
        s_error=s_err,
        x_tilde=x - x_d + x_comp,
        x_tilde_dot=x_dot - xd_dot + x_comp_dot,
    )
    return level, sample
