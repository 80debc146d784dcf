"""Plant model: LC filter dynamics, reference trajectory, and load current.

The single-phase inverter bridge applies T*v_dc (T in {-1, +1}) to an LC
filter; the states are the inductor current i_f and the capacitor
voltage u_o:

    L_f * di_f/dt = T*v_dc - u_o
    C_f * du_o/dt = i_f - i_o

Within one switch state this system is affine-linear, so it can be
advanced exactly (2x2 matrix exponential in closed form).  The engine
relies on that: integration error is zero, so any asymmetry seen in the
traces is caused by the digital decision interval, not by the stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, InvalidInput

TWO_PI = 2.0 * math.pi

LOAD_NONE = 0
LOAD_RESISTIVE = 1
LOAD_PHASOR = 2

_LOAD_KINDS = {"none": LOAD_NONE, "resistive": LOAD_RESISTIVE, "phasor_sink": LOAD_PHASOR}


def _require_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInput(f"{name} is not finite: {v!r}")


@dataclass(frozen=True)
class InverterParams:
    """Hardware constants of the filter stage and its ratings.

    l_f, c_f in H and F; v_dc_nominal in V; f_n in Hz; v_n_rms the
    nominal single-phase RMS voltage in V.
    """

    l_f: float = 0.3e-3
    c_f: float = 330e-6
    v_dc_nominal: float = 290.0
    f_n: float = 50.0
    v_n_rms: float = 110.0

    def __post_init__(self):
        for name in ("l_f", "c_f", "v_dc_nominal", "f_n", "v_n_rms"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")
        if not math.isfinite(self.inv_lc):
            raise ConfigError("1/(l_f*c_f) is not finite")

    @property
    def inv_lc(self) -> float:
        """Control-authority scale 1/(L_f*C_f) in 1/s^2."""
        return 1.0 / (self.l_f * self.c_f)

    @property
    def omega_n(self) -> float:
        """Nominal angular frequency 2*pi*f_n in rad/s."""
        return TWO_PI * self.f_n

    @property
    def v_n_peak(self) -> float:
        return self.v_n_rms * math.sqrt(2.0)


@dataclass(frozen=True)
class PlantState:
    """Continuous plant states plus the active switch level."""

    i_f: float = 0.0
    u_o: float = 0.0
    t_level: int = 1
    time: float = 0.0

    def __post_init__(self):
        if self.t_level not in (-1, 1):
            raise InvalidInput(f"t_level must be -1 or +1, got {self.t_level!r}")
        _require_finite(i_f=self.i_f, u_o=self.u_o, time=self.time)


@dataclass(frozen=True)
class ReferenceProgram:
    """Sinusoidal voltage reference with instantaneous schedule steps.

    Between steps the reference is the exact sinusoid

        x_d(t) = amplitude * scale_i * sin(2*pi*frequency*t + phase + offset_i)

    where (scale_i, offset_i) come from the last schedule entry at or
    before t.  Steps are discontinuous; derivatives are those of the
    post-step waveform.  ``steps`` entries are (time, amplitude_scale,
    phase_offset) with strictly increasing times.
    """

    amplitude: float
    frequency: float
    phase: float = 0.0
    steps: tuple = ()

    def __post_init__(self):
        if not (math.isfinite(self.frequency) and self.frequency > 0.0):
            raise ConfigError(f"reference frequency must be > 0, got {self.frequency!r}")
        _require_finite(amplitude=self.amplitude, phase=self.phase)
        times = [s[0] for s in self.steps]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ConfigError("reference schedule times must be strictly increasing")

    @property
    def omega(self) -> float:
        return TWO_PI * self.frequency

    def segment_at(self, t: float):
        """(amplitude, phase) of the segment active at time t."""
        scale, offset = 1.0, 0.0
        for st, sc, off in self.steps:
            if st <= t:
                scale, offset = sc, off
            else:
                break
        return self.amplitude * scale, self.phase + offset


@dataclass(frozen=True)
class LoadEntry:
    """One load configuration: none, resistive(r), or phasor_sink(p, q)."""

    kind: str = "none"
    r: float = 0.0
    p_w: float = 0.0
    q_var: float = 0.0

    def __post_init__(self):
        if self.kind not in _LOAD_KINDS:
            raise ConfigError(f"unknown load kind {self.kind!r}")
        if self.kind == "resistive" and not (math.isfinite(self.r) and self.r > 0.0):
            raise ConfigError(f"resistive load needs r > 0, got {self.r!r}")
        if self.kind == "phasor_sink":
            _require_finite(p_w=self.p_w, q_var=self.q_var)

    @property
    def kind_code(self) -> int:
        return _LOAD_KINDS[self.kind]


@dataclass(frozen=True)
class LoadProgram:
    """Output-current model with an optional (time, LoadEntry) schedule.

    Phasor-sink currents are referenced to the nominal voltage phase:
    i_o(t) = I_pk * sin(omega_n*t + phase0 - atan2(Q, P)) with
    I_pk = sqrt(P^2 + Q^2) * sqrt(2) / V_n.
    """

    base: LoadEntry = field(default_factory=LoadEntry)
    steps: tuple = ()  # (time, LoadEntry)
    v_n_rms: float = 110.0
    omega_n: float = TWO_PI * 50.0
    phase0: float = 0.0

    def __post_init__(self):
        times = [s[0] for s in self.steps]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ConfigError("load schedule times must be strictly increasing")

    def entry_at(self, t: float) -> LoadEntry:
        entry = self.base
        for st, e in self.steps:
            if st <= t:
                entry = e
            else:
                break
        return entry

    def phasor_terms(self, entry: LoadEntry):
        """(peak current, phase) of a phasor_sink entry."""
        s_va = math.hypot(entry.p_w, entry.q_var)
        i_pk = s_va * math.sqrt(2.0) / self.v_n_rms
        phi = math.atan2(entry.q_var, entry.p_w)
        return i_pk, self.phase0 - phi


def plant_derivs(state: PlantState, v_dc: float, i_o: float, params: InverterParams):
    """Right-hand side of the filter ODE: (di_f/dt, du_o/dt)."""
    _require_finite(v_dc=v_dc, i_o=i_o)
    di_f_dt = (state.t_level * v_dc - state.u_o) / params.l_f
    du_o_dt = (state.i_f - i_o) / params.c_f
    return di_f_dt, du_o_dt


def f_model(u_o: float, di_o_dt: float, params: InverterParams) -> float:
    """System function f(u_o, i_o) of the voltage double-integrator form.

    d^2 u_o / dt^2 = f + u with f = -u_o/(L_f C_f) - (di_o/dt)/C_f.
    """
    _require_finite(u_o=u_o, di_o_dt=di_o_dt)
    return -u_o * params.inv_lc - di_o_dt / params.c_f


def lc_propagator(l_f: float, c_f: float, g: float, dt: float):
    """Closed-form exp(A*dt) for A = [[0, -1/L], [1/C, -g/C]].

    g is the load conductance folded into the step (0 for held-current
    loads).  Returns the four matrix entries (p11, p12, p21, p22).
    """
    a12 = -1.0 / l_f
    a21 = 1.0 / c_f
    a22 = -g / c_f
    mu = 0.5 * a22
    disc = mu * mu - (1.0 / (l_f * c_f))  # mu^2 - det(A)
    if disc < 0.0:
        nu = math.sqrt(-disc)
        cosv = math.cos(nu * dt)
        sincv = math.sin(nu * dt) / nu
    elif disc > 0.0:
        nu = math.sqrt(disc)
        cosv = math.cosh(nu * dt)
        sincv = math.sinh(nu * dt) / nu
    else:
        cosv = 1.0
        sincv = dt
    e = math.exp(mu * dt)
    p11 = e * (cosv + sincv * (0.0 - mu))
    p12 = e * (sincv * a12)
    p21 = e * (sincv * a21)
    p22 = e * (cosv + sincv * (a22 - mu))
    return p11, p12, p21, p22


def step_exact_affine(i_f, u_o, drive_v, i_o, g, prop):
    """One exact affine step given a precomputed propagator.

    drive_v is the bridge voltage applied to the filter input.  For
    g > 0 the resistor is part of the linear system and the equilibrium
    is (drive_v*g, drive_v); otherwise i_o is held constant and the
    equilibrium is (i_o, drive_v).
    """
    if g > 0.0:
        eq_i = drive_v * g
    else:
        eq_i = i_o
    eq_u = drive_v
    di = i_f - eq_i
    du = u_o - eq_u
    p11, p12, p21, p22 = prop
    return eq_i + p11 * di + p12 * du, eq_u + p21 * di + p22 * du


def plant_step_exact(state: PlantState, v_dc: float, i_o: float, dt: float,
                     params: InverterParams, g: float = 0.0) -> PlantState:
    """Advance the plant by dt with the switch level and i_o held.

    Exact solution of the affine LC system; pass g = 1/R instead of a
    held i_o to fold a resistive load into the step.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise InvalidInput(f"dt must be > 0, got {dt!r}")
    _require_finite(v_dc=v_dc, i_o=i_o)
    prop = lc_propagator(params.l_f, params.c_f, g, dt)
    i_f, u_o = step_exact_affine(state.i_f, state.u_o, state.t_level * v_dc,
                                 i_o, g, prop)
    return PlantState(i_f=i_f, u_o=u_o, t_level=state.t_level,
                      time=state.time + dt)


def reference_eval(ref: ReferenceProgram, t: float):
    """(x_d, dx_d/dt, d2x_d/dt2) at time t, honoring schedule steps."""
    amp, phase = ref.segment_at(t)
    w = ref.omega
    arg = w * t + phase
    s = math.sin(arg)
    c = math.cos(arg)
    return amp * s, amp * w * c, -amp * w * w * s


def load_eval(load: LoadProgram, t: float, u_o: float, du_o_dt: float):
    """(i_o, di_o/dt) at time t.

    Resistive loads mirror the capacitor voltage (i_o = u_o/R); phasor
    sinks are state-independent analytic sinusoids.
    """
    entry = load.entry_at(t)
    if entry.kind == "none":
        return 0.0, 0.0
    if entry.kind == "resistive":
        return u_o / entry.r, du_o_dt / entry.r
    i_pk, phase = load.phasor_terms(entry)
    arg = load.omega_n * t + phase
    return i_pk * math.sin(arg), i_pk * load.omega_n * math.cos(arg)
