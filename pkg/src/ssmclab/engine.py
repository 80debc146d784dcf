"""Scenario orchestration: event schedules, exact sub-stepped integration
between decision ticks, and trace capture.

A Scenario is fully deterministic (no randomness anywhere); identical
scenarios produce bit-identical traces.  Events snap to the nearest
decision tick (round half up) because the controller cannot observe
intra-tick changes anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .compensator import BandPassConfig, bpf_coeffs
from .controller import ControllerConfig
from .errors import AbortedRun, ConfigError, InvalidInput
from .model import (InverterParams, LoadEntry, LoadProgram, PlantState,
                    ReferenceProgram)

EVENT_KINDS = ("vdc_set", "ref_scale", "ref_phase", "load_set", "mode_set")

_MODE_CODES = {"smc": _kernels.MODE_SMC, "ssmc": _kernels.MODE_SSMC,
               "ideal": _kernels.MODE_IDEAL}


@dataclass(frozen=True)
class Event:
    """A timed change: vdc_set(V), ref_scale(factor), ref_phase(rad shift),
    load_set(LoadEntry), or mode_set(mode name)."""

    time: float
    kind: str
    value: object

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigError(f"unknown event kind {self.kind!r}")
        if not (math.isfinite(self.time) and self.time >= 0.0):
            raise ConfigError(f"event time must be >= 0, got {self.time!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything one deterministic run needs."""

    params: InverterParams = field(default_factory=InverterParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    bandpass: BandPassConfig = None
    sat_limit: float = None  # defaults to 4*h: clears the chatter ceiling
    bpf_input: str = "s_used"
    reference: ReferenceProgram = None
    load: LoadProgram = None
    vdc0: float = None
    events: tuple = ()
    duration: float = 0.4
    substeps_per_tick: int = 10
    decimation: int = 1
    settle_time: float = 0.02
    max_steps: float = 5e7

    def __post_init__(self):
        if self.reference is None:
            object.__setattr__(self, "reference", ReferenceProgram(
                amplitude=self.params.v_n_peak, frequency=self.params.f_n))
        if self.load is None:
            object.__setattr__(self, "load", LoadProgram(
                v_n_rms=self.params.v_n_rms, omega_n=self.params.omega_n,
                phase0=self.reference.phase))
        if self.bandpass is None:
            object.__setattr__(self, "bandpass", BandPassConfig(
                sample_time=self.controller.t_di))
        if self.sat_limit is None:
            object.__setattr__(self, "sat_limit", 4.0 * self.controller.h)
        if self.vdc0 is None:
            object.__setattr__(self, "vdc0", self.params.v_dc_nominal)
        if abs(self.bandpass.sample_time - self.controller.t_di) > 1e-15:
            raise ConfigError("band-pass sample_time must equal controller t_di")
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ConfigError(f"duration must be > 0, got {self.duration!r}")
        if self.substeps_per_tick < 1:
            raise ConfigError("substeps_per_tick must be >= 1")
        if self.decimation < 1:
            raise ConfigError("decimation must be >= 1")
        if self.bpf_input not in ("s_raw", "s_used"):
            raise ConfigError(f"bpf_input must be s_raw or s_used, got {self.bpf_input!r}")
        if not (math.isfinite(self.sat_limit) and self.sat_limit > 0.0):
            raise ConfigError(f"sat_limit must be > 0, got {self.sat_limit!r}")
        if not (math.isfinite(self.vdc0) and self.vdc0 >= 0.0):
            raise ConfigError(f"vdc0 must be >= 0, got {self.vdc0!r}")
        n = self.n_ticks
        if n < 1:
            raise ConfigError("duration shorter than one decision interval")
        if n * self.substeps_per_tick > self.max_steps:
            raise ConfigError(
                f"{n} ticks x {self.substeps_per_tick} substeps exceeds the "
                f"max_steps cap {self.max_steps:g}")
        for ev in self.events:
            if ev.time > self.duration:
                raise ConfigError(
                    f"event at t={ev.time!r} lies outside [0, duration]")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.controller.t_di))

    def tick_of(self, t: float) -> int:
        """Snap a time to the decision grid (round half up)."""
        return int(math.floor(t / self.controller.t_di + 0.5))


class _Tables:
    """Mutable schedule tables the event compiler fills in."""

    def __init__(self, scenario: Scenario):
        sc = scenario
        ref = sc.reference
        self.scenario = sc
        self.mode = [(0, _MODE_CODES[sc.controller.mode])]
        self.vdc = [(0, float(sc.vdc0))]
        self.ref = [(0, ref.amplitude, ref.phase)]
        for t, scale, offset in ref.steps:
            self.ref.append((sc.tick_of(t), ref.amplitude * scale,
                             ref.phase + offset))
        self.load = [(0, sc.load.base)]
        for t, entry in sc.load.steps:
            self.load.append((sc.tick_of(t), entry))

    def _append(self, table, tick, payload):
        if table and table[-1][0] == tick:
            table[-1] = (tick,) + payload
        else:
            table.append((tick,) + payload)


def apply_event(tables: _Tables, event: Event) -> _Tables:
    """Fold one event into the schedule tables (same-tick entries override)."""
    sc = tables.scenario
    tick = sc.tick_of(event.time)
    if event.kind == "vdc_set":
        tables._append(tables.vdc, tick, (float(event.value),))
    elif event.kind == "ref_scale":
        ref = sc.reference
        _, _, phase = tables.ref[-1]
        tables._append(tables.ref, tick, (ref.amplitude * float(event.value), phase))
    elif event.kind == "ref_phase":
        _, amp, phase = tables.ref[-1]
        tables._append(tables.ref, tick, (amp, phase + float(event.value)))
    elif event.kind == "load_set":
        entry = event.value
        if not isinstance(entry, LoadEntry):
            raise ConfigError("load_set value must be a LoadEntry")
        tables._append(tables.load, tick, (entry,))
    elif event.kind == "mode_set":
        mode = event.value
        if mode not in _MODE_CODES:
            raise ConfigError(f"unknown mode {mode!r}")
        tables._append(tables.mode, tick, (_MODE_CODES[mode],))
    return tables


def compile_schedules(scenario: Scenario):
    """Turn programs + events into flat tick-indexed arrays for the kernel."""
    tables = _Tables(scenario)
    for ev in sorted(scenario.events, key=lambda e: e.time):
        apply_event(tables, ev)

    def as_arrays(table, *casts):
        table = sorted(table, key=lambda row: row[0])
        cols = list(zip(*table))
        out = [np.asarray(cols[0], dtype=np.int64)]
        for i, cast in enumerate(casts, start=1):
            out.append(np.asarray([cast(v) for v in cols[i]],
                       dtype=np.int64 if cast is int else np.float64))
        return out

    mode_t, mode_v = as_arrays(tables.mode, int)
    vdc_t, vdc_v = as_arrays(tables.vdc, float)
    ref_rows = sorted(tables.ref, key=lambda row: row[0])
    ref_t = np.asarray([r[0] for r in ref_rows], dtype=np.int64)
    ref_amp = np.asarray([r[1] for r in ref_rows], dtype=np.float64)
    ref_ph = np.asarray([r[2] for r in ref_rows], dtype=np.float64)
    load_rows = sorted(tables.load, key=lambda row: row[0])
    load_t = np.asarray([r[0] for r in load_rows], dtype=np.int64)
    kinds, gs, ipks, iphs = [], [], [], []
    for _, entry in load_rows:
        kinds.append(entry.kind_code)
        gs.append(1.0 / entry.r if entry.kind == "resistive" else 0.0)
        if entry.kind == "phasor_sink":
            ipk, iph = scenario.load.phasor_terms(entry)
        else:
            ipk, iph = 0.0, 0.0
        ipks.append(ipk)
        iphs.append(iph)
    return {
        "mode_ticks": mode_t, "mode_vals": mode_v,
        "vdc_ticks": vdc_t, "vdc_vals": vdc_v,
        "ref_ticks": ref_t, "ref_amp": ref_amp, "ref_phase": ref_ph,
        "omega_ref": scenario.reference.omega,
        "load_ticks": load_t,
        "load_kind": np.asarray(kinds, dtype=np.int64),
        "load_g": np.asarray(gs, dtype=np.float64),
        "load_ipk": np.asarray(ipks, dtype=np.float64),
        "load_iph": np.asarray(iphs, dtype=np.float64),
        "omega_n": scenario.load.omega_n,
    }


class Trace:
    """Column store of one run: one record per decision tick."""

    COLUMNS = _kernels.COLUMNS
    CSV_COLUMNS = ("time", "u_o", "i_f", "i_o", "x_d", "s_raw", "s_used",
                   "s_error", "x_comp", "t_level", "v_dc", "region_margin",
                   "region_ok")
    _INT_COLUMNS = {"t_level", "region_ok"}

    def __init__(self, data: np.ndarray, scenario: Scenario, aborted: bool = False):
        self.data = data
        self.scenario = scenario
        self.aborted = aborted
        self._index = {name: i for i, name in enumerate(self.COLUMNS)}

    def __len__(self):
        return self.data.shape[0]

    def col(self, name: str) -> np.ndarray:
        return self.data[:, self._index[name]]

    @property
    def t_di(self) -> float:
        return self.scenario.controller.t_di

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.t_di

    def index_at(self, t: float) -> int:
        k = int(math.floor(t / self.t_di + 0.5))
        return min(max(k, 0), len(self) - 1)

    def window_slice(self, t_start: float, t_end: float) -> slice:
        """Records with t_start <= time < t_end."""
        k0 = int(math.ceil(t_start / self.t_di - 1e-9))
        k1 = int(math.ceil(t_end / self.t_di - 1e-9))
        return slice(max(k0, 0), min(k1, len(self)))

    def to_csv(self, path, decimation: int = 1):
        """Write the fixed-schema CSV (full round-trip float precision)."""
        idx = [self._index[name] for name in self.CSV_COLUMNS]
        is_int = [name in self._INT_COLUMNS for name in self.CSV_COLUMNS]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            for k in range(0, len(self), decimation):
                row = self.data[k]
                cells = []
                for j, i in enumerate(idx):
                    v = row[i]
                    cells.append(str(int(v)) if is_int[j] else repr(float(v)))
                fh.write(",".join(cells) + "\n")


def run(scenario: Scenario, backend: str = None) -> Trace:
    """Execute a scenario and return its Trace.

    Raises AbortedRun (carrying the partial trace) if any sampled value
    goes non-finite.
    """
    sched = compile_schedules(scenario)
    biq = bpf_coeffs(scenario.bandpass)
    n = scenario.n_ticks
    out = np.empty((n, _kernels.NCOL), dtype=np.float64)
    loop = _kernels.get_loop(backend)
    cfg = scenario.controller
    n_valid, aborted = loop(
        n, cfg.t_di, scenario.substeps_per_tick,
        scenario.params.l_f, scenario.params.c_f,
        cfg.lambda_, cfg.eta, cfg.f_bound, cfg.h,
        sched["mode_ticks"], sched["mode_vals"],
        sched["vdc_ticks"], sched["vdc_vals"],
        sched["ref_ticks"], sched["ref_amp"], sched["ref_phase"],
        sched["omega_ref"],
        sched["load_ticks"], sched["load_kind"], sched["load_g"],
        sched["load_ipk"], sched["load_iph"], sched["omega_n"],
        biq.b0, biq.b2, biq.a1, biq.a2,
        scenario.sat_limit, 1 if scenario.bpf_input == "s_used" else 0,
        out,
    )
    trace = Trace(out[:n_valid], scenario, aborted=bool(aborted))
    if aborted:
        raise AbortedRun(
            f"non-finite sample at t={trace.col('time')[-1]!r}", trace)
    return trace


def oracle_step_rk4(state: PlantState, v_dc: float, i_o, dt: float,
                    n_substeps: int, params: InverterParams) -> PlantState:
    """Classical fixed-step RK4 integration of the filter ODE.

    Test oracle, deliberately independent of the exact-step path.  i_o
    is a constant or a callable i_o(t, u_o) evaluated continuously.
    """
    if n_substeps < 1:
        raise InvalidInput("n_substeps must be >= 1")
    if dt < 0.0:
        raise InvalidInput("dt must be >= 0")
    if callable(i_o):
        io_fn = i_o
    else:
        io_fn = lambda t, u_o: i_o
    l_f, c_f = params.l_f, params.c_f
    drive = state.t_level * v_dc

    def rhs(t, y):
        i_f, u_o = y
        return np.array([(drive - u_o) / l_f,
                         (i_f - io_fn(t, u_o)) / c_f])

    h = dt / n_substeps
    y = np.array([state.i_f, state.u_o])
    t = state.time
    for _ in range(n_substeps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return PlantState(i_f=float(y[0]), u_o=float(y[1]),
                      t_level=state.t_level, time=state.time + dt)
