"""Trace metrics: single-bin fundamental amplitude, reaching time,
error envelope, and the asymmetry index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidWindow, NotReached

REACH_DWELL_TICKS = 5


@dataclass(frozen=True)
class MetricWindow:
    """Half-open analysis window [t_start, t_end)."""

    t_start: float
    t_end: float

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise InvalidWindow(f"empty window [{self.t_start}, {self.t_end})")

    @property
    def span(self) -> float:
        return self.t_end - self.t_start


def fundamental_component(series, f: float, sample_rate: float,
                          window: MetricWindow = None) -> float:
    """Single-bin DFT amplitude (2/N scaling) at frequency f.

    ``series`` is uniformly sampled at ``sample_rate``; the window (or
    the whole series) must span an integer number of periods of f, which
    makes the bin orthogonal to dc and to all other harmonics.
    """
    x = np.asarray(series, dtype=np.float64)
    if window is not None:
        k0 = int(round(window.t_start * sample_rate))
        k1 = int(round(window.t_end * sample_rate))
        x = x[k0:k1]
        span = window.span
    else:
        span = len(x) / sample_rate
    if sample_rate <= 2.0 * f:
        raise InvalidInput(f"sample rate {sample_rate} too low for f={f}")
    cycles = span * f
    if abs(cycles - round(cycles)) > 1e-6 or round(cycles) < 1:
        raise InvalidWindow(
            f"window of {span} s spans {cycles} periods of {f} Hz; "
            "an integer count is required")
    n = len(x)
    k = np.arange(n)
    phase = 2.0 * math.pi * f * k / sample_rate
    return (2.0 / n) * abs(np.sum(x * np.exp(-1j * phase)))


def reaching_time(trace, t_event: float, h: float,
                  dwell: int = REACH_DWELL_TICKS) -> float:
    """Time after t_event until |s_used| stays <= h for ``dwell`` ticks.

    A single band-crossing sample does not count as reached; the window
    [dt, dt + dwell*t_di] must lie entirely inside the band.  Raises
    NotReached (carrying the max remaining |s|) if that never happens.
    """
    s = np.abs(trace.col("s_used"))
    k_event = trace.index_at(t_event)
    tail = s[k_event:]
    if len(tail) == 0:
        raise NotReached("event past end of trace", 0.0)
    inside = tail <= h
    need = dwell + 1
    if len(inside) >= need:
        windows = np.lib.stride_tricks.sliding_window_view(inside, need)
        hits = np.nonzero(windows.all(axis=1))[0]
        if len(hits):
            return float(hits[0]) * trace.t_di
    raise NotReached(
        f"|s_used| never dwelled inside the band after t={t_event}",
        float(np.max(tail)))


def error_envelope(trace, window: MetricWindow) -> float:
    """max |u_o - x_d| over the window."""
    sl = trace.window_slice(window.t_start, window.t_end)
    err = trace.col("u_o")[sl] - trace.col("x_d")[sl]
    if err.size == 0:
        raise InvalidWindow("window contains no records")
    return float(np.max(np.abs(err)))


def asymmetry_index(trace, window: MetricWindow) -> float:
    """50 Hz single-bin amplitude of s_raw, normalized by the band h."""
    sl = trace.window_slice(window.t_start, window.t_end)
    f_n = trace.scenario.params.f_n
    amp = fundamental_component(trace.col("s_raw")[sl], f_n, trace.sample_rate)
    return amp / trace.scenario.controller.h


def chatter_band(trace, t_start: float = None, t_end: float = None) -> float:
    """Steady-chatter envelope h + max adjacent |ds| over a trace window.

    At coarse decision intervals the sampled |s| overshoots the band by
    up to one tick of slew every switching cycle, so dwell-style checks
    need this envelope rather than the raw band.
    """
    if t_end is None:
        t_end = float(trace.col("time")[-1]) + trace.t_di
    if t_start is None:
        t_start = max(0.0, t_end - 0.1 * (t_end - float(trace.col("time")[0])))
    sl = trace.window_slice(t_start, t_end)
    s = trace.col("s_used")[sl]
    if len(s) < 2:
        raise InvalidWindow("need at least two records for the chatter band")
    slew = float(np.max(np.abs(np.diff(s))))
    return trace.scenario.controller.h + slew
