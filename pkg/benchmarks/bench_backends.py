#!/usr/bin/env python3
"""Compare the numba-compiled simulation loop against the pure-python
fallback on a representative closed-loop scenario.

Usage: python benchmarks/bench_backends.py [--duration 0.1] [--repeats 3]
"""

import argparse
import time

import numpy as np

from ssmclab import (ControllerConfig, Event, InverterParams, LoadEntry,
                     LoadProgram, ReferenceProgram, Scenario, run)
from ssmclab._kernels import DEFAULT_BACKEND, simulate_loop_jit


def scenario(duration):
    params = InverterParams()
    return Scenario(
        params=params,
        controller=ControllerConfig(mode="ssmc", t_di=10e-6),
        reference=ReferenceProgram(amplitude=params.v_n_peak, frequency=50.0),
        load=LoadProgram(base=LoadEntry(kind="phasor_sink", p_w=1600.0, q_var=800.0),
                         v_n_rms=110.0, omega_n=params.omega_n),
        vdc0=400.0,
        events=(Event(duration / 2, "vdc_set", 250.0),),
        duration=duration,
    )


def bench(backend, sc, repeats):
    times = []
    trace = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace = run(sc, backend=backend)
        times.append(time.perf_counter() - t0)
    return min(times), trace


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--duration", type=float, default=0.1)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    sc = scenario(args.duration)
    n_steps = sc.n_ticks * sc.substeps_per_tick
    print(f"scenario: {sc.n_ticks} ticks x {sc.substeps_per_tick} substeps "
          f"= {n_steps} exact plant steps")

    if simulate_loop_jit is not None:
        run(sc, backend="numba")  # compile outside the timed region
        t_nb, tr_nb = bench("numba", sc, args.repeats)
        print(f"numba   : {t_nb * 1e3:9.2f} ms   ({n_steps / t_nb / 1e6:7.1f} Msteps/s)")
    else:
        t_nb, tr_nb = None, None
        print(f"numba   : unavailable (default backend: {DEFAULT_BACKEND})")

    t_py, tr_py = bench("python", sc, args.repeats)
    print(f"python  : {t_py * 1e3:9.2f} ms   ({n_steps / t_py / 1e6:7.1f} Msteps/s)")

    if t_nb is not None:
        print(f"speedup : {t_py / t_nb:9.1f}x")
        drift = np.max(np.abs(tr_nb.col("u_o") - tr_py.col("u_o")))
        print(f"max |u_o| difference between backends: {drift:.3e} V")


if __name__ == "__main__":
    main()
