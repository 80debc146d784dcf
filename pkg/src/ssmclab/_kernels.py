"""Hot simulation loop.

One function holds the whole closed loop (decision ticks, exact plant
substeps, region bookkeeping).  It is compiled with numba when
available; setting the environment variable SSMCLAB_BACKEND=python
selects the uncompiled twin.  Both paths execute the same code object,
so traces are expected to match bit for bit.
"""

from __future__ import annotations

import math
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

# Column layout of the trace array (engine.Trace mirrors this).
COLUMNS = (
    "time", "u_o", "i_f", "i_o", "x_d", "xd_dot", "xd_ddot", "di_o_dt",
    "s_raw", "s_used", "s_error", "x_comp", "x_comp_dot", "t_level",
    "v_dc", "region_lhs", "region_margin", "region_margin_state",
    "region_ok", "region_deduction",
)
NCOL = len(COLUMNS)

MODE_SMC = 0
MODE_SSMC = 1
MODE_IDEAL = 2

LOAD_NONE = 0
LOAD_RESISTIVE = 1
LOAD_PHASOR = 2


def simulate_loop(
    n_ticks, t_di, substeps,
    l_f, c_f,
    lam, eta, f_bound, h,
    mode_ticks, mode_vals,
    vdc_ticks, vdc_vals,
    ref_ticks, ref_amp, ref_phase, omega_ref,
    load_ticks, load_kind, load_g, load_ipk, load_iph, omega_n,
    b0, b2, a1, a2, sat_limit, bpf_on_used,
    out,
):
    """Run the closed loop for n_ticks decision intervals.

    Returns (records_written, aborted) where aborted is 1 when a
    non-finite sample stopped the run early.
    """
    inv_lc = 1.0 / (l_f * c_f)
    dt_sub = t_di / substeps
    comp_decay = math.exp(-lam * t_di)

    def propagator(g):
        # exp(A*dt_sub) entries for A = [[0, -1/L], [1/C, -g/C]]
        a12 = -1.0 / l_f
        a21 = 1.0 / c_f
        a22 = -g / c_f
        mu = 0.5 * a22
        disc = mu * mu - inv_lc
        if disc < 0.0:
            nu = math.sqrt(-disc)
            cosv = math.cos(nu * dt_sub)
            sincv = math.sin(nu * dt_sub) / nu
        elif disc > 0.0:
            nu = math.sqrt(disc)
            cosv = math.cosh(nu * dt_sub)
            sincv = math.sinh(nu * dt_sub) / nu
        else:
            cosv = 1.0
            sincv = dt_sub
        e = math.exp(mu * dt_sub)
        return (e * (cosv - sincv * mu),
                e * sincv * a12,
                e * sincv * a21,
                e * (cosv + sincv * (a22 - mu)))

    i_f = 0.0
    u_o = 0.0
    level = 1
    z1 = 0.0
    z2 = 0.0
    x_comp = 0.0
    bpf_in_prev = 0.0
    reach_t0 = 0.0
    reach_s0 = 0.0

    p_mode = 0
    p_vdc = 0
    p_ref = 0
    p_load = 0
    mode = mode_vals[0]
    v_dc = vdc_vals[0]
    amp = ref_amp[0]
    phase = ref_phase[0]
    kind = load_kind[0]
    g = load_g[0]
    ipk = load_ipk[0]
    iph = load_iph[0]
    prop11, prop12, prop21, prop22 = propagator(g)

    for k in range(n_ticks):
        t = k * t_di

        event_here = k == 0
        while p_mode + 1 < len(mode_ticks) and mode_ticks[p_mode + 1] <= k:
            p_mode += 1
            mode = mode_vals[p_mode]
            event_here = True
        while p_vdc + 1 < len(vdc_ticks) and vdc_ticks[p_vdc + 1] <= k:
            p_vdc += 1
            v_dc = vdc_vals[p_vdc]
            event_here = True
        while p_ref + 1 < len(ref_ticks) and ref_ticks[p_ref + 1] <= k:
            p_ref += 1
            amp = ref_amp[p_ref]
            phase = ref_phase[p_ref]
            event_here = True
        while p_load + 1 < len(load_ticks) and load_ticks[p_load + 1] <= k:
            p_load += 1
            kind = load_kind[p_load]
            g = load_g[p_load]
            ipk = load_ipk[p_load]
            iph = load_iph[p_load]
            prop11, prop12, prop21, prop22 = propagator(g)
            event_here = True

        arg = omega_ref * t + phase
        sin_a = math.sin(arg)
        cos_a = math.cos(arg)
        x_d = amp * sin_a
        xd_dot = amp * omega_ref * cos_a
        xd_ddot = -amp * omega_ref * omega_ref * sin_a

        if kind == LOAD_RESISTIVE:
            i_o = g * u_o
            di_o = g * (i_f - i_o) / c_f
        elif kind == LOAD_PHASOR:
            larg = omega_n * t + iph
            i_o = ipk * math.sin(larg)
            di_o = ipk * omega_n * math.cos(larg)
        else:
            i_o = 0.0
            di_o = 0.0

        x_dot = (i_f - i_o) / c_f

        if mode == MODE_SSMC:
            u_in = bpf_in_prev
            if u_in > sat_limit:
                u_in = sat_limit
            elif u_in < -sat_limit:
                u_in = -sat_limit
            s_err = b0 * u_in + z1
            z1 = -a1 * s_err + z2
            z2 = b2 * u_in - a2 * s_err
            x_comp = x_comp * comp_decay + (s_err / lam) * (1.0 - comp_decay)
            x_comp_dot = s_err - lam * x_comp
        else:
            s_err = 0.0
            x_comp = 0.0
            x_comp_dot = 0.0

        s_raw = (x_dot - xd_dot) + lam * (u_o - x_d)
        s_used = s_raw + (x_comp_dot + lam * x_comp)
        if bpf_on_used == 1:
            bpf_in_prev = s_used
        else:
            bpf_in_prev = s_raw

        if mode == MODE_IDEAL:
            f_hat = -u_o * inv_lc - di_o / c_f
            if s_used > 0.0:
                sgn = 1.0
            elif s_used < 0.0:
                sgn = -1.0
            else:
                sgn = 0.0
            u_cmd = -f_hat + xd_ddot - lam * (x_dot - xd_dot) - (f_bound + eta) * sgn
            drive = u_cmd * l_f * c_f
            if drive > v_dc:
                drive = v_dc
            elif drive < -v_dc:
                drive = -v_dc
            level = 1 if drive >= 0.0 else -1
        else:
            if s_used > h:
                level = -1
            elif s_used < -h:
                level = 1
            drive = level * v_dc

        lhs16 = abs(xd_ddot + u_o * inv_lc + di_o / c_f)
        x_tilde_dot = (x_dot - xd_dot) + x_comp_dot
        lhs9 = abs(xd_ddot + u_o * inv_lc + di_o / c_f + lam * x_tilde_dot)

        if event_here:
            # reaching window re-opens at start-up and at discrete events
            reach_t0 = t
            reach_s0 = abs(s_used)
        ded = reach_s0 - eta * (t - reach_t0)
        if ded < 0.0:
            ded = 0.0
        ded = 2.0 * lam * ded

        margin16 = (v_dc * inv_lc - (f_bound + 2.0 * eta) - ded) - lhs16
        margin9 = (v_dc * inv_lc - (f_bound + eta)) - lhs9

        out[k, 0] = t
        out[k, 1] = u_o
        out[k, 2] = i_f
        out[k, 3] = i_o
        out[k, 4] = x_d
        out[k, 5] = xd_dot
        out[k, 6] = xd_ddot
        out[k, 7] = di_o
        out[k, 8] = s_raw
        out[k, 9] = s_used
        out[k, 10] = s_err
        out[k, 11] = x_comp
        out[k, 12] = x_comp_dot
        out[k, 13] = level
        out[k, 14] = v_dc
        out[k, 15] = lhs16
        out[k, 16] = margin16
        out[k, 17] = margin9
        out[k, 18] = 1.0 if margin16 >= 0.0 else 0.0
        out[k, 19] = ded

        if not (math.isfinite(u_o) and math.isfinite(i_f)
                and math.isfinite(s_raw) and math.isfinite(s_used)
                and math.isfinite(x_comp)):
            return k + 1, 1

        for _ in range(substeps):
            if kind == LOAD_PHASOR:
                # current held constant across each substep
                eq_i = ipk * math.sin(omega_n * t + iph)
            elif kind == LOAD_RESISTIVE:
                eq_i = drive * g
            else:
                eq_i = 0.0
            di = i_f - eq_i
            du = u_o - drive
            i_f = eq_i + prop11 * di + prop12 * du
            u_o = drive + prop21 * di + prop22 * du
            t += dt_sub

    return n_ticks, 0


_env = os.environ.get("SSMCLAB_BACKEND", "").strip().lower()
if numba is not None and _env != "python":
    simulate_loop_jit = numba.njit(cache=True, nogil=True)(simulate_loop)
    DEFAULT_BACKEND = "numba"
else:  # pure-python fallback
    simulate_loop_jit = None
    DEFAULT_BACKEND = "python"


def get_loop(backend=None):
    """Resolve a backend name to the callable loop implementation."""
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "numba":
        if simulate_loop_jit is None:
            raise RuntimeError("numba backend requested but not available")
        return simulate_loop_jit
    if backend == "python":
        return simulate_loop
    raise ValueError(f"unknown backend {backend!r}")
