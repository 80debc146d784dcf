"""Voltage precision region: runtime predicate and boundary solvers.

The state-free predicate compares the instantaneous acceleration demand

    lhs = | xd_ddot + u_o/(L_f C_f) + (di_o/dt)/C_f |

against the available authority minus static and transient deductions

    rhs = v_dc/(L_f C_f) - (F + 2*eta) - 2*lambda*max(0, s_t0 - eta*(t - t0))

where (t0, s_t0) anchor the active reaching window.  The transient term
relaxes linearly to zero and vanishes for t - t0 >= s_t0/eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .controller import ControllerConfig
from .model import InverterParams, LoadProgram, ReferenceProgram, load_eval, reference_eval


@dataclass(frozen=True)
class PrecisionReport:
    """Evaluation of the precision predicate at one tick."""

    lhs: float
    rhs_static: float
    rhs_transient_deduction: float
    margin: float
    satisfied: bool
    time: float
    lhs_state_form: float = float("nan")  # variant with lambda*x_tilde_dot explicit
    margin_state_form: float = float("nan")


def region_lhs(xd_ddot: float, u_o: float, di_o_dt: float,
               params: InverterParams) -> float:
    """|xd_ddot + u_o/(L_f C_f) + (di_o/dt)/C_f| in V/s^2."""
    return abs(xd_ddot + u_o * params.inv_lc + di_o_dt / params.c_f)


def region_rhs(v_dc: float, f_bound: float, eta: float, lambda_: float,
               s_t0: float, t: float, t0: float,
               params: InverterParams) -> float:
    """Authority minus static (F + 2*eta) and transient reaching deductions."""
    remaining = abs(s_t0) - eta * (t - t0)
    if remaining < 0.0:
        remaining = 0.0
    return v_dc * params.inv_lc - (f_bound + 2.0 * eta) - 2.0 * lambda_ * remaining


def transient_deduction(lambda_: float, eta: float, s_t0: float, t: float,
                        t0: float) -> float:
    """The 2*lambda*max(0, |s_t0| - eta*(t - t0)) term on its own."""
    remaining = abs(s_t0) - eta * (t - t0)
    if remaining < 0.0:
        remaining = 0.0
    return 2.0 * lambda_ * remaining


def region_check(time, u_o, xd_ddot, di_o_dt, v_dc, x_tilde_dot,
                 context, params: InverterParams,
                 cfg: ControllerConfig) -> PrecisionReport:
    """Populate a PrecisionReport for one sample.

    ``context`` is the reaching context (s_t0, t0).  Both the state-free
    form (which decides ``satisfied``) and the explicit-state form with
    the lambda*x_tilde_dot term are evaluated so their conservatism can
    be compared on traces.
    """
    s_t0, t0 = context
    lhs = region_lhs(xd_ddot, u_o, di_o_dt, params)
    ded = transient_deduction(cfg.lambda_, cfg.eta, s_t0, time, t0)
    rhs_static = v_dc * params.inv_lc - (cfg.f_bound + 2.0 * cfg.eta)
    margin = (rhs_static - ded) - lhs
    lhs_state = abs(xd_ddot + u_o * params.inv_lc + di_o_dt / params.c_f
                    + cfg.lambda_ * x_tilde_dot)
    margin_state = (v_dc * params.inv_lc - (cfg.f_bound + cfg.eta)) - lhs_state
    return PrecisionReport(
        lhs=lhs,
        rhs_static=rhs_static,
        rhs_transient_deduction=ded,
        margin=margin,
        satisfied=margin >= 0.0,
        time=time,
        lhs_state_form=lhs_state,
        margin_state_form=margin_state,
    )


def max_required_acceleration(params: InverterParams, ref: ReferenceProgram,
                              load: LoadProgram, scan_dt: float = 10e-6) -> float:
    """Numeric maximum of the lhs over one fundamental period.

    Perfect-tracking proxy: u_o is replaced by x_d, so the boundary can
    be evaluated before any closed-loop run.
    """
    period = 1.0 / ref.frequency
    n = max(1, int(round(period / scan_dt)))
    worst = 0.0
    for k in range(n):
        t = k * (period / n)
        x_d, xd_dot, xd_ddot = reference_eval(ref, t)
        _, di_o_dt = load_eval(load, t, x_d, xd_dot)
        lhs = region_lhs(xd_ddot, x_d, di_o_dt, params)
        if lhs > worst:
            worst = lhs
    return worst


def min_vdc(params: InverterParams, ref: ReferenceProgram, load: LoadProgram,
            f_bound: float = 0.0, eta: float = 0.0,
            scan_dt: float = 10e-6) -> float:
    """Steady-state dc-link floor: L_f*C_f*(max lhs + F + 2*eta)."""
    lhs_max = max_required_acceleration(params, ref, load, scan_dt)
    return params.l_f * params.c_f * (lhs_max + f_bound + 2.0 * eta)


def min_vdc_discrete(params: InverterParams, ref: ReferenceProgram,
                     load: LoadProgram, cfg: ControllerConfig,
                     scan_dt: float = 10e-6) -> float:
    """Dc-link floor including the digital chatter allowance.

    With decisions every t_di the sampled |s| overshoots the band by up
    to |s_dot|*t_di = (lhs + v_dc/(L_f C_f))*t_di, which enters the
    predicate through the transient term 2*lambda*excess.  Solving

        v/(LC) - (F + 2*eta) - 2*lambda*(lhs + v/(LC))*t_di >= lhs

    for v gives the closed form below.  This is the boundary the sampled
    relay actually exhibits; the static min_vdc is its t_di -> 0 limit.
    """
    k = 2.0 * cfg.lambda_ * cfg.t_di
    if k >= 1.0:
        return float("inf")
    lhs_max = max_required_acceleration(params, ref, load, scan_dt)
    lc = params.l_f * params.c_f
    return lc * (lhs_max * (1.0 + k) + cfg.f_bound + 2.0 * cfg.eta) / (1.0 - k)


def paper_margin_vdc(params: InverterParams, margin_v_rms: float = 20.0) -> float:
    """Engineering headroom recipe: (V_n + margin) * sqrt(2).

    With the default 20 V RMS headroom and V_n = 110 V this is the
    documented 181 V-class dc-link floor (exact arithmetic gives 183.8;
    the published rounding is looser than the recipe).
    """
    return (params.v_n_rms + margin_v_rms) * math.sqrt(2.0)
