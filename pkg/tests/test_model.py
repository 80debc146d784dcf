"""Plant model tests: derivative formulas, exact stepping vs the RK4
oracle, energy conservation, reference and load evaluation."""

import math

import numpy as np
import pytest

from ssmclab import (InverterParams, InvalidInput, LoadEntry, LoadProgram,
                     PlantState, ReferenceProgram, f_model, load_eval,
                     oracle_step_rk4, plant_derivs, plant_step_exact,
                     reference_eval)
from ssmclab.errors import ConfigError
from ssmclab.model import lc_propagator, step_exact_affine

PARAMS = InverterParams()  # Table defaults: 0.3 mH, 330 uF, 290 V, 50 Hz, 110 V


# -- plant_derivs -------------------------------------------------------------

def test_plant_derivs_full_drive():
    state = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    di, du = plant_derivs(state, 290.0, 0.0, PARAMS)
    assert di == pytest.approx(290.0 / 0.3e-3)  # 966666.7 A/s
    assert du == 0.0


def test_plant_derivs_zero_input_equilibrium():
    state = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    assert plant_derivs(state, 0.0, 0.0, PARAMS) == (0.0, 0.0)


def test_plant_derivs_capacitor_charging():
    state = PlantState(i_f=1.0, u_o=0.0, t_level=1)
    di, du = plant_derivs(state, 0.0, 0.0, PARAMS)
    assert du == pytest.approx(1.0 / 330e-6)  # 3030.3 V/s
    assert di == 0.0


def test_plant_derivs_rejects_non_finite():
    state = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    with pytest.raises(InvalidInput):
        plant_derivs(state, float("nan"), 0.0, PARAMS)


# -- f_model ------------------------------------------------------------------

def test_f_model_origin():
    assert f_model(0.0, 0.0, PARAMS) == 0.0


def test_f_model_voltage_term():
    # 155.6 V * 1/(L_f C_f) with 1/(L_f C_f) = 1.0101e7 s^-2
    assert f_model(155.6, 0.0, PARAMS) == pytest.approx(-155.6 / (0.3e-3 * 330e-6))
    assert f_model(155.6, 0.0, PARAMS) == pytest.approx(-1.5717e9, rel=1e-4)


def test_f_model_current_slope_term():
    assert f_model(0.0, 3300.0, PARAMS) == pytest.approx(-1.0e7)


# -- plant_step_exact ---------------------------------------------------------

def test_quarter_period_lc_oscillation():
    # Unforced LC: after a quarter of the natural period, all the energy
    # in the capacitor has moved into the inductor.
    dt = 0.5 * math.pi * math.sqrt(PARAMS.l_f * PARAMS.c_f)
    state = PlantState(i_f=0.0, u_o=1.0, t_level=1)
    out = plant_step_exact(state, 0.0, 0.0, dt, PARAMS)
    assert out.i_f == pytest.approx(-math.sqrt(PARAMS.c_f / PARAMS.l_f), rel=1e-12)
    assert out.i_f == pytest.approx(-1.0488, rel=1e-4)
    assert out.u_o == pytest.approx(0.0, abs=1e-12)


def test_tiny_step_is_identity():
    state = PlantState(i_f=2.0, u_o=50.0, t_level=-1)
    out = plant_step_exact(state, 290.0, 1.0, 1e-15, PARAMS)
    assert out.i_f == pytest.approx(2.0, rel=1e-9)
    assert out.u_o == pytest.approx(50.0, rel=1e-9)


def test_step_rejects_nonpositive_dt():
    state = PlantState()
    with pytest.raises(InvalidInput):
        plant_step_exact(state, 290.0, 0.0, 0.0, PARAMS)
    with pytest.raises(InvalidInput):
        plant_step_exact(state, 290.0, 0.0, -1e-6, PARAMS)


def test_single_microsecond_step_matches_rk4_oracle():
    state = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    exact = plant_step_exact(state, 290.0, 0.0, 1e-6, PARAMS)
    rk4 = oracle_step_rk4(state, 290.0, 0.0, 1e-6, 1000, PARAMS)
    assert exact.i_f == pytest.approx(rk4.i_f, rel=1e-9)
    assert exact.u_o == pytest.approx(rk4.u_o, rel=1e-9, abs=1e-12)


def test_resistive_fold_matches_rk4_oracle():
    # With g = 1/R the resistor is part of the exact step; the oracle
    # integrates the same coupled ODE via i_o = u_o/R.
    r = 7.5625  # 110 V / 1600 W class resistance
    state = PlantState(i_f=3.0, u_o=40.0, t_level=1)
    exact = plant_step_exact(state, 290.0, 0.0, 50e-6, PARAMS, g=1.0 / r)
    rk4 = oracle_step_rk4(state, 290.0, lambda t, u_o: u_o / r, 50e-6, 2000, PARAMS)
    assert exact.i_f == pytest.approx(rk4.i_f, rel=1e-9)
    assert exact.u_o == pytest.approx(rk4.u_o, rel=1e-9)


def test_exact_step_period_with_switching_matches_rk4():
    # One 50 Hz period under a recorded pseudo-random switching pattern.
    rng = np.random.default_rng(42)
    levels = rng.choice([-1, 1], size=2000)
    dt = 10e-6
    se = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    sr = PlantState(i_f=0.0, u_o=0.0, t_level=1)
    for k, lvl in enumerate(levels):
        i_o = 10.0 * math.sin(2 * math.pi * 50 * k * dt)
        se = PlantState(i_f=se.i_f, u_o=se.u_o, t_level=int(lvl), time=se.time)
        sr = PlantState(i_f=sr.i_f, u_o=sr.u_o, t_level=int(lvl), time=sr.time)
        se = plant_step_exact(se, 290.0, i_o, dt, PARAMS)
        sr = oracle_step_rk4(sr, 290.0, i_o, dt, 100, PARAMS)
    scale = max(abs(sr.i_f), abs(sr.u_o))
    assert abs(se.i_f - sr.i_f) / scale < 1e-6
    assert abs(se.u_o - sr.u_o) / scale < 1e-6


def test_energy_conserved_over_1e6_unforced_steps():
    # Unforced LC oscillation: (L i^2 + C u^2)/2 must be constant.
    prop = lc_propagator(PARAMS.l_f, PARAMS.c_f, 0.0, 1e-6)
    i_f, u_o = 0.3, 5.0
    e0 = 0.5 * (PARAMS.l_f * i_f ** 2 + PARAMS.c_f * u_o ** 2)
    for _ in range(1_000_000):
        i_f, u_o = step_exact_affine(i_f, u_o, 0.0, 0.0, 0.0, prop)
    e1 = 0.5 * (PARAMS.l_f * i_f ** 2 + PARAMS.c_f * u_o ** 2)
    drift = abs(e1 - e0) / e0
    print(f"\n  energy drift over 1e6 steps: {drift:.3e}")
    assert drift < 1e-9


# -- reference_eval -----------------------------------------------------------

def test_reference_at_zero_crossing():
    ref = ReferenceProgram(amplitude=155.56, frequency=50.0)
    x_d, xd_dot, xd_ddot = reference_eval(ref, 0.0)
    assert x_d == 0.0
    assert xd_dot == pytest.approx(155.56 * 2 * math.pi * 50.0)
    assert xd_ddot == 0.0


def test_reference_at_peak():
    ref = ReferenceProgram(amplitude=155.56, frequency=50.0)
    x_d, xd_dot, xd_ddot = reference_eval(ref, 5e-3)
    assert x_d == pytest.approx(155.56)
    assert xd_dot == pytest.approx(0.0, abs=1e-6)
    assert xd_ddot == pytest.approx(-155.56 * (2 * math.pi * 50.0) ** 2)
    assert xd_ddot == pytest.approx(-1.5356e7, rel=1e-3)


def test_reference_step_is_instantaneous():
    ref = ReferenceProgram(amplitude=155.56, frequency=50.0,
                           steps=((0.2, 0.5, 0.0),))
    x_before = reference_eval(ref, 0.2 - 1e-9)[0]
    x_at = reference_eval(ref, 0.2)[0]
    assert x_at == pytest.approx(0.5 * x_before, abs=1e-4)


def test_reference_derivatives_match_finite_differences():
    ref = ReferenceProgram(amplitude=155.56, frequency=50.0, phase=0.7)
    for t in (1e-3, 4.2e-3, 13e-3):
        x0, xd_dot, xd_ddot = reference_eval(ref, t)
        d = 1e-9
        fd1 = (reference_eval(ref, t + d)[0] - reference_eval(ref, t - d)[0]) / (2 * d)
        assert fd1 == pytest.approx(xd_dot, rel=1e-4)
        # second differences need a wider stencil to stay above rounding
        d2 = 1e-6
        fd2 = (reference_eval(ref, t + d2)[0] - 2 * x0
               + reference_eval(ref, t - d2)[0]) / d2 ** 2
        assert fd2 == pytest.approx(xd_ddot, rel=1e-4)


def test_reference_schedule_must_increase():
    with pytest.raises(ConfigError):
        ReferenceProgram(amplitude=1.0, frequency=50.0,
                         steps=((0.2, 0.5, 0.0), (0.2, 1.0, 0.0)))


# -- load_eval ----------------------------------------------------------------

def test_load_none():
    assert load_eval(LoadProgram(), 0.1, 100.0, 5.0) == (0.0, 0.0)


def test_load_resistive_ohms_law():
    load = LoadProgram(base=LoadEntry(kind="resistive", r=10.0))
    i_o, di_o = load_eval(load, 0.0, 100.0, 0.0)
    assert i_o == pytest.approx(10.0)
    assert di_o == 0.0


def test_load_phasor_magnitude_and_phase():
    load = LoadProgram(base=LoadEntry(kind="phasor_sink", p_w=1600.0, q_var=800.0),
                       v_n_rms=110.0, omega_n=2 * math.pi * 50.0)
    i_pk, phase = load.phasor_terms(load.base)
    assert i_pk == pytest.approx(math.hypot(1600.0, 800.0) * math.sqrt(2) / 110.0)
    assert i_pk == pytest.approx(23.0, abs=0.01)
    assert phase == pytest.approx(-math.atan2(800.0, 1600.0))
    assert math.degrees(phase) == pytest.approx(-26.57, abs=0.01)


def test_load_phasor_derivative_matches_finite_difference():
    load = LoadProgram(base=LoadEntry(kind="phasor_sink", p_w=1600.0, q_var=800.0),
                       v_n_rms=110.0, omega_n=2 * math.pi * 50.0)
    for t in (0.0, 1.3e-3, 7.7e-3):
        i_o, di_o = load_eval(load, t, 0.0, 0.0)
        d = 1e-7
        fd = (load_eval(load, t + d, 0.0, 0.0)[0]
              - load_eval(load, t - d, 0.0, 0.0)[0]) / (2 * d)
        assert fd == pytest.approx(di_o, rel=1e-4, abs=1e-3)


def test_load_resistive_requires_positive_r():
    with pytest.raises(ConfigError):
        LoadEntry(kind="resistive", r=0.0)


def test_params_invariants():
    with pytest.raises(ConfigError):
        InverterParams(l_f=0.0)
    with pytest.raises(ConfigError):
        InverterParams(c_f=-1e-6)
    with pytest.raises(ConfigError):
        InverterParams(f_n=0.0)
