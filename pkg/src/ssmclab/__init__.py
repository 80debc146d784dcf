"""Simulation lab for hysteresis sliding-mode voltage control of a
single-phase grid-forming inverter with a voltage precision region and
line-frequency asymmetry compensation."""

__version__ = "0.1.0"

from .analysis import MetricWindow, asymmetry_index, error_envelope, fundamental_component, reaching_time
from .compensator import BandPassConfig, BiquadState, CompensatorState, bpf_coeffs, bpf_step, comp_update, saturate
from .controller import ControllerConfig, SlidingSample, controller_tick, hysteresis_decide, ideal_control, s_dot_diag, sliding_value
from .engine import Event, Scenario, Trace, oracle_step_rk4, run
from .errors import AbortedRun, ConfigError, InvalidInput, InvalidWindow, NotReached, SchedulingError, SimError
from .model import (InverterParams, LoadEntry, LoadProgram, PlantState,
                    ReferenceProgram, f_model, load_eval, plant_derivs,
                    plant_step_exact, reference_eval)
from .region import (PrecisionReport, min_vdc, min_vdc_discrete,
                     paper_margin_vdc, region_check, region_lhs, region_rhs)

__all__ = [name for name in dir() if not name.startswith("_")]
