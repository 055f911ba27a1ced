"""Outage probability of dual-hop AF NOMA with MRT/RAS over Nakagami-m fading."""

from .analytic import (
    NumericalInstabilityWarning,
    QuadratureError,
    SystemScenario,
    decode_targets,
    diversity_array_gain,
    error_floor,
    make_scenario,
    op_asymptotic,
    op_bounds,
    op_closed_form,
    op_oma,
    op_quadrature,
    oma_threshold,
    outage_report,
)
from .config import ConfigError, SweepSpec, load_config
from .simulator import estimate_op, estimate_op_grid, run_trial
from .sweep import run_sweep

__version__ = "0.1.0"
