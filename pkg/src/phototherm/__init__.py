"""Exciton-mediated photothermal cooling of a membrane in an optical cavity."""
from .params import (
    SystemParams,
    coupling_from_absorption,
    desk_params,
    load_config,
    omega_ratio,
    parse_config,
    serialize_config,
    dataset_params,
)
from .steadystate import absorbed_fraction, mean_fields, output_field
from .cooling import kappa_rp, kappa_th, sweep
from .dynamics import build_drift, effective_mode, fit_damping, simulate_ringdown, susceptibility

__version__ = "0.1.0"
