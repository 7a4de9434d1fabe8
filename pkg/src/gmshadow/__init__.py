"""Numerical laboratory for the non-local activator equation

    u_t = Laplace(u) - u + u^p / (avg(u^r))^gamma

with homogeneous Neumann boundary conditions on an interval or a radial ball:
regime classification, linear stability, invariant-region diagnostics, spiky
initial data and blow-up analytics, driven by a scenario CLI.
"""
from .params import (ModelParams, RegimeReport, classify_regime, integrate_kinetic,
                     kinetic_rhs, validate_params)
from .grid import Grid, average_power, build_grid, laplacian_apply, nonlocal_rhs
from .initial import constant_data, perturbed_constant, spiky_data
from .spectral import linearized_spectrum, neumann_eigenpairs, quadratic_form
from .integrate import IntegratorConfig, SimState, propose_dt, run, step
from .diagnostics import (BlowUpReport, DiagnosticsRecord, blowup_set_check,
                          check_monotone_bounds, compute_record, fit_blowup,
                          profile_extract, region_state)
from .scenarios import ScenarioConfig, load_config, preset

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "RegimeReport", "classify_regime", "integrate_kinetic",
    "kinetic_rhs", "validate_params",
    "Grid", "average_power", "build_grid", "laplacian_apply", "nonlocal_rhs",
    "constant_data", "perturbed_constant", "spiky_data",
    "linearized_spectrum", "neumann_eigenpairs", "quadratic_form",
    "IntegratorConfig", "SimState", "propose_dt", "run", "step",
    "BlowUpReport", "DiagnosticsRecord", "blowup_set_check",
    "check_monotone_bounds", "compute_record", "fit_blowup",
    "profile_extract", "region_state",
    "ScenarioConfig", "load_config", "preset",
    "__version__",
]
