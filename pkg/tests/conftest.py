from __future__ import annotations

import numpy as np
import pytest

from gmshadow.integrate import IntegratorConfig
from gmshadow.params import validate_params
from gmshadow.scenarios import GeometrySpec, InitialSpec, ScenarioConfig


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def make_scenario(name, params, *, kind="interval", points=64, length=1.0,
                  dimension=3, initial=None, scheme="imex-cn", t_end=1.0,
                  snapshot_times=(), record_cadence=1, delta_diag=0.01,
                  **integrator_kw):
    """Compact scenario builder for tests."""
    integrator_kw.setdefault("steady_tol", 1e-300)
    return ScenarioConfig(
        name=name,
        params=validate_params(*params) if isinstance(params, tuple) else params,
        geometry=GeometrySpec(kind=kind, points=points, length=length,
                              dimension=dimension),
        initial=initial or InitialSpec(type="constant", value=1.0),
        integrator=IntegratorConfig(scheme=scheme, **integrator_kw),
        t_end=t_end,
        record_cadence=record_cadence,
        snapshot_times=tuple(snapshot_times),
        delta_diag=delta_diag,
    )
