from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmshadow.params import (BOUNDARY_TOL, ParameterError, classify_regime,
                             integrate_kinetic, kinetic_rhs, validate_params)


def exponents(draw_bounds=(1.0001, 8.0)):
    return st.tuples(
        st.floats(*draw_bounds),
        st.floats(0.01, 8.0),
        st.floats(0.01, 8.0),
        st.floats(-0.99, 4.0),
    )


class TestValidate:
    def test_derived_indices(self):
        mp = validate_params(2, 1, 1, 0)
        assert mp.gamma == 1.0 and mp.rho_index == 1.0
        mp = validate_params(4, 3.5, 1, 0)
        assert mp.gamma == 3.5 and mp.rho_index == 3.0

    @pytest.mark.parametrize("bad,msg", [
        ((0.5, 1, 1, 0), "p must exceed 1"),
        ((2, -1, 1, 0), "q must be positive"),
        ((2, 1, 0, 0), "r must be positive"),
        ((2, 1, 1, -1), "s must exceed -1"),
        ((float("nan"), 1, 1, 0), "finite"),
    ])
    def test_rejects_out_of_range(self, bad, msg):
        with pytest.raises(ParameterError, match=msg):
            validate_params(*bad)

    @given(exponents())
    @settings(max_examples=200, deadline=None)
    def test_derived_fields_consistent(self, pqrs):
        mp = validate_params(*pqrs)
        assert mp.gamma == mp.q / (mp.s + 1)
        assert mp.rho_index == (mp.p - 1) / mp.r


class TestClassify:
    def test_anti_turing_with_ode_tag(self):
        rep = classify_regime(validate_params(3, 1, 1, 0))
        assert rep.anti_turing and not rep.turing and not rep.boundary
        assert "ode-blowup" in [t.name for t in rep.theorem_tags]

    def test_turing_with_spiky_tag(self):
        rep = classify_regime(validate_params(4, 3.5, 1, 0), dimension=3)
        assert rep.turing
        tag = {t.name: t for t in rep.theorem_tags}["ddi-spiky"]
        # 2/3 < (p-1)/r = 3 < gamma = 3.5 and p = 4 > N/(N-2) = 3
        assert all(c.holds for c in tag.checks)

    def test_boundary_has_no_strict_tag(self):
        rep = classify_regime(validate_params(2, 1, 1, 0))
        assert rep.boundary and not rep.turing and not rep.anti_turing
        assert rep.net_exponent == pytest.approx(1.0, abs=BOUNDARY_TOL)

    def test_dimension_gated_tags_need_dimension(self):
        rep = classify_regime(validate_params(4, 3.5, 1, 0))
        assert "ddi-spiky" not in [t.name for t in rep.theorem_tags]

    @given(exponents())
    @settings(max_examples=300, deadline=None)
    def test_trichotomy(self, pqrs):
        rep = classify_regime(validate_params(*pqrs))
        assert sum([rep.turing, rep.anti_turing, rep.boundary]) == 1

    @given(exponents(), st.integers(1, 6))
    @settings(max_examples=200, deadline=None)
    def test_tags_reevaluate_true(self, pqrs, dim):
        rep = classify_regime(validate_params(*pqrs), dimension=dim)
        for tag in rep.theorem_tags:
            assert all(c.holds for c in tag.checks), tag


class TestKinetics:
    def test_fixed_point_at_one(self):
        for pqrs in [(2, 1, 1, 0), (3, 1, 1, 0), (4, 3.5, 1, 0), (1.5, 0.5, 4, 0)]:
            assert kinetic_rhs(1.0, validate_params(*pqrs)) == 0.0

    def test_rhs_values(self):
        assert kinetic_rhs(2.0, validate_params(3, 1, 1, 0)) == pytest.approx(2.0)
        # p - r*gamma = 0: rhs(4) = -4 + 1
        assert kinetic_rhs(4.0, validate_params(2, 1, 2, 0)) == pytest.approx(-3.0)

    def test_rejects_nonpositive_state(self):
        with pytest.raises(ParameterError):
            kinetic_rhs(0.0, validate_params(3, 1, 1, 0))

    def test_equilibrium_orbit_is_constant(self):
        res = integrate_kinetic(1.0, validate_params(3, 1, 1, 0), 5.0)
        assert res.blowup_time is None
        assert np.max(np.abs(res.u - 1.0)) < 1e-10

    @pytest.mark.parametrize("u0", [1.5, 2.0, 4.0])
    def test_blowup_time_matches_logistic_closed_form(self, u0):
        # u' = u(u-1) escapes at T = ln(u0/(u0-1))
        res = integrate_kinetic(u0, validate_params(3, 1, 1, 0), 10.0)
        assert res.blowup_time is not None
        assert res.blowup_time == pytest.approx(math.log(u0 / (u0 - 1)), abs=1e-6)

    def test_sublinear_orbit_relaxes_to_one(self):
        # p - r*gamma = 1/2, so v = sqrt(u) obeys v' = (1 - v)/2 exactly:
        # u(t) = (1 + (sqrt(u0) - 1) e^(-t/2))^2
        res = integrate_kinetic(2.0, validate_params(4, 3.5, 1, 0), 20.0)
        assert res.blowup_time is None
        exact10 = (1.0 + (math.sqrt(2.0) - 1.0) * math.exp(-5.0)) ** 2
        assert float(res.at(10.0)) == pytest.approx(exact10, abs=1e-9)
        assert abs(float(res.at(20.0)) - 1.0) < 1e-4
        assert np.all(np.diff(res.u) <= 1e-12)

    def test_turing_side_never_blows_up_and_contracts(self):
        # under p - r*gamma < 1 the distance to 1 shrinks with the horizon
        for pqrs, u0 in [((4, 3.5, 1, 0), 5.0), ((2, 1, 2, 0), 0.2), ((1.5, 0.5, 4, 0), 3.0)]:
            mp = validate_params(*pqrs)
            res = integrate_kinetic(u0, mp, 12.0)
            assert res.blowup_time is None
            gaps = [abs(res.at(t) - 1.0) for t in (2.0, 6.0, 12.0)]
            assert gaps[0] > gaps[1] > gaps[2]
