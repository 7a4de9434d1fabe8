from __future__ import annotations

import math

import numpy as np
import pytest

from gmshadow.grid import GridError, build_grid
from gmshadow.params import validate_params
from gmshadow.spectral import (linearized_spectrum, measure_growth_rate,
                               neumann_eigenpairs, perturbation_amplitude,
                               quadratic_form)


class TestEigenpairs:
    def test_interval_unit_length(self):
        g = build_grid("interval", 201, extent=1.0)
        eig = neumann_eigenpairs(g, 3)
        expected = np.array([0.0, math.pi ** 2, 4 * math.pi ** 2])
        assert eig.mu_squared[0] <= 1e-10
        assert np.abs(eig.mu_squared - expected).max() < 40 * g.h ** 2 * math.pi ** 4

    def test_interval_two_pi(self):
        g = build_grid("interval", 201, extent=2 * math.pi)
        eig = neumann_eigenpairs(g, 2)
        assert eig.mu_squared[1] == pytest.approx(0.25, rel=1e-3)

    def test_ball_second_eigenvalue_self_converges(self):
        vals = []
        for m in (129, 513):
            g = build_grid("ball", m, dimension=3)
            vals.append(neumann_eigenpairs(g, 2).mu_squared[1])
        assert vals[0] == pytest.approx(vals[1], rel=0.01)
        # radial Neumann mode of the unit 3-ball: mu solves tan(mu) = mu
        assert vals[1] == pytest.approx(4.493409457909064 ** 2, rel=1e-3)

    def test_weighted_orthonormality(self):
        for g in (build_grid("interval", 128, extent=2.0),
                  build_grid("ball", 128, dimension=3)):
            eig = neumann_eigenpairs(g, 5)
            gram = eig.modes.T @ (g.weights[:, None] * eig.modes)
            assert np.abs(gram - np.eye(5)).max() < 1e-8

    def test_eigenvalues_nondecreasing(self):
        g = build_grid("ball", 256, dimension=2)
        eig = neumann_eigenpairs(g, 8)
        assert np.all(np.diff(eig.mu_squared) >= -1e-12)

    def test_mode_count_limit(self):
        g = build_grid("interval", 64)
        with pytest.raises(GridError, match="M/4"):
            neumann_eigenpairs(g, 17)


class TestQuadraticForm:
    def test_constant_mode_value(self):
        mp = validate_params(3, 1, 2, 0)  # 1 - p + r*gamma = 1 - 3 + 2
        g = build_grid("interval", 101)
        assert quadratic_form(mp, g, np.ones(101)) == pytest.approx(0.0, abs=1e-12)
        mp2 = validate_params(2, 1, 2, 0)
        assert quadratic_form(mp2, g, np.ones(101)) == pytest.approx(1.0, abs=1e-12)

    def test_second_mode_value(self):
        # mean-zero mode: a(phi_2, phi_2) = mu_2^2 + 1 - p
        mp = validate_params(3, 1, 1, 0)
        g = build_grid("interval", 201, extent=1.0)
        eig = neumann_eigenpairs(g, 2)
        val = quadratic_form(mp, g, eig.modes[:, 1])
        assert val == pytest.approx(math.pi ** 2 + 1 - 3, rel=2e-3)

    def test_long_interval_negative_form(self):
        mp = validate_params(2, 1, 2, 0)
        g = build_grid("interval", 257, extent=2 * math.pi)
        eig = neumann_eigenpairs(g, 2)
        val = quadratic_form(mp, g, eig.modes[:, 1])
        assert val == pytest.approx(0.25 - 1.0, rel=0.02)


class TestLinearizedSpectrum:
    def test_mean_mode_rate(self):
        mp = validate_params(2, 1, 2, 0)  # Turing side: p - r*gamma = 0 < 1
        g = build_grid("interval", 128, extent=2 * math.pi)
        rates = {r.kind: r for r in linearized_spectrum(mp, g, 2)}
        assert rates["mean"].sigma == pytest.approx(2 - 1 - 2.0, abs=1e-12)
        assert rates["mean"].sigma < 0

    def test_long_interval_unstable_mode(self):
        mp = validate_params(2, 1, 2, 0)
        g = build_grid("interval", 256, extent=2 * math.pi)
        top = linearized_spectrum(mp, g, 3)[0]
        assert top.kind == "nonconstant" and top.mode == 2
        assert top.sigma == pytest.approx(0.75, rel=1e-3)

    def test_unit_interval_stable(self):
        mp = validate_params(2, 1, 2, 0)
        g = build_grid("interval", 128, extent=1.0)
        rates = linearized_spectrum(mp, g, 3)
        assert all(r.sigma < 0 for r in rates)
        mode2 = next(r for r in rates if r.mode == 2)
        assert mode2.sigma == pytest.approx(1 - math.pi ** 2, rel=1e-3)

    def test_rank_one_structure(self):
        # the non-local term shifts only the constant mode
        mp = validate_params(3, 2, 1.5, 1)
        g = build_grid("ball", 200, dimension=3)
        eig = neumann_eigenpairs(g, 5)
        rates = {r.mode: r for r in linearized_spectrum(mp, g, 5)}
        for j in range(2, 6):
            assert rates[j].sigma == pytest.approx((mp.p - 1) - eig.mu_squared[j - 1], abs=1e-8)

    def test_instability_criterion_equivalence(self):
        for extent, p_val in [(1.0, 2.0), (2 * math.pi, 2.0), (1.0, 12.0)]:
            mp = validate_params(p_val, 1, 2, 0)
            g = build_grid("interval", 200, extent=extent)
            rates = linearized_spectrum(mp, g, 4)
            mu2 = neumann_eigenpairs(g, 2).mu_squared[1]
            unstable = max(r.sigma for r in rates if r.kind == "nonconstant") > 0
            assert unstable == (mu2 < p_val - 1)


def test_growth_fit_on_synthetic_exponential():
    g = build_grid("interval", 64, extent=2 * math.pi)
    eig = neumann_eigenpairs(g, 2)
    snaps = [(t, 1.0 + 1e-4 * math.exp(0.75 * t) * eig.modes[:, 1])
             for t in np.linspace(0, 6, 25)]
    fit = measure_growth_rate(snaps, g)
    assert fit.rate == pytest.approx(0.75, rel=1e-6)
    assert fit.r2 > 0.999999
    amp0 = perturbation_amplitude(g, snaps[0][1])
    assert amp0 == pytest.approx(1e-4, rel=1e-10)
