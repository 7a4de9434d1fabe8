from __future__ import annotations

import numpy as np
import pytest

from gmshadow.grid import (GridError, average_power, build_grid, laplacian_apply,
                           nonlocal_rhs, read_field_csv, write_field_csv)
from gmshadow.initial import make_spiky_spec, spike_profile
from gmshadow.params import kinetic_rhs, validate_params


def sample_fields(grid, rng, n=20):
    """Smooth-ish random positive fields for property checks."""
    for _ in range(n):
        coeffs = rng.normal(size=4)
        x = grid.nodes / grid.extent
        f = 1.5 + sum(c * np.cos(np.pi * k * x) for k, c in enumerate(coeffs)) * 0.3
        yield np.maximum(f, 0.1)


class TestBuild:
    def test_interval_trapezoid_weights(self):
        g = build_grid("interval", 101, extent=1.0)
        assert g.weights[0] == pytest.approx(1 / 200, rel=1e-12)
        assert g.weights[-1] == pytest.approx(1 / 200, rel=1e-12)
        assert np.allclose(g.weights[1:-1], 1 / 100, rtol=1e-12)

    def test_ball3_weights_vanish_at_origin(self):
        g = build_grid("ball", 101, dimension=3)
        assert g.weights[0] == 0.0
        assert g.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(g.weights >= 0)

    def test_ball1_matches_interval(self):
        gb = build_grid("ball", 101, dimension=1)
        gi = build_grid("interval", 101, extent=1.0)
        assert np.allclose(gb.weights, gi.weights, rtol=1e-14)

    def test_nodes_uniform(self):
        g = build_grid("ball", 64, dimension=2)
        assert np.all(np.diff(g.nodes) > 0)
        assert np.allclose(np.diff(g.nodes), g.h, atol=1e-12)

    def test_rejects_small_and_bad_dims(self):
        with pytest.raises(GridError, match="at least 16"):
            build_grid("interval", 8)
        with pytest.raises(GridError, match="dimension"):
            build_grid("ball", 64, dimension=4)
        with pytest.raises(GridError, match="positive"):
            build_grid("interval", 64, extent=-1.0)


class TestAveragePower:
    @pytest.mark.parametrize("m", [-1.5, -1.0, 0.5, 1.0, 2.0, 3.7])
    def test_constant_exact(self, m):
        g = build_grid("ball", 64, dimension=3)
        assert average_power(g, np.full(64, 1.7), m) == pytest.approx(1.7 ** m, rel=1e-13)

    def test_linear_on_interval_exact(self):
        g = build_grid("interval", 101, extent=1.0)
        assert average_power(g, g.nodes, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_spike_average_matches_dimensional_constant(self):
        # avg(phi_delta^m) -> N/(N - m a) as delta -> 0; here N=3, m=a=1 gives 3/2
        g = build_grid("ball", 20001, dimension=3)
        spec = make_spiky_spec(validate_params(3, 1, 1, 0), lam=1.0, delta=1e-3)
        val = average_power(g, spike_profile(spec, g.nodes), 1.0)
        assert val == pytest.approx(1.5, abs=5e-3)

    def test_spike_average_error_decays_quadratically(self):
        # exact error is 0.3 delta^2 for N=3, m=a=1
        g = build_grid("ball", 20001, dimension=3)
        mp = validate_params(3, 1, 1, 0)
        errs = []
        deltas = [0.05, 0.1, 0.2]
        for d in deltas:
            spec = make_spiky_spec(mp, lam=1.0, delta=d)
            errs.append(abs(average_power(g, spike_profile(spec, g.nodes), 1.0) - 1.5))
        slope = np.polyfit(np.log(deltas), np.log(errs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)

    def test_negative_power_needs_positive_field(self):
        g = build_grid("interval", 32)
        field = np.ones(32)
        field[3] = 0.0
        with pytest.raises(GridError, match="strictly positive"):
            average_power(g, field, -0.5)


class TestLaplacian:
    def test_constant_maps_to_exact_zero(self):
        for g in (build_grid("interval", 64), build_grid("ball", 64, dimension=3)):
            assert np.all(laplacian_apply(g, np.full(g.m, 2.3)) == 0.0)

    def test_cosine_eigenfunction(self):
        g = build_grid("interval", 101, extent=1.0)
        u = np.cos(np.pi * g.nodes)
        err = np.abs(laplacian_apply(g, u) + np.pi ** 2 * u).max()
        assert err < 5 * np.pi ** 2 * g.h ** 2

    @pytest.mark.parametrize("dim", [2, 3])
    def test_quadratic_on_ball(self, dim):
        # Laplace(rho^2) = 2N away from the reflected outer node
        g = build_grid("ball", 101, dimension=dim)
        res = laplacian_apply(g, g.nodes ** 2)
        assert np.abs(res[:-1] - 2 * dim).max() < 1e-9

    def test_convergence_order_at_least_19(self):
        errs = []
        for m in (33, 65, 129):
            g = build_grid("interval", m, extent=1.0)
            u = np.cos(np.pi * g.nodes)
            errs.append(np.abs(laplacian_apply(g, u) + np.pi ** 2 * u).max())
        order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
        assert min(order) >= 1.9

    def test_ball_convergence_on_smooth_radial_field(self):
        errs = []
        for m in (33, 65, 129):
            g = build_grid("ball", m, dimension=3)
            u = np.cos(np.pi * g.nodes)
            # Laplace(cos(pi rho)) = -pi^2 cos - 2 pi sin(pi rho)/rho in 3-D
            exact = -np.pi ** 2 * u - 2 * np.pi ** 2 * np.sinc(g.nodes)
            errs.append(np.abs(laplacian_apply(g, u) - exact).max())
        order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
        assert min(order) >= 1.9

    def test_discrete_divergence_theorem(self, rng):
        for g in (build_grid("interval", 97, extent=2.0),
                  build_grid("ball", 97, dimension=2),
                  build_grid("ball", 97, dimension=3)):
            for u in sample_fields(g, rng):
                resid = abs(float(g.weights @ laplacian_apply(g, u)))
                assert resid <= 1e-10 * np.abs(u).max()


class TestNonlocalRhs:
    def test_steady_state_is_exact_zero(self):
        g = build_grid("ball", 64, dimension=3)
        mp = validate_params(3, 1, 1, 0)
        assert np.all(nonlocal_rhs(g, mp, np.ones(64)) == 0.0)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    def test_homogeneous_reduction(self, c):
        g = build_grid("interval", 128)
        mp = validate_params(3, 1, 1, 0)
        diff = np.abs(nonlocal_rhs(g, mp, np.full(128, c)) - kinetic_rhs(c, mp)).max()
        assert diff <= 1e-12

    def test_refinement_consistency(self):
        # Richardson: |rhs_M - rhs_2M| should shrink ~4x per refinement
        mp = validate_params(2, 1, 2, 0)
        vals = []
        for m in (65, 129, 257):
            g = build_grid("interval", m, extent=1.0)
            u = 1.0 + 0.01 * np.cos(np.pi * g.nodes)
            vals.append(nonlocal_rhs(g, mp, u))
        e1 = np.abs(vals[0] - vals[1][::2]).max()
        e2 = np.abs(vals[1] - vals[2][::2]).max()
        assert np.log2(e1 / e2) >= 1.9

    def test_holder_moment_ordering(self, rng):
        # avg(u^p) >= avg(u^mu)^(p/mu) for 1 <= mu <= p (power-mean inequality)
        g = build_grid("ball", 97, dimension=3)
        for u in sample_fields(g, rng, n=10):
            ap = average_power(g, u, 3.0)
            for mu in (1.0, 1.5, 2.0, 3.0):
                assert ap >= average_power(g, u, mu) ** (3.0 / mu) * (1 - 1e-12)

    def test_rejects_nonpositive_field(self):
        g = build_grid("interval", 32)
        bad = np.ones(32)
        bad[0] = -0.1
        with pytest.raises(GridError):
            nonlocal_rhs(g, validate_params(2, 1, 1, 0), bad)


def test_field_csv_roundtrip(tmp_path):
    g = build_grid("ball", 64, dimension=3)
    u = 1.0 + g.nodes ** 2
    path = tmp_path / "snap.csv"
    write_field_csv(path, g, u)
    rho, back = read_field_csv(path)
    assert np.array_equal(rho, g.nodes)
    assert np.array_equal(back, u)
    header = path.read_text().splitlines()[0]
    assert header == "rho,u"
