"""Initial-condition generators: constants, eigenmode perturbations, spikes.

The spiky family on the unit ball is

    u0(rho) = lam * phi_delta(rho),
    phi_delta(rho) = rho^(-a)                                   for delta <= rho <= 1,
                     delta^(-a) (1 + a/2) - (a/2) delta^(-a-2) rho^2   for rho < delta,

with a = 2/(p-1).  Both branches meet at rho = delta with the common value
delta^(-a); the profile is strictly radially decreasing.  Away from the seam
it satisfies Laplace(phi_delta) >= -N*a*phi_delta^p pointwise (classically),
which `check_lemma_bounds` verifies against the discrete operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridError, laplacian_apply, read_field_csv
from .params import ModelParams
from .spectral import neumann_eigenpairs


class InitialDataError(ValueError):
    """Initial-condition request incompatible with the grid or parameters."""


#: The quadratic cap must span at least this many grid spacings.
MIN_CORE_SPACINGS = 4


@dataclass(frozen=True)
class SpikySpec:
    """Amplitude lam, core radius delta and the derived cap exponent a = 2/(p-1)."""

    lam: float
    delta: float
    a: float


def make_spiky_spec(params: ModelParams, lam: float, delta: float) -> SpikySpec:
    if lam <= 0:
        raise InitialDataError(f"spike amplitude must be positive (got {lam})")
    if not 0.0 < delta < 1.0:
        raise InitialDataError(f"core radius must lie in (0, 1) (got {delta})")
    return SpikySpec(lam=float(lam), delta=float(delta), a=2.0 / (params.p - 1.0))


def constant_data(grid: Grid, c: float) -> np.ndarray:
    """Spatially homogeneous state u = c."""
    if c <= 0:
        raise InitialDataError(f"constant initial data must be positive (got {c})")
    return np.full(grid.m, float(c))


def perturbed_constant(grid: Grid, c: float, eps: float, mode: int) -> np.ndarray:
    """u = c + eps * phi_mode with the grid's own Neumann eigenfunction."""
    if c <= 0:
        raise InitialDataError(f"base constant must be positive (got {c})")
    eig = neumann_eigenpairs(grid, mode)
    field = c + eps * eig.modes[:, mode - 1]
    if np.min(field) <= 0:
        raise InitialDataError(
            f"perturbation eps={eps} on mode {mode} drives the field nonpositive "
            f"(min value {np.min(field):.3e})")
    return field


def spike_profile(spec: SpikySpec, rho: np.ndarray) -> np.ndarray:
    """Unscaled profile phi_delta evaluated at radial coordinates."""
    a, d = spec.a, spec.delta
    out = np.empty_like(rho)
    cap = rho < d
    out[~cap] = rho[~cap] ** (-a)
    out[cap] = d ** (-a) * (1.0 + a / 2.0) - (a / 2.0) * d ** (-(a + 2.0)) * rho[cap] ** 2
    return out


def spiky_data(grid: Grid, params: ModelParams, spec: SpikySpec) -> np.ndarray:
    """Nodal evaluation of lam * phi_delta with resolution and shape checks."""
    if grid.kind != "ball":
        raise InitialDataError("spiky initial data requires ball geometry")
    if spec.delta < MIN_CORE_SPACINGS * grid.h:
        raise InitialDataError(
            f"core radius delta={spec.delta} is below {MIN_CORE_SPACINGS} grid "
            f"spacings (h={grid.h:.3e}); raise M or delta")
    # both branches agree at the seam to rounding
    a, d = spec.a, spec.delta
    cap_at_seam = d ** (-a) * (1.0 + a / 2.0) - (a / 2.0) * d ** (-(a + 2.0)) * d ** 2
    if not np.isclose(cap_at_seam, d ** (-a), rtol=1e-12):
        raise InitialDataError("seam continuity check failed; exponents out of range")
    field = spec.lam * spike_profile(spec, grid.nodes)
    if np.any(np.diff(field) >= 0):
        raise InitialDataError(
            "spiky profile is not strictly decreasing on this grid; "
            "delta is below the usable resolution")
    return field


def from_csv(grid: Grid, path) -> np.ndarray:
    """Nodal initial data from a snapshot-format CSV; must match the grid."""
    rho, u = read_field_csv(path)
    if len(rho) != grid.m or not np.allclose(rho, grid.nodes, atol=1e-10 * max(1.0, grid.extent)):
        raise InitialDataError(f"{path}: node coordinates do not match the grid")
    if np.min(u) <= 0:
        raise InitialDataError(f"{path}: initial data must be strictly positive")
    return np.asarray(u, dtype=float)


@dataclass(frozen=True)
class LemmaBoundsReport:
    """Discrete check of Laplace(phi_delta) + N*a*phi_delta^p >= 0 off the seam."""

    min_residual: float
    min_tail: float      # rho > delta + 2h
    min_cap: float       # rho < delta - 2h
    n_excluded: int      # nodes within 2h of the seam


def check_lemma_bounds(grid: Grid, params: ModelParams, spec: SpikySpec) -> LemmaBoundsReport:
    """Evaluate the spike's subsolution inequality away from the seam.

    The profile is only C^1 at rho = delta, so a 2h collar around the seam is
    excluded; elsewhere the residual should be nonnegative up to O(h) stencil
    error.
    """
    if grid.kind != "ball":
        raise InitialDataError("lemma bounds are defined on ball geometry")
    phi = spike_profile(spec, grid.nodes)
    residual = laplacian_apply(grid, phi) + grid.dimension * spec.a * phi ** params.p
    dist = np.abs(grid.nodes - spec.delta)
    keep = dist >= 2.0 * grid.h
    tail = keep & (grid.nodes > spec.delta)
    cap = keep & (grid.nodes < spec.delta)
    return LemmaBoundsReport(
        min_residual=float(residual[keep].min()),
        min_tail=float(residual[tail].min()) if tail.any() else np.inf,
        min_cap=float(residual[cap].min()) if cap.any() else np.inf,
        n_excluded=int((~keep).sum()),
    )
