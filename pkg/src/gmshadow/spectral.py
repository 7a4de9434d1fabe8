"""Neumann eigenpairs of the discrete Laplacian and the linearized operator.

Linearizing the non-local equation around u = 1 gives

    phi_t = Laplace(phi) + (p-1) phi - r*gamma * avg(phi).

The averaging term is rank one and acts only on the constant mode, so the
growth rates are (p-1) - r*gamma for the mean mode and (p-1) - mu_j^2 for
every mean-zero mode.  Instability of a nonconstant mode therefore occurs
exactly when mu_2^2 < p - 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import Grid, GridError, average_power, gradient_square_average, laplacian_apply
from .params import ModelParams


@dataclass(frozen=True)
class EigenSystem:
    """Leading Neumann eigenpairs of -Laplace on a grid.

    Eigenvalues are nondecreasing with mu_1^2 = 0; eigenfunctions are
    normalized so the weighted average of phi_j^2 is 1 and stored as columns.
    """

    mu_squared: np.ndarray
    modes: np.ndarray  # shape (M, k)

    @property
    def count(self) -> int:
        return len(self.mu_squared)


def neumann_eigenpairs(grid: Grid, k: int) -> EigenSystem:
    """First k eigenpairs of -Laplace with Neumann reflection.

    The stencil is symmetrized by the quadrature weights.  In ball dimension 3
    the origin weight vanishes and the origin node decouples (its backward
    coupling is exactly zero); the eigenproblem is solved on the remaining
    nodes and the origin value is reconstructed from the eigenvalue relation.
    """
    m = grid.m
    if k < 1 or k > m // 4:
        raise GridError(f"requested {k} eigenpairs; must be between 1 and M/4 = {m // 4}")
    up, lo, dg = grid.lap_upper, grid.lap_lower, grid.lap_diag
    reduced = lo[0] == 0.0  # ball N=3: origin is a slave node
    sl = slice(1, None) if reduced else slice(None)
    d = -dg[sl]
    e = -np.sqrt(up[1:] * lo[1:]) if reduced else -np.sqrt(up * lo)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    vals = np.maximum(vals, 0.0)
    vals[0] = 0.0 if vals[0] < 1e-10 else vals[0]

    w = grid.weights[sl]
    scale = np.sqrt(np.where(w > 0, w, 1.0))
    modes_part = vecs / scale[:, None]
    modes = np.empty((m, k))
    modes[sl] = modes_part
    if reduced:
        # row 0 of -Laplace: -up[0]*(phi_1 - phi_0) = mu^2 phi_0
        denom = 1.0 - vals * grid.h ** 2 / (2.0 * grid.dimension)
        modes[0] = modes[1] / denom
    for j in range(k):
        nrm = np.sqrt(float(grid.weights @ modes[:, j] ** 2))
        modes[:, j] /= nrm
        anchor = modes[0, j] if abs(modes[0, j]) > 1e-12 else modes[1, j]
        if anchor < 0:
            modes[:, j] = -modes[:, j]
    return EigenSystem(mu_squared=vals, modes=modes)


def quadratic_form(params: ModelParams, grid: Grid, phi: np.ndarray) -> float:
    """Bilinear-form value avg(|grad phi|^2) + (1-p) avg(phi^2) + r*gamma*avg(phi)^2."""
    phi = grid.require_field(phi)
    grad2 = gradient_square_average(grid, phi)
    phi2 = float(grid.weights @ (phi * phi))
    mean = float(grid.weights @ phi)
    return grad2 + (1.0 - params.p) * phi2 + params.r * params.gamma * mean ** 2


@dataclass(frozen=True)
class ModeRate:
    """Growth rate of one linearized mode around u = 1."""

    mode: int        # 1-based; mode 1 is the constant (mean) mode
    mu_squared: float
    sigma: float
    kind: str        # "mean" or "nonconstant"


def linearized_spectrum(params: ModelParams, grid: Grid, k: int) -> list[ModeRate]:
    """Growth rates of the linearization around u = 1, sorted descending.

    The non-local term shifts only the constant mode: sigma_1 = (p-1) - r*gamma,
    sigma_j = (p-1) - mu_j^2 for j >= 2.
    """
    eig = neumann_eigenpairs(grid, k)
    p1 = params.p - 1.0
    rates = [ModeRate(mode=1, mu_squared=0.0, sigma=p1 - params.r * params.gamma, kind="mean")]
    for j in range(1, eig.count):
        rates.append(ModeRate(mode=j + 1, mu_squared=float(eig.mu_squared[j]),
                              sigma=p1 - float(eig.mu_squared[j]), kind="nonconstant"))
    rates.sort(key=lambda rr: -rr.sigma)
    return rates


def perturbation_amplitude(grid: Grid, field: np.ndarray) -> float:
    """Weighted L2 norm of the mean-zero part of a field."""
    u = grid.require_field(field)
    mean = float(grid.weights @ u)
    return float(np.sqrt(grid.weights @ (u - mean) ** 2))


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    intercept: float
    r2: float
    n_points: int


def measure_growth_rate(snapshots, grid: Grid, amp_max: float = 1e-2,
                        amp_min: float = 0.0) -> GrowthFit:
    """Log-linear least squares on the perturbation amplitude of snapshots.

    `snapshots` is an iterable of (t, field); only snapshots whose amplitude
    lies in (amp_min, amp_max) enter the fit.
    """
    ts, amps = [], []
    for t, field in snapshots:
        a = perturbation_amplitude(grid, field)
        if amp_min < a < amp_max:
            ts.append(float(t))
            amps.append(a)
    if len(ts) < 3:
        raise GridError(f"growth-rate fit needs at least 3 snapshots in window (got {len(ts)})")
    ts_arr = np.asarray(ts)
    log_a = np.log(np.asarray(amps))
    design = np.vstack([ts_arr, np.ones_like(ts_arr)]).T
    coef, *_ = np.linalg.lstsq(design, log_a, rcond=None)
    resid = log_a - design @ coef
    total = float(np.sum((log_a - log_a.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / total if total > 0 else 1.0
    return GrowthFit(rate=float(coef[0]), intercept=float(coef[1]), r2=r2, n_points=len(ts))
