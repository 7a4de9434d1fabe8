"""Uniform meshes, the Neumann Laplacian and normalized-average quadrature.

Two geometries are supported: an interval [0, L] and the unit ball B(0, 1) in
dimension N described by its radial coordinate.  The radial Laplacian is

    Laplace(u) = u'' + (N-1)/rho * u',

central differenced, with the removable origin singularity replaced by the
symmetry limit N * u''(0) and homogeneous Neumann conditions imposed by ghost
reflection at both ends.

Quadrature weights realize the normalized average avg(f) = (1/|Omega|) int f.
They are constructed so that the discrete divergence theorem is exact: the
weight vector satisfies w_i * A[i,j] = w_j * A[j,i] for the Laplacian stencil
A, which makes the weighted average of Laplace(u) vanish identically for every
field.  On the interval this recursion reproduces the normalized trapezoid
rule; on the ball it reproduces trapezoid-with-volume-factor weights up to a
single adjusted endpoint (and w_0 = 0 in dimension 3, where the volume factor
annihilates the origin).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid mesh request or field/grid mismatch."""


MIN_POINTS = 16

#: Fields passed to fractional or negative powers must stay above this floor.
POSITIVITY_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D mesh with Laplacian stencil bands and quadrature weights."""

    kind: str             # "interval" or "ball"
    dimension: int        # 1 on the interval, N for the ball
    extent: float         # L on the interval, 1.0 for the ball
    nodes: np.ndarray
    h: float
    weights: np.ndarray
    lap_diag: np.ndarray
    lap_upper: np.ndarray  # A[i, i+1], length M-1
    lap_lower: np.ndarray  # A[i+1, i], length M-1

    @property
    def m(self) -> int:
        return len(self.nodes)

    def require_field(self, field: np.ndarray) -> np.ndarray:
        arr = np.asarray(field, dtype=float)
        if arr.shape != (self.m,):
            raise GridError(f"field has shape {arr.shape}, expected ({self.m},)")
        return arr


def _stencil(kind: str, dimension: int, m: int, h: float):
    """Band coefficients of the Neumann Laplacian (ghost reflection at ends)."""
    inv_h2 = 1.0 / (h * h)
    diag = np.full(m, -2.0 * inv_h2)
    upper = np.full(m - 1, inv_h2)
    lower = np.full(m - 1, inv_h2)
    upper[0] = 2.0 * inv_h2
    lower[m - 2] = 2.0 * inv_h2
    if kind == "ball" and dimension > 1:
        n = dimension
        i = np.arange(1, m - 1, dtype=float)
        # interior row i: u'' + (N-1)/rho_i * u' with central differences
        upper[1:] = inv_h2 * (1.0 + (n - 1) / (2.0 * i))
        lower[: m - 2] = inv_h2 * (1.0 - (n - 1) / (2.0 * i))
        # origin: symmetry limit N * u''(0)
        diag[0] = -2.0 * n * inv_h2
        upper[0] = 2.0 * n * inv_h2
    return diag, upper, lower


def _balance_weights(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Positive weights making the stencil exactly self-adjoint.

    Backward recursion w_i = w_{i+1} * A[i+1,i] / A[i,i+1]; degenerates to
    w_0 = 0 when the first interior node does not couple back to the origin
    (ball, N = 3).
    """
    m = len(upper) + 1
    w = np.empty(m)
    w[m - 1] = 1.0
    for k in range(m - 2, -1, -1):
        w[k] = w[k + 1] * lower[k] / upper[k]
    if np.any(w < 0):
        raise GridError("stencil admits no nonnegative adjoint weight vector")
    return w / w.sum()


def build_grid(kind: str, m: int, extent: float = 1.0, dimension: int = 3) -> Grid:
    """Build a uniform interval or radial-ball grid with M nodes.

    interval: nodes on [0, extent].  ball: radial nodes on [0, 1]; `extent`
    is ignored and the dimension must be 1, 2 or 3 (higher dimensions have no
    nonnegative stencil-adjoint quadrature on this discretization).
    """
    if kind not in ("interval", "ball"):
        raise GridError(f"unknown geometry kind {kind!r}")
    if m < MIN_POINTS:
        raise GridError(f"node count must be at least {MIN_POINTS} (got {m})")
    if kind == "interval":
        if extent <= 0:
            raise GridError(f"interval length must be positive (got {extent})")
        dimension = 1
    else:
        if dimension < 1 or dimension != int(dimension):
            raise GridError(f"ball dimension must be a positive integer (got {dimension})")
        if dimension > 3:
            raise GridError(
                "ball dimension must be 1, 2 or 3: for N >= 4 the first interior "
                "node of the central stencil loses positivity and no nonnegative "
                "adjoint quadrature exists")
        extent = 1.0
    dimension = int(dimension)
    h = extent / (m - 1)
    nodes = np.arange(m, dtype=float) * h
    diag, upper, lower = _stencil(kind, dimension, m, h)
    weights = _balance_weights(upper, lower)
    return Grid(kind=kind, dimension=dimension, extent=extent, nodes=nodes, h=h,
                weights=weights, lap_diag=diag, lap_upper=upper, lap_lower=lower)


def laplacian_apply(grid: Grid, field: np.ndarray) -> np.ndarray:
    """Apply the discrete Neumann Laplacian to a nodal field.

    Evaluated in difference form, coeff * (u_neighbor - u_center), so constant
    fields map to exact zeros; the row sums of the stencil vanish identically.
    """
    u = grid.require_field(field)
    d = u[1:] - u[:-1]
    out = np.zeros_like(u)
    out[:-1] += grid.lap_upper * d
    out[1:] -= grid.lap_lower * d
    return out


def average_power(grid: Grid, field: np.ndarray, m: float) -> float:
    """Normalized average of field^m over the domain.

    Negative or fractional exponents require a strictly positive field; values
    at or below the 1e-300 floor raise instead of propagating NaN/Inf.
    """
    u = grid.require_field(field)
    m = float(m)
    if m != round(m) or m < 0:
        if np.min(u) <= POSITIVITY_FLOOR:
            raise GridError(
                f"average_power with exponent {m} needs a strictly positive field "
                f"(min value {np.min(u):.3e})")
    return float(grid.weights @ np.power(u, m))


def nonlocal_rhs(grid: Grid, params, field: np.ndarray) -> np.ndarray:
    """Full right-hand side Laplace(u) - u + u^p / avg(u^r)^gamma."""
    u = grid.require_field(field)
    if np.min(u) <= 0:
        raise GridError("nonlocal right-hand side requires a strictly positive field")
    zeta = average_power(grid, u, params.r)
    return laplacian_apply(grid, u) - u + u ** params.p / zeta ** params.gamma


def gradient_square_average(grid: Grid, field: np.ndarray) -> float:
    """avg(|grad u|^2) by summation by parts against the discrete Laplacian."""
    u = grid.require_field(field)
    return -float(grid.weights @ (u * laplacian_apply(grid, u)))


def write_field_csv(path, grid: Grid, field: np.ndarray) -> None:
    """Write a field snapshot as CSV with header rho,u at 17 significant digits."""
    u = grid.require_field(field)
    with open(path, "w", encoding="utf-8") as f:
        f.write("rho,u\n")
        for x, v in zip(grid.nodes, u):
            f.write(f"{x:.17g},{v:.17g}\n")


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a snapshot CSV (header rho,u) back into coordinate/value arrays."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    if data.shape[1] != 2 or data.size == 0 or np.any(~np.isfinite(data)):
        raise GridError(f"{path}: expected two finite CSV columns rho,u")
    return data[:, 0], data[:, 1]
