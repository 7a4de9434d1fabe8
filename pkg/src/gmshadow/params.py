"""Exponent validation, regime classification and the homogeneous kinetic oracle.

The activator equation

    u_t = Laplace(u) - u + u^p / (avg(u^r))^gamma,   du/dnu = 0 on the boundary,

is governed by the four exponents (p, q, r, s) through the derived indices
gamma = q/(s+1) (net cross-inhibition) and rho = (p-1)/r (net self-activation).
Spatially homogeneous states obey the scalar ODE u' = -u + u^(p - r*gamma),
which this module integrates to machine accuracy as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp


class ParameterError(ValueError):
    """An exponent violates the model's standing assumptions."""


#: |p - r*gamma - 1| below this is classified as the boundary regime.
BOUNDARY_TOL = 1e-12

#: The kinetic oracle switches to the analytic power-law tail above this value.
KINETIC_OVERFLOW_GUARD = 1e12

#: r is treated as exactly p+1 (variational structure) within this tolerance.
VARIATIONAL_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Validated exponent set with the two derived indices."""

    p: float
    q: float
    r: float
    s: float
    gamma: float
    rho_index: float

    @property
    def net_exponent(self) -> float:
        """Exponent p - r*gamma of the homogeneous kinetics."""
        return self.p - self.r * self.gamma

    @property
    def variational(self) -> bool:
        """True when r = p + 1, i.e. the problem has a Lyapunov functional."""
        return abs(self.r - (self.p + 1.0)) <= VARIATIONAL_TOL


def validate_params(p: float, q: float, r: float, s: float) -> ModelParams:
    """Check p > 1, q > 0, r > 0, s > -1 and derive gamma and rho.

    Raises ParameterError naming the violated inequality.
    """
    vals = (p, q, r, s)
    if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
        raise ParameterError(f"exponents must be finite real numbers, got {vals}")
    p, q, r, s = map(float, vals)
    if p <= 1:
        raise ParameterError(f"p must exceed 1 (got p={p})")
    if q <= 0:
        raise ParameterError(f"q must be positive (got q={q})")
    if r <= 0:
        raise ParameterError(f"r must be positive (got r={r})")
    if s <= -1:
        raise ParameterError(f"s must exceed -1 (got s={s})")
    return ModelParams(p=p, q=q, r=r, s=s, gamma=q / (s + 1.0), rho_index=(p - 1.0) / r)


@dataclass(frozen=True)
class InequalityCheck:
    """One recorded hypothesis inequality together with its evaluated sides."""

    description: str
    lhs: float
    op: str
    rhs: float
    holds: bool


@dataclass(frozen=True)
class TheoremTag:
    """A scenario label whose hypotheses the parameters satisfy."""

    name: str
    checks: tuple[InequalityCheck, ...]

    @property
    def satisfied(self) -> bool:
        return all(c.holds for c in self.checks)


@dataclass(frozen=True)
class RegimeReport:
    """Turing trichotomy plus the satisfied scenario tags."""

    turing: bool
    anti_turing: bool
    boundary: bool
    net_exponent: float
    theorem_tags: tuple[TheoremTag, ...] = field(default_factory=tuple)


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: abs(a - b) <= VARIATIONAL_TOL,
}


def _check(description: str, lhs: float, op: str, rhs: float) -> InequalityCheck:
    return InequalityCheck(description, float(lhs), op, float(rhs), _OPS[op](lhs, rhs))


def _candidate_tags(mp: ModelParams, dimension: int | None) -> list[TheoremTag]:
    p, r, gam, rho = mp.p, mp.r, mp.gamma, mp.rho_index
    tags = [
        TheoremTag("ode-blowup", (
            _check("p >= r", p, ">=", r),
            _check("p - r*gamma > 1", mp.net_exponent, ">", 1.0),
        )),
        TheoremTag("variational-blowup", (
            _check("r = p + 1", r, "=", p + 1.0),
            _check("gamma < min(1, (p-1)/(p+1))", gam, "<", min(1.0, (p - 1) / (p + 1))),
        )),
        TheoremTag("region-blowup", (
            _check("0 < gamma", 0.0, "<", gam),
            _check("gamma < 1", gam, "<", 1.0),
            _check("r <= 1", r, "<=", 1.0),
            _check("(p-1)/r > 1", rho, ">", 1.0),
        )),
        TheoremTag("region-global", (
            _check("gamma > 1", gam, ">", 1.0),
            _check("r >= 1", r, ">=", 1.0),
            _check("(p-1)/r < 1", rho, "<", 1.0),
        )),
    ]
    if dimension is not None:
        n = int(dimension)
        if n >= 3:
            tags.append(TheoremTag("variational-global", (
                _check("r = p + 1", r, "=", p + 1.0),
                _check("(p-1)/(p+1) < gamma", (p - 1) / (p + 1), "<", gam),
                _check("gamma < 1", gam, "<", 1.0),
                _check("p < (N+2)/(N-2)", p, "<", (n + 2) / (n - 2)),
            )))
            tags.append(TheoremTag("ddi-spiky", (
                _check("N >= 3", n, ">=", 3.0),
                _check("r >= 1", r, ">=", 1.0),
                _check("r <= p", r, "<=", p),
                _check("p > N/(N-2)", p, ">", n / (n - 2)),
                _check("2/N < (p-1)/r", 2.0 / n, "<", rho),
                _check("(p-1)/r < gamma", rho, "<", gam),
            )))
        tags.append(TheoremTag("small-rho-global", (
            _check("(p-1)/r < min(1, 2/N, (1-1/r)/2)",
                   rho, "<", min(1.0, 2.0 / n, 0.5 * (1.0 - 1.0 / r))),
            _check("0 < gamma", 0.0, "<", gam),
            _check("gamma < 1", gam, "<", 1.0),
        )))
    return tags


def classify_regime(params: ModelParams, dimension: int | None = None) -> RegimeReport:
    """Classify p - r*gamma against 1 and collect satisfied scenario tags.

    Tags whose hypotheses involve the space dimension are evaluated only when
    `dimension` is given.
    """
    net = params.net_exponent
    boundary = abs(net - 1.0) <= BOUNDARY_TOL
    turing = (not boundary) and net < 1.0
    anti = (not boundary) and net > 1.0
    tags = tuple(t for t in _candidate_tags(params, dimension) if t.satisfied)
    return RegimeReport(turing=turing, anti_turing=anti, boundary=boundary,
                        net_exponent=net, theorem_tags=tags)


def kinetic_rhs(u: float, params: ModelParams) -> float:
    """Right-hand side -u + u^(p - r*gamma) of the homogeneous kinetics."""
    if u <= 0:
        raise ParameterError(f"kinetic state must be positive (got u={u})")
    return -u + u ** params.net_exponent


@dataclass(frozen=True)
class KineticResult:
    """Trajectory of the homogeneous kinetics plus an optional blow-up time."""

    t: np.ndarray
    u: np.ndarray
    blowup_time: float | None
    _dense: object = field(repr=False, default=None)

    def at(self, t: float | np.ndarray):
        """Evaluate the dense solution; valid only on the computed span."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.t[0]) or np.any(t_arr > self.t[-1]):
            raise ValueError(f"t outside computed span [{self.t[0]}, {self.t[-1]}]")
        out = self._dense(t_arr)
        vals = out[0] if out.ndim > 1 else out
        return float(vals.reshape(-1)[0]) if t_arr.ndim == 0 else vals


def integrate_kinetic(u0: float, params: ModelParams, t_end: float,
                      abs_tol: float = 1e-14) -> KineticResult:
    """Integrate u' = -u + u^(p - r*gamma) with high-order adaptive stepping.

    If the orbit escapes (p - r*gamma > 1 and u0 > 1), integration stops at the
    overflow guard and the blow-up time is completed with the analytic tail of
    u' ~ u^m: T = t_guard + g^(1-m)/(m-1) + g^(2(1-m))/(2(m-1)) + ...
    """
    if u0 <= 0:
        raise ParameterError(f"u0 must be positive (got {u0})")
    if t_end <= 0:
        raise ParameterError(f"t_end must be positive (got {t_end})")
    m = params.net_exponent

    def rhs(_t, y):
        v = max(y[0], 1e-300)
        return [-v + v ** m]

    def hit_guard(_t, y):
        return y[0] - KINETIC_OVERFLOW_GUARD

    hit_guard.terminal = True
    hit_guard.direction = 1.0

    sol = solve_ivp(rhs, (0.0, t_end), [float(u0)], method="DOP853",
                    rtol=1e-12, atol=abs_tol, dense_output=True, events=hit_guard)
    if sol.status == -1:
        raise ParameterError(f"kinetic integration failed: {sol.message}")

    blowup = None
    if sol.status == 1 and m > 1.0 and u0 > 1.0:
        g = KINETIC_OVERFLOW_GUARD
        t_g = float(sol.t_events[0][0])
        tail = g ** (1.0 - m) / (m - 1.0) + g ** (2.0 * (1.0 - m)) / (2.0 * (m - 1.0))
        blowup = t_g + tail
    return KineticResult(t=sol.t, u=sol.y[0], blowup_time=blowup, _dense=sol.sol)
