"""Method-of-lines time advancement with blow-up-aware adaptive stepping.

Two schemes are provided:

  explicit-rk4-adaptive: embedded Cash-Karp 4(5) pair, diffusion-CFL plus
      reaction-bound step limiting, halving retries on error or positivity
      failure;
  imex-cn: Crank-Nicolson on the linear part Laplace(u) - u with the
      non-local reaction advanced explicitly (trapezoidal predictor/
      corrector), step-doubling error control.

Both re-evaluate the non-local average at every internal stage.  The reaction
bound dt <= reaction_safety * |u|_inf^(1-p) * avg(u^r)^gamma tracks the local
doubling time of the dominant nonlinearity, so steps shrink geometrically as a
blow-up is approached; a proposed step below dt_min on a strongly grown
solution is treated as blow-up evidence rather than failure.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .diagnostics import DiagnosticsRecord, compute_record
from .grid import Grid, average_power, build_grid
from .params import ModelParams


class NumericalFailure(RuntimeError):
    """Step size collapsed or non-finite values persisted through retries."""


SCHEMES = ("explicit-rk4-adaptive", "imex-cn")

EVENT_HORIZON = "horizon-reached"
EVENT_BLOWUP = "blow-up-suspected"
EVENT_STEADY = "steady-state"
EVENT_FAILURE = "numerical-failure"

#: u_max must exceed this multiple of its initial value before a collapsing
#: step size is attributed to blow-up rather than failure.
GROWTH_FACTOR_FOR_BLOWUP = 100.0


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "explicit-rk4-adaptive"
    cfl_safety: float = 0.4
    reaction_safety: float = 0.1
    dt_min: float = 1e-14
    dt_max: float = 0.1
    overflow_guard: float = 1e10
    steady_tol: float = 1e-9
    step_tol: float = 1e-9
    max_retries: int = 40


def validate_integrator_config(cfg: IntegratorConfig) -> IntegratorConfig:
    if cfg.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {cfg.scheme!r}; expected one of {SCHEMES}")
    for name in ("cfl_safety", "reaction_safety", "dt_min", "dt_max",
                 "overflow_guard", "steady_tol", "step_tol"):
        if getattr(cfg, name) <= 0:
            raise ValueError(f"integrator.{name} must be positive")
    if cfg.cfl_safety > 0.9:
        raise ValueError(f"cfl_safety must not exceed 0.9 (got {cfg.cfl_safety})")
    if cfg.max_retries < 1:
        raise ValueError("max_retries must be at least 1")
    return cfg


@dataclass
class SimState:
    t: float
    dt: float            # last accepted step; 0 before the first step
    field: np.ndarray
    step_index: int = 0


def propose_dt(state: SimState, grid: Grid, params: ModelParams,
               config: IntegratorConfig) -> float:
    """State-based step bound: CFL (explicit only), reaction scale, dt_max."""
    u = state.field
    umax = float(np.max(u))
    zeta = average_power(grid, u, params.r)
    dt = min(config.dt_max,
             config.reaction_safety * umax ** (1.0 - params.p) * zeta ** params.gamma)
    if config.scheme == "explicit-rk4-adaptive":
        dt = min(dt, config.cfl_safety * grid.h ** 2 / (2.0 * grid.dimension))
    return dt


# Cash-Karp embedded 4(5) tableau
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_ERR = tuple(b5 - b4 for b5, b4 in zip(
    _CK_B5, (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)))


def _rhs_factory(grid: Grid, params: ModelParams):
    p, r, gam = params.p, params.r, params.gamma
    w = grid.weights
    up, lo = grid.lap_upper, grid.lap_lower

    def rhs(u):
        zeta = float(w @ (u ** r))
        d = u[1:] - u[:-1]
        out = u ** p / zeta ** gam - u
        out[:-1] += up * d
        out[1:] -= lo * d
        return out

    return rhs


def _usable(u) -> bool:
    return u is not None and np.isfinite(u).all() and float(np.min(u)) > 0.0


def _try_explicit(u, dt, rhs, tol):
    """One Cash-Karp trial; returns (u_new, err_ratio) or None on breakdown."""
    ks = []
    for coeffs in _CK_A:
        stage = u if not coeffs else u + dt * sum(a * k for a, k in zip(coeffs, ks))
        if not _usable(stage):
            return None
        ks.append(rhs(stage))
    u_new = u + dt * sum(b * k for b, k in zip(_CK_B5, ks) if b != 0.0)
    if not _usable(u_new):
        return None
    err = float(np.max(np.abs(dt * sum(e * k for e, k in zip(_CK_ERR, ks) if e != 0.0))))
    scale = tol * max(1.0, float(np.max(np.abs(u_new))))
    return u_new, err / (scale + 1e-300)


class _ImexStepper:
    """CN on Laplace(u) - u, explicit trapezoidal non-local reaction."""

    def __init__(self, grid: Grid, params: ModelParams):
        self.grid = grid
        self.p, self.r, self.gam = params.p, params.r, params.gamma
        self.w = grid.weights
        self.dg, self.up, self.lo = grid.lap_diag, grid.lap_upper, grid.lap_lower

    def _nonlin(self, u):
        zeta = float(self.w @ (u ** self.r))
        return u ** self.p / zeta ** self.gam

    def _lin(self, u):
        d = u[1:] - u[:-1]
        out = -u
        out[:-1] += self.up * d
        out[1:] -= self.lo * d
        return out

    def _solve(self, rhs_vec, dt):
        m = len(rhs_vec)
        ab = np.zeros((3, m))
        ab[0, 1:] = -0.5 * dt * self.up
        ab[1, :] = 1.0 - 0.5 * dt * (self.dg - 1.0)
        ab[2, :-1] = -0.5 * dt * self.lo
        return solve_banded((1, 1), ab, rhs_vec)

    def substep(self, u, dt):
        # delta form: (I - dt/2 L) (u+ - u) = dt (L u + N~), exact on steady states
        lin = self._lin(u)
        non = self._nonlin(u)
        pred = u + self._solve(dt * (lin + non), dt)
        if not _usable(pred):
            return None
        corr = u + self._solve(dt * (lin + 0.5 * (non + self._nonlin(pred))), dt)
        return corr if _usable(corr) else None

    def trial(self, u, dt, tol):
        """Step-doubling trial; returns (u_new, err_ratio) or None."""
        full = self.substep(u, dt)
        if full is None:
            return None
        half = self.substep(u, 0.5 * dt)
        fine = self.substep(half, 0.5 * dt) if half is not None else None
        if fine is None:
            return None
        err = float(np.max(np.abs(fine - full))) / 3.0
        scale = tol * max(1.0, float(np.max(np.abs(fine))))
        return fine, err / (scale + 1e-300)


def step(state: SimState, grid: Grid, params: ModelParams,
         config: IntegratorConfig, dt_cap: float | None = None,
         _workers=None) -> SimState:
    """Advance one accepted step; raises NumericalFailure when retries exhaust.

    The step starts from the state-based bound of propose_dt, additionally
    growth-limited to twice the previously accepted step, and is halved until
    the embedded (explicit) or step-doubling (imex) error estimate passes and
    the state stays positive and finite.
    """
    dt = propose_dt(state, grid, params, config)
    if state.dt > 0:
        dt = min(dt, 2.0 * state.dt)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    if _workers is None:
        _workers = _make_workers(grid, params)
    rhs, imex = _workers
    u = state.field
    for _ in range(config.max_retries):
        if config.scheme == "explicit-rk4-adaptive":
            res = _try_explicit(u, dt, rhs, config.step_tol)
        else:
            res = imex.trial(u, dt, config.step_tol)
        if res is not None and res[1] <= 1.0:
            return SimState(t=state.t + dt, dt=dt, field=res[0],
                            step_index=state.step_index + 1)
        dt *= 0.5
        if dt < config.dt_min:
            break
    raise NumericalFailure(
        f"step rejected down to dt={dt:.3e} at t={state.t:.6e} "
        f"(u_max={float(np.max(u)):.3e})")


def _make_workers(grid: Grid, params: ModelParams):
    return _rhs_factory(grid, params), _ImexStepper(grid, params)


@dataclass
class RunResult:
    """Trajectory, snapshots and the termination event of one scenario run."""

    scenario: "ScenarioConfig"  # noqa: F821 - imported lazily to avoid a cycle
    grid: Grid
    params: ModelParams
    records: list[DiagnosticsRecord]
    ut_inf: list[float]
    snapshots: list[tuple[float, np.ndarray]]
    event: str
    reason: str

    @property
    def final_field(self) -> np.ndarray:
        return self.snapshots[-1][1]


#: Number of trailing per-record snapshots retained for late-time analysis.
TRAILING_SNAPSHOTS = 8


def run(scenario) -> RunResult:
    """Advance a scenario to its horizon, steady state or suspected blow-up.

    Diagnostics are recorded every `record_cadence` accepted steps; snapshots
    are taken at the configured times, at the final accepted step, and from a
    small trailing buffer of recent records (so late-time profiles survive
    even when the termination time is not known in advance).
    """
    from .scenarios import build_initial_field  # local import breaks the module cycle

    cfg = scenario.integrator
    grid = build_grid(scenario.geometry.kind, scenario.geometry.points,
                      extent=scenario.geometry.length,
                      dimension=scenario.geometry.dimension)
    params = scenario.params
    u0 = build_initial_field(scenario, grid)
    workers = _make_workers(grid, params)

    state = SimState(t=0.0, dt=0.0, field=u0, step_index=0)
    records = [compute_record(grid, params, u0, 0.0, scenario.delta_diag)]
    ut_inf = [float("nan")]
    umax0 = float(np.max(u0))

    pending = sorted(set(float(t) for t in scenario.snapshot_times))
    snapshots: list[tuple[float, np.ndarray]] = []
    if pending and pending[0] <= 0.0:
        while pending and pending[0] <= 0.0:
            pending.pop(0)
        snapshots.append((0.0, u0.copy()))
    trailing: deque[tuple[float, np.ndarray]] = deque(maxlen=TRAILING_SNAPSHOTS)

    event = reason = None
    since_record = 0
    last_ut = float("nan")

    def grown() -> bool:
        return float(np.max(state.field)) >= GROWTH_FACTOR_FOR_BLOWUP * umax0

    while True:
        umax = float(np.max(state.field))
        if umax >= cfg.overflow_guard:
            if grown():
                event, reason = EVENT_BLOWUP, (
                    f"u_max={umax:.3e} reached the overflow guard after growing "
                    f"{umax / umax0:.1e}x")
            else:
                event, reason = EVENT_FAILURE, "overflow guard hit without sustained growth"
            break
        if state.t >= scenario.t_end * (1.0 - 1e-14):
            event, reason = EVENT_HORIZON, f"t_end={scenario.t_end} reached"
            break
        bound = propose_dt(state, grid, params, cfg)
        if bound < cfg.dt_min:
            if grown():
                event, reason = EVENT_BLOWUP, (
                    f"reaction step bound fell below dt_min at u_max={umax:.3e} "
                    f"({umax / umax0:.1e}x growth)")
            else:
                event, reason = EVENT_FAILURE, f"step bound {bound:.3e} below dt_min"
            break
        prev = state.field
        try:
            state = step(state, grid, params, cfg,
                         dt_cap=scenario.t_end - state.t, _workers=workers)
        except NumericalFailure as exc:
            if grown():
                event, reason = EVENT_BLOWUP, f"step collapse during strong growth: {exc}"
            else:
                event, reason = EVENT_FAILURE, str(exc)
            break
        ut = float(np.max(np.abs(state.field - prev))) / state.dt
        last_ut = ut
        since_record += 1
        if since_record >= scenario.record_cadence:
            since_record = 0
            records.append(compute_record(grid, params, state.field, state.t,
                                          scenario.delta_diag, dt=state.dt))
            ut_inf.append(ut)
            trailing.append((state.t, state.field.copy()))
        while pending and state.t >= pending[0]:
            pending.pop(0)
            snapshots.append((state.t, state.field.copy()))
        if 0.0 < ut <= cfg.steady_tol:
            # an exactly-frozen state (ut == 0) is an equilibrium, not an
            # asymptotic settling event; keep integrating to the horizon
            event, reason = EVENT_STEADY, f"|u_t|_inf={ut:.3e} <= {cfg.steady_tol}"
            break

    if records[-1].t < state.t:
        records.append(compute_record(grid, params, state.field, state.t,
                                      scenario.delta_diag, dt=state.dt))
        ut_inf.append(last_ut)

    taken = {t for t, _ in snapshots}
    for t_b, u_b in trailing:
        if t_b not in taken:
            snapshots.append((t_b, u_b))
            taken.add(t_b)
    if state.t not in taken:
        snapshots.append((state.t, state.field.copy()))
    snapshots.sort(key=lambda s: s[0])

    return RunResult(scenario=scenario, grid=grid, params=params,
                     records=records, ut_inf=ut_inf, snapshots=snapshots,
                     event=event, reason=reason)
