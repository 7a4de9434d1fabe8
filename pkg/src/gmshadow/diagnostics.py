"""Scalar observables, phase-plane tracking, Lyapunov machinery, blow-up fits.

Per-record observables follow the moment family

    zeta = avg(u^r),   z = avg(u^(-p+1+r)),   w = avg(u^(p-1+r)),

which satisfy the Cauchy-Schwarz bound w*z >= zeta^2 (equality for constants).
The phase-plane machinery tracks (zeta, z): differentiating the moments along
the flow shows d(zeta)/dt >= r*zeta^(2-gamma)/z - r*zeta and
dz/dt <= (p-1-r)(z - zeta^(1-gamma)), so for gamma < 1, r <= 1 < (p-1)/r the
region z < zeta^(1-gamma) is forward invariant with zeta increasing and z
decreasing inside it, and zeta escapes in finite time no later than

    t_hat = zeta(0)^(gamma-1) / ((1-gamma) * c0 * r),
    c0    = 1/z(0) - 1/zeta(0)^(1-gamma).

When r = p + 1 the flow is a gradient flow of

    J(u) = (avg(|grad u|^2) + avg(u^2))/2 - avg(u^(p+1))^(1-gamma) / ((p+1)(1-gamma)),

with dJ/dt = -avg(u_t^2) <= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid, average_power, gradient_square_average
from .params import ModelParams, VARIATIONAL_TOL


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar observables of one accepted state."""

    t: float
    dt: float
    u_mean: float
    u_max: float
    u_min: float
    argmax_rho: float
    zeta: float
    z: float
    w: float
    J: float | None
    I: float | None
    u_neg_delta_avg: float
    K: float


def compute_record(grid: Grid, params: ModelParams, field_values: np.ndarray,
                   t: float, delta_diag: float = 0.01, dt: float = float("nan")) -> DiagnosticsRecord:
    """All per-time observables of a positive field.

    J and I exist only in the variational case r = p + 1 (and gamma != 1);
    they are None otherwise and serialized as empty columns.
    """
    u = grid.require_field(field_values)
    p, r, gam = params.p, params.r, params.gamma
    w_q = grid.weights
    zeta = average_power(grid, u, r)
    z_m = average_power(grid, u, -p + 1.0 + r)
    w_m = average_power(grid, u, p - 1.0 + r)
    j_val = i_val = None
    if params.variational and abs(1.0 - gam) > VARIATIONAL_TOL:
        grad2 = gradient_square_average(grid, u)
        l2 = float(w_q @ (u * u))
        well = zeta ** (1.0 - gam)          # zeta = avg(u^(p+1)) here
        j_val = 0.5 * (grad2 + l2) - well / ((p + 1.0) * (1.0 - gam))
        i_val = grad2 + l2 - well
    idx = int(np.argmax(u))
    return DiagnosticsRecord(
        t=float(t), dt=float(dt),
        u_mean=float(w_q @ u), u_max=float(u[idx]), u_min=float(np.min(u)),
        argmax_rho=float(grid.nodes[idx]),
        zeta=zeta, z=z_m, w=w_m, J=j_val, I=i_val,
        u_neg_delta_avg=average_power(grid, u, -float(delta_diag)),
        K=math.exp((1.0 - p) * t) / zeta ** gam,
    )


@dataclass(frozen=True)
class RegionState:
    """Position of a (zeta, moment) point relative to the two phase curves."""

    gamma1_residual: float   # moment - zeta^(1-gamma)
    gamma2_residual: float   # moment - zeta^(1-(p-1)/r)
    in_region: bool          # moment < zeta^(1-gamma)


def region_state(zeta: float, moment: float, params: ModelParams) -> RegionState:
    """Signed residuals against the curves m = zeta^(1-gamma) and m = zeta^(1-(p-1)/r).

    `moment` is the phase-plane partner of zeta, the average of u^(r-p+1)
    (recorded as column z in trajectories); the two curves cross at (1, 1).
    """
    if zeta <= 0 or moment <= 0:
        raise ValueError(f"phase-plane coordinates must be positive (got {zeta}, {moment})")
    g1 = moment - zeta ** (1.0 - params.gamma)
    g2 = moment - zeta ** (1.0 - params.rho_index)
    return RegionState(gamma1_residual=g1, gamma2_residual=g2, in_region=g1 < 0.0)


def escape_time_bound(zeta0: float, moment0: float, params: ModelParams) -> float:
    """Upper bound on the blow-up time from a starting point inside the region."""
    c0 = 1.0 / moment0 - 1.0 / zeta0 ** (1.0 - params.gamma)
    if c0 <= 0:
        raise ValueError("starting point is not inside the invariant region (c0 <= 0)")
    return zeta0 ** (params.gamma - 1.0) / ((1.0 - params.gamma) * c0 * params.r)


def spike_time_bound(params: ModelParams, lam: float, delta: float) -> float:
    """Upper bound on the spiky blow-up time from the pure-reaction comparison."""
    a = 2.0 / (params.p - 1.0)
    peak0 = lam * delta ** (-a) * (1.0 + a / 2.0)
    return peak0 ** (1.0 - params.p) / (params.p - 1.0)


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    detail: str


def check_monotone_bounds(records, params: ModelParams,
                          step_tol: float = 1e-9) -> list[Violation]:
    """Finite-difference checks of the exact monotone quantities.

    (a) p >= r: mean mass obeys d(mean)/dt >= -mean + mean^(p-r*gamma);
    (b) r = p+1: J nonincreasing;
    (c) avg(u^-delta) bounded by 1.001x its maximum over the first tenth of
        the covered time span (a fitted stand-in for the unknown uniform
        constant; meaningful on runs that settle, reported elsewhere);
    (d) e^t * mean(u) nondecreasing.

    Tolerances combine per-record state error (step_tol scale) with secant
    curvature O(dt^2); violations are reported, never raised.
    """
    recs = list(records)
    out: list[Violation] = []
    if len(recs) < 3:
        return out
    slack = 10.0 * step_tol + 1e-12
    m_exp = params.net_exponent
    check_mass = params.p >= params.r
    check_j = recs[0].J is not None

    t_head = recs[0].t + 0.1 * (recs[-1].t - recs[0].t)
    early = [r.u_neg_delta_avg for r in recs if r.t <= t_head] or [recs[0].u_neg_delta_avg]
    early_cap = max(early) * (1.0 + 1e-3)

    for k in range(len(recs) - 1):
        a, b = recs[k], recs[k + 1]
        dt_rec = b.t - a.t
        if dt_rec <= 0:
            continue
        if check_mass:
            # secant of the mean equals the time average of its derivative,
            # which dominates min over the interval of -v + v^m; sampling the
            # endpoint states keeps the comparison first-order robust
            samples = (a.u_mean, 0.5 * (a.u_mean + b.u_mean), b.u_mean)
            rhs = min(-v + v ** m_exp for v in samples)
            tol = 10.0 * max(dt_rec ** 2, 1e-12) * max(1.0, abs(rhs)) \
                + slack * max(1.0, a.u_mean, b.u_mean) / dt_rec
            if (b.u_mean - a.u_mean) / dt_rec < rhs - tol:
                out.append(Violation("mass-inequality", k,
                                     f"secant {(b.u_mean - a.u_mean) / dt_rec:.6e} < rhs {rhs:.6e}"))
        if check_j and a.J is not None and b.J is not None:
            tol_j = slack * max(1.0, abs(a.J), abs(b.J))
            if b.J - a.J > tol_j:
                out.append(Violation("dissipation", k, f"J rose by {b.J - a.J:.3e}"))
        lhs, rhs_d = math.exp(b.t) * b.u_mean, math.exp(a.t) * a.u_mean
        if lhs < rhs_d * (1.0 - slack):
            out.append(Violation("exp-mean-monotone", k,
                                 f"e^t*mean fell from {rhs_d:.6e} to {lhs:.6e}"))
    for k, r in enumerate(recs):
        if r.u_neg_delta_avg > early_cap:
            out.append(Violation("neg-delta-bound", k,
                                 f"avg(u^-delta) {r.u_neg_delta_avg:.6e} exceeds early cap {early_cap:.6e}"))
    return out


@dataclass(frozen=True)
class BlowUpReport:
    """Blow-up inference: detection verdict, fitted time/rate, set evidence."""

    detected: bool
    classification: str          # "finite-time", "growth-no-fit" or "none"
    T_est: float | None = None
    beta_fit: float | None = None
    beta_theory: float | None = None
    C_fit: float | None = None
    fit_window: tuple[float, float] | None = None
    fit_r2: float | None = None
    n_fit_points: int = 0
    single_point: bool | None = None
    argmax_drift: float | None = None
    profile_slope: float | None = None
    note: str = ""


def _powerlaw_fit(tt: np.ndarray, log_u: np.ndarray):
    """Jointly fit log u = -beta log(T - t) + log C by golden section on T."""
    t_last = tt[-1]
    span = t_last - tt[0]

    def sse(T):
        x = np.log(T - tt)
        design = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(design, log_u, rcond=None)
        return float(np.sum((log_u - design @ coef) ** 2)), coef

    # lower edge one ulp past the last sample so T - t stays positive
    lo = np.nextafter(t_last, np.inf)
    hi = t_last + span
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    for _ in range(400):
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        if sse(c)[0] < sse(d)[0]:
            b = d
        else:
            a = c
        if b - a <= 1e-16 * span:
            break
    T = 0.5 * (a + b)
    ss, coef = sse(T)
    total = float(np.sum((log_u - log_u.mean()) ** 2))
    r2 = 1.0 - ss / total if total > 0 else 0.0
    return T, -float(coef[0]), float(np.exp(coef[1])), r2


def fit_blowup(records, params: ModelParams, overflow_guard: float = 1e10,
               window_lower_factor: float = 100.0, min_points: int = 8,
               r2_threshold: float = 0.99) -> BlowUpReport:
    """Fit u_max ~ C (T - t)^(-beta) over the late-growth window.

    The window is the records with u_max in [window_lower_factor * u_max(0),
    overflow_guard].  Detection requires fit r^2 >= 0.99 and T within one
    window span beyond the last record.  Runs whose K vanishes along the way
    carry a note (the power-law rate is then not expected to be universal).
    """
    recs = list(records)
    beta_theory = 1.0 / (params.p - 1.0)
    if not recs:
        return BlowUpReport(False, "none", beta_theory=beta_theory, note="empty trajectory")
    t_arr = np.array([r.t for r in recs])
    u_arr = np.array([r.u_max for r in recs])
    k_arr = np.array([r.K for r in recs])
    note = ""
    if k_arr[-1] < 1e-3 * k_arr[0]:
        note = ("nonlocal gain K decayed toward zero along the run; "
                "power-law rate need not match 1/(p-1)")
    lo = window_lower_factor * u_arr[0]
    mask = (u_arr >= lo) & (u_arr <= overflow_guard)
    if mask.sum() < min_points:
        return BlowUpReport(
            False, "none" if u_arr[-1] < lo else "growth-no-fit",
            beta_theory=beta_theory, n_fit_points=int(mask.sum()),
            note=(note + "; " if note else "") + f"window too short ({int(mask.sum())} records)")
    tt, uu = t_arr[mask], u_arr[mask]
    T, beta, c_fit, r2 = _powerlaw_fit(tt, np.log(uu))
    window = (float(tt[0]), float(tt[-1]))
    span = window[1] - window[0]
    in_cone = tt[-1] < T <= tt[-1] + span
    detected = bool(r2 >= r2_threshold and in_cone)
    return BlowUpReport(
        detected=detected,
        classification="finite-time" if detected else "growth-no-fit",
        T_est=float(T), beta_fit=float(beta), beta_theory=beta_theory,
        C_fit=float(c_fit), fit_window=window, fit_r2=float(r2),
        n_fit_points=int(mask.sum()), note=note,
    )


@dataclass(frozen=True)
class SinglePointEvidence:
    """Three pieces of evidence that the blow-up set is a single point."""

    argmax_fixed: bool           # (a) argmax at the reference point past half-time
    argmax_drift: float          # max |argmax - reference| over late records
    tail_bound_ok: bool | None   # (b) rho^N u <= (1+1e-6) mean(u) at snapshots
    tail_bound_margin: float | None
    far_point_bounded: bool      # (c) probe varies < 10x while peak grows > 10^3
    far_point_ratio: float
    peak_growth: float
    whole_domain: bool           # (c) failed: growth is not localized


def blowup_set_check(snapshots, records, grid: Grid, params: ModelParams,
                     probe_distance: float = 0.25) -> SinglePointEvidence:
    """Evidence that growth localizes at a single point.

    (a) the running argmax stays at its final location past half-time;
    (b) on balls, rho^N u stays below (1 + 1e-6) mean(u) at every snapshot
        (radially decreasing profiles put their mass at the origin);
    (c) the solution at a probe node `probe_distance` away from the blow-up
        point varies by less than 10x while the peak grows by more than 10^3.
    """
    snaps = sorted(((float(t), np.asarray(u)) for t, u in snapshots), key=lambda s: s[0])
    if len(snaps) < 2:
        raise ValueError("single-point check needs at least two snapshots")
    recs = list(records)
    ref = recs[-1].argmax_rho
    t_half = recs[-1].t / 2.0
    late = [r for r in recs if r.t >= t_half] or recs[-1:]
    drift = max(abs(r.argmax_rho - ref) for r in late)
    argmax_fixed = drift <= 2.0 * grid.h

    tail_ok: bool | None = None
    tail_margin: float | None = None
    if grid.kind == "ball":
        n = grid.dimension
        worst = -np.inf
        for _t, u in snaps:
            mean = float(grid.weights @ u)
            worst = max(worst, float(np.max(grid.nodes ** n * u)) / mean)
        tail_margin = worst
        tail_ok = worst <= 1.0 + 1e-6

    probe_rho = ref + probe_distance if ref + probe_distance <= grid.nodes[-1] \
        else ref - probe_distance
    probe_idx = int(np.argmin(np.abs(grid.nodes - probe_rho)))
    peak_idx = int(np.argmin(np.abs(grid.nodes - ref)))
    probe_vals = np.array([u[probe_idx] for _t, u in snaps])
    peak_vals = np.array([u[peak_idx] for _t, u in snaps])
    far_ratio = float(probe_vals.max() / probe_vals.min())
    peak_growth = float(peak_vals.max() / peak_vals[0])
    far_bounded = far_ratio < 10.0 and peak_growth > 1e3
    return SinglePointEvidence(
        argmax_fixed=bool(argmax_fixed), argmax_drift=float(drift),
        tail_bound_ok=tail_ok, tail_bound_margin=tail_margin,
        far_point_bounded=bool(far_bounded), far_point_ratio=far_ratio,
        peak_growth=peak_growth,
        whole_domain=bool(peak_growth > 1e3 and far_ratio >= 10.0),
    )


@dataclass(frozen=True)
class ProfileReport:
    """Two candidate fits of the final spatial profile near the blow-up point.

    The pure power model is u ~ rho^(-slope); the log-corrected model is
    u ~ (|log rho| / rho^2)^kappa.  Both residuals are reported without a
    verdict; the power prediction 2/(p-1) accompanies them.
    """

    slope_power: float
    resid_power: float
    kappa_logcorr: float
    resid_logcorr: float
    prediction_power: float
    n_points: int


def profile_extract(final_snapshot, grid: Grid, params: ModelParams,
                    rho_max: float = 0.1) -> ProfileReport:
    """Least-squares profile slopes over rho in [4h, rho_max]."""
    _t, u = final_snapshot
    u = grid.require_field(np.asarray(u))
    mask = (grid.nodes >= 4.0 * grid.h) & (grid.nodes <= rho_max)
    if mask.sum() < 8:
        raise ValueError(
            f"profile window [{4 * grid.h:.3e}, {rho_max}] holds only {int(mask.sum())} nodes")
    rho = grid.nodes[mask]
    log_u = np.log(u[mask])

    def lin_fit(x):
        design = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(design, log_u, rcond=None)
        resid = float(np.sqrt(np.mean((log_u - design @ coef) ** 2)))
        return float(coef[0]), resid

    slope_p, resid_p = lin_fit(np.log(1.0 / rho))
    kappa, resid_l = lin_fit(np.log(np.abs(np.log(rho)) / rho ** 2))
    return ProfileReport(slope_power=slope_p, resid_power=resid_p,
                         kappa_logcorr=kappa, resid_logcorr=resid_l,
                         prediction_power=2.0 / (params.p - 1.0),
                         n_points=int(mask.sum()))


def enrich_report(report: BlowUpReport, evidence: SinglePointEvidence | None,
                  profile: ProfileReport | None) -> BlowUpReport:
    """Fold set evidence and profile slope into a fitted report."""
    updates = {}
    if evidence is not None:
        updates["single_point"] = (evidence.argmax_fixed and evidence.far_point_bounded
                                   and evidence.tail_bound_ok is not False)
        updates["argmax_drift"] = evidence.argmax_drift
    if profile is not None:
        updates["profile_slope"] = profile.slope_power
    return replace(report, **updates) if updates else report
