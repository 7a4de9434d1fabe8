"""Run-output writers: trajectory CSV, snapshot CSVs, summary JSON.

Layout under the output root:

    <out>/<scenario>/trajectory.csv
    <out>/<scenario>/snapshots/t=<value>.csv
    <out>/<scenario>/summary.json

The environment variable GMSHADOW_OUT supplies the default output root.
"""
from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

from .diagnostics import (BlowUpReport, SinglePointEvidence, blowup_set_check,
                          check_monotone_bounds, enrich_report, fit_blowup,
                          profile_extract)
from .grid import write_field_csv
from .integrate import EVENT_BLOWUP, RunResult
from .params import classify_regime

TRAJECTORY_COLUMNS = ("t,dt,u_mean,u_max,u_min,argmax_rho,zeta,z,w,J,I,"
                      "u_neg_delta_avg,K_of_t")


def default_output_root() -> Path:
    return Path(os.environ.get("GMSHADOW_OUT", "gmshadow-out"))


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def write_trajectory_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(TRAJECTORY_COLUMNS + "\n")
        for r in records:
            f.write(",".join([
                _fmt(r.t), _fmt(r.dt), _fmt(r.u_mean), _fmt(r.u_max), _fmt(r.u_min),
                _fmt(r.argmax_rho), _fmt(r.zeta), _fmt(r.z), _fmt(r.w),
                _fmt(r.J), _fmt(r.I), _fmt(r.u_neg_delta_avg), _fmt(r.K),
            ]) + "\n")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and obj != obj:  # NaN
        return None
    return obj


def analyze_run(result: RunResult) -> tuple[BlowUpReport, SinglePointEvidence | None, list]:
    """Post-process a run: blow-up fit, set evidence, monotone-bound violations."""
    cfg = result.scenario
    report = fit_blowup(result.records, result.params,
                        overflow_guard=cfg.integrator.overflow_guard)
    evidence = None
    profile = None
    if result.event == EVENT_BLOWUP and len(result.snapshots) >= 2:
        evidence = blowup_set_check(result.snapshots, result.records,
                                    result.grid, result.params)
        if report.detected and result.grid.kind == "ball":
            try:
                profile = profile_extract(result.snapshots[-1], result.grid, result.params)
            except ValueError:
                profile = None
    report = enrich_report(report, evidence, profile)
    violations = check_monotone_bounds(result.records, result.params,
                                       step_tol=cfg.integrator.step_tol)
    return report, evidence, violations


def write_run_outputs(result: RunResult, out_root=None) -> Path:
    """Write the full output tree for one run; returns the scenario directory."""
    root = Path(out_root) if out_root is not None else default_output_root()
    run_dir = root / result.scenario.name
    snap_dir = run_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)

    traj_path = run_dir / "trajectory.csv"
    write_trajectory_csv(traj_path, result.records)
    snapshot_files = []
    for t, u in result.snapshots:
        path = snap_dir / f"t={t:.10g}.csv"
        write_field_csv(path, result.grid, u)
        snapshot_files.append(str(path.relative_to(run_dir)))

    report, evidence, violations = analyze_run(result)
    regime = classify_regime(result.params,
                             dimension=result.grid.dimension if result.grid.kind == "ball" else 1)
    summary = {
        "scenario": result.scenario.name,
        "params": {"p": result.params.p, "q": result.params.q,
                   "r": result.params.r, "s": result.params.s,
                   "gamma": result.params.gamma, "rho_index": result.params.rho_index},
        "regime": _jsonable(regime),
        "termination": {"event": result.event, "reason": result.reason,
                        "t_final": result.records[-1].t,
                        "u_max_final": result.records[-1].u_max},
        "records_path": "trajectory.csv",
        "snapshots": snapshot_files,
        "blowup_report": _jsonable(report),
        "single_point_evidence": _jsonable(evidence) if evidence is not None else None,
        "violations": [_jsonable(v) for v in violations],
        "expectation": result.scenario.expectation,
    }
    with open(run_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(_jsonable(summary), f, indent=2)
        f.write("\n")
    return run_dir
