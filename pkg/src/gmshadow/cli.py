"""Command-line surface: run, classify, spectrum, sweep, presets.

Exit codes: 0 for completed runs (a detected blow-up is a scientific result,
not a failure), 1 for configuration errors, 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from . import scenarios
from .grid import GridError, build_grid
from .initial import InitialDataError
from .integrate import EVENT_FAILURE, NumericalFailure, run
from .output import _jsonable, default_output_root, write_run_outputs
from .params import ParameterError, classify_regime, validate_params
from .spectral import linearized_spectrum, neumann_eigenpairs

CONFIG_ERRORS = (scenarios.ConfigError, scenarios.PresetError, ParameterError,
                 GridError, InitialDataError, FileNotFoundError, ValueError)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gmshadow",
                                 description="Scenario-driven solver for the "
                                 "non-local activator equation")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its outputs")
    p_run.add_argument("--config", help="TOML or JSON scenario file")
    p_run.add_argument("--preset", help="named preset (used when no config is given)")
    p_run.add_argument("--out", help="output root (default: $GMSHADOW_OUT or ./gmshadow-out)")

    p_cls = sub.add_parser("classify", help="print the regime report for an exponent set")
    for flag in ("-p", "-q", "-r", "-s"):
        p_cls.add_argument(flag, type=float, required=True, dest=flag[1])
    p_cls.add_argument("--dim", type=int, default=None,
                       help="space dimension for dimension-dependent tags")

    p_spec = sub.add_parser("spectrum", help="print eigenvalues and growth rates")
    p_spec.add_argument("--config", required=True)
    p_spec.add_argument("-k", type=int, default=6, help="number of modes")

    p_sweep = sub.add_parser("sweep", help="cartesian parameter sweep of a scenario")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--vary", action="append", required=True,
                         metavar="KEY=LO:HI:N",
                         help="dotted config key swept over N evenly spaced values")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out")

    sub.add_parser("presets", help="list presets with their hypotheses")
    return ap


def _load_scenario(args) -> scenarios.ScenarioConfig:
    if args.config:
        return scenarios.load_config(args.config)
    if args.preset:
        return scenarios.preset(args.preset)
    raise scenarios.ConfigError("run requires --config or --preset")


def _cmd_run(args) -> int:
    cfg = _load_scenario(args)
    out_root = args.out or cfg.output_dir or default_output_root()
    result = run(cfg)
    run_dir = write_run_outputs(result, out_root)
    print(f"{cfg.name}: {result.event} ({result.reason}); outputs in {run_dir}")
    return 2 if result.event == EVENT_FAILURE else 0


def _cmd_classify(args) -> int:
    params = validate_params(args.p, args.q, args.r, args.s)
    report = classify_regime(params, dimension=args.dim)
    payload = _jsonable(report)
    payload["params"] = _jsonable(dataclasses.asdict(params))
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_spectrum(args) -> int:
    cfg = scenarios.load_config(args.config)
    grid = build_grid(cfg.geometry.kind, cfg.geometry.points,
                      extent=cfg.geometry.length, dimension=cfg.geometry.dimension)
    eig = neumann_eigenpairs(grid, args.k)
    rates = linearized_spectrum(cfg.params, grid, args.k)
    unstable = any(r.sigma > 0 and r.kind == "nonconstant" for r in rates)
    print(json.dumps({
        "eigenvalues": [float(v) for v in eig.mu_squared],
        "growth_rates": [_jsonable(r) for r in rates],
        "nonconstant_mode_unstable": unstable,
        "instability_criterion": "mu_2^2 < p - 1",
        "mu2_squared": float(eig.mu_squared[1]) if eig.count > 1 else None,
        "p_minus_1": cfg.params.p - 1.0,
    }, indent=2))
    return 0


def _set_dotted(cfg: scenarios.ScenarioConfig, key: str, value: float):
    section, _, leaf = key.partition(".")
    if not leaf:
        if section == "t_end":
            return replace(cfg, t_end=float(value))
        raise scenarios.ConfigError(f"cannot sweep top-level key {key!r}")
    if section == "params":
        raw = {f: getattr(cfg.params, f) for f in ("p", "q", "r", "s")}
        if leaf not in raw:
            raise scenarios.ConfigError(f"cannot sweep {key!r}")
        raw[leaf] = float(value)
        return replace(cfg, params=validate_params(**raw))
    if section == "initial":
        leaf = "lam" if leaf == "lambda" else leaf
        return replace(cfg, initial=replace(cfg.initial, **{leaf: value}))
    if section == "integrator":
        return replace(cfg, integrator=replace(cfg.integrator, **{leaf: value}))
    if section == "geometry":
        value = int(value) if leaf in ("points", "dimension") else value
        return replace(cfg, geometry=replace(cfg.geometry, **{leaf: value}))
    if section == "time" and leaf == "t_end":
        return replace(cfg, t_end=float(value))
    raise scenarios.ConfigError(f"cannot sweep {key!r}")


def _parse_vary(spec: str):
    key, _, rng = spec.partition("=")
    try:
        lo, hi, n = rng.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise scenarios.ConfigError(f"--vary expects KEY=LO:HI:N (got {spec!r})") from exc
    if n < 1:
        raise scenarios.ConfigError(f"--vary needs at least one point (got {n})")
    vals = [lo] if n == 1 else [lo + i * (hi - lo) / (n - 1) for i in range(n)]
    return key.strip(), vals


def _cmd_sweep(args) -> int:
    base = scenarios.load_config(args.config)
    axes = [_parse_vary(v) for v in args.vary]
    jobs: list[scenarios.ScenarioConfig] = [base]
    for key, vals in axes:
        jobs = [replace(_set_dotted(cfg, key, v),
                        name=f"{cfg.name}-{key.replace('.', '-')}={v:.8g}")
                for cfg in jobs for v in vals]
    for cfg in jobs:
        scenarios.validate_scenario(replace(cfg, preset=None))
    out_root = args.out or base.output_dir or default_output_root()

    def one(cfg):
        result = run(cfg)
        write_run_outputs(result, out_root)
        return cfg.name, result.event

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(one, jobs))
    else:
        outcomes = [one(cfg) for cfg in jobs]
    outcomes.sort()
    index = {"base": base.name, "runs": [{"name": n, "event": e} for n, e in outcomes]}
    with open(f"{out_root}/{base.name}-sweep.json", "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2)
        f.write("\n")
    for name, event in outcomes:
        print(f"{name}: {event}")
    return 2 if any(e == EVENT_FAILURE for _n, e in outcomes) else 0


def _cmd_presets() -> int:
    for name in scenarios.PRESET_NAMES:
        print(f"{name}:")
        print(f"    {scenarios._PRESET_EXPECTATIONS[name]}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "classify":
            return _cmd_classify(args)
        if args.command == "spectrum":
            return _cmd_spectrum(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "presets":
            return _cmd_presets()
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
