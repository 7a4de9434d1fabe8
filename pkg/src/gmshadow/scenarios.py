"""Scenario configuration, TOML/JSON loading and theorem-backed presets.

Each preset pins a parameter set and initial state whose qualitative outcome
is guaranteed by the analysis of the model (finite-time blow-up, global
boundedness, mode growth, ...).  The guaranteeing hypotheses are re-evaluated
every time the preset is instantiated; a preset whose own check fails is a
defect, so instantiation raises.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import tomli

from . import initial as _initial
from .diagnostics import compute_record
from .grid import Grid, average_power, build_grid
from .params import (InequalityCheck, ModelParams, classify_regime,
                     validate_params)
from .integrate import IntegratorConfig, validate_integrator_config
from .spectral import neumann_eigenpairs


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


class PresetError(RuntimeError):
    """A preset failed its own hypothesis re-check."""


@dataclass(frozen=True)
class GeometrySpec:
    kind: str = "interval"
    points: int = 128
    length: float = 1.0
    dimension: int = 3


@dataclass(frozen=True)
class InitialSpec:
    type: str = "constant"          # constant | perturbed | spiky | file
    value: float = 1.0              # constant level / perturbation base
    eps: float = 0.0
    mode: int = 2
    lam: float = 0.05
    delta: float = 0.02
    path: str = ""
    ensure_negative_j: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: ModelParams
    geometry: GeometrySpec = GeometrySpec()
    initial: InitialSpec = InitialSpec()
    integrator: IntegratorConfig = IntegratorConfig()
    t_end: float = 10.0
    record_cadence: int = 1
    snapshot_times: tuple[float, ...] = ()
    delta_diag: float = 0.01
    output_dir: str | None = None
    preset: str | None = None
    expectation: str = ""


def build_initial_field(scenario: ScenarioConfig, grid: Grid) -> np.ndarray:
    """Materialize the configured initial state on a grid."""
    spec = scenario.initial
    params = scenario.params
    if spec.type == "constant":
        u = _initial.constant_data(grid, spec.value)
    elif spec.type == "perturbed":
        u = _initial.perturbed_constant(grid, spec.value, spec.eps, spec.mode)
    elif spec.type == "spiky":
        u = _initial.spiky_data(grid, params, _initial.make_spiky_spec(params, spec.lam, spec.delta))
    elif spec.type == "file":
        u = _initial.from_csv(grid, spec.path)
    else:
        raise ConfigError(f"unknown initial data type {spec.type!r}")
    if spec.ensure_negative_j:
        if not params.variational:
            raise ConfigError("ensure_negative_j requires r = p + 1")
        for _ in range(400):
            if _j_value(grid, params, u, scenario.delta_diag) <= 0.0:
                break
            u = u * 1.05
        else:
            raise ConfigError("could not scale initial data to J(u0) <= 0")
    return u


def _j_value(grid, params, u, delta_diag) -> float:
    rec = compute_record(grid, params, u, 0.0, delta_diag)
    if rec.J is None:
        raise ConfigError("J is defined only for r = p + 1 with gamma != 1")
    return rec.J


# ---------------------------------------------------------------------------
# presets

_PRESET_EXPECTATIONS = {
    "turing-instability": (
        "hypotheses: p - r*gamma < 1 and mu_2^2 < p - 1. The homogeneous state "
        "is kinetically stable but the first nonconstant mode grows at rate "
        "(p-1) - mu_2^2."),
    "ode-blowup": (
        "hypotheses: p >= r, p - r*gamma > 1, mean(u0) > 1. The spatial mean "
        "dominates the kinetic orbit and escapes in finite time."),
    "variational-blowup": (
        "hypotheses: r = p+1, gamma < min(1, (p-1)/(p+1)), J(u0) <= 0. The "
        "energy J decreases along the flow and forces finite-time blow-up."),
    "variational-global": (
        "hypotheses: r = p+1, (p-1)/(p+1) < gamma < 1, 1 < p < (N+2)/(N-2), "
        "N >= 3. The energy bounds the H1 norm; the solution exists globally "
        "and stays bounded."),
    "small-rho-global": (
        "hypotheses: (p-1)/r < min(1, 2/N, (1 - 1/r)/2), 0 < gamma < 1. "
        "Moment estimates give global existence."),
    "region-blowup": (
        "hypotheses: 0 < gamma < 1, r <= 1, (p-1)/r > 1, and the start lies in "
        "the invariant region z < zeta^(1-gamma) of the (zeta, z) moment "
        "plane. zeta then grows past every bound before t_hat = "
        "zeta0^(gamma-1)/((1-gamma) c0 r)."),
    "region-global": (
        "hypotheses: gamma > 1, r >= 1, (p-1)/r < 1, and zeta(0)^(1+gamma) > "
        "w(0) so the zeta moment decays from the start. The run stays bounded "
        "with zeta, z and w nonincreasing."),
    "ddi-spiky": (
        "hypotheses: N >= 3, 1 <= r <= p, p > N/(N-2), 2/N < (p-1)/r < gamma. "
        "The homogeneous kinetics relax to 1, yet the spike u0 = lam*phi_delta "
        "blows up in finite time at the origin: instability driven purely by "
        "diffusion against the non-local gain."),
    "rate-fit": (
        "hypotheses: those of ddi-spiky plus max(r, N/(N-2)) < p < (N+2)/(N-2). "
        "The blow-up is type I: |u|_inf ~ (T - t)^(-1/(p-1))."),
    "infinite-time-boundary": (
        "hypotheses: r = p+1, gamma = (p-1)/(p+1), J(u0) < 0. Documentation "
        "only: the L2 norm grows without bound but no finite-time fit is "
        "expected (infinite-time blow-up boundary case)."),
}


def _preset_raw(name: str) -> ScenarioConfig:
    mk = validate_params
    imex = IntegratorConfig(scheme="imex-cn")
    no_steady = 1e-300
    if name == "turing-instability":
        return ScenarioConfig(
            name=name, params=mk(2, 1, 2, 0),
            geometry=GeometrySpec(kind="interval", points=256, length=2 * math.pi),
            initial=InitialSpec(type="perturbed", value=1.0, eps=1e-4, mode=2),
            integrator=replace(imex, dt_max=0.05, step_tol=1e-10, steady_tol=no_steady),
            t_end=8.0, snapshot_times=tuple(np.arange(0.0, 8.01, 0.25)))
    if name == "ode-blowup":
        return ScenarioConfig(
            name=name, params=mk(3, 1, 1, 0),
            geometry=GeometrySpec(kind="interval", points=64, length=1.0),
            initial=InitialSpec(type="constant", value=2.0),
            integrator=IntegratorConfig(scheme="explicit-rk4-adaptive", step_tol=1e-10),
            t_end=2.0)
    if name == "variational-blowup":
        return ScenarioConfig(
            name=name, params=mk(3, 0.25, 4, 0),
            geometry=GeometrySpec(kind="interval", points=128, length=1.0),
            initial=InitialSpec(type="perturbed", value=1.6, eps=0.1, mode=2,
                                ensure_negative_j=True),
            integrator=imex, t_end=3.0)
    if name == "variational-global":
        return ScenarioConfig(
            name=name, params=mk(3, 0.7, 4, 0),
            geometry=GeometrySpec(kind="ball", points=257, dimension=3),
            initial=InitialSpec(type="perturbed", value=1.0, eps=0.3, mode=2),
            integrator=replace(imex, steady_tol=no_steady),
            t_end=50.0, snapshot_times=(0.0, 25.0, 50.0))
    if name == "small-rho-global":
        return ScenarioConfig(
            name=name, params=mk(1.5, 0.5, 4, 0),
            geometry=GeometrySpec(kind="ball", points=129, dimension=3),
            initial=InitialSpec(type="perturbed", value=1.0, eps=0.4, mode=2),
            integrator=replace(imex, steady_tol=no_steady), t_end=20.0)
    if name == "region-blowup":
        return ScenarioConfig(
            name=name, params=mk(3, 0.5, 1, 0),
            geometry=GeometrySpec(kind="interval", points=128, length=1.0),
            initial=InitialSpec(type="perturbed", value=2.0, eps=0.2, mode=2),
            integrator=imex, t_end=3.0)
    if name == "region-global":
        return ScenarioConfig(
            name=name, params=mk(2, 2, 2, 0),
            geometry=GeometrySpec(kind="interval", points=128, length=1.0),
            initial=InitialSpec(type="constant", value=2.0),
            integrator=replace(imex, steady_tol=no_steady), t_end=50.0)
    if name in ("ddi-spiky", "rate-fit"):
        return ScenarioConfig(
            name=name, params=mk(4, 3.5, 1, 0),
            geometry=GeometrySpec(kind="ball", points=4096, dimension=3),
            initial=InitialSpec(type="spiky", lam=0.05, delta=0.02),
            integrator=IntegratorConfig(scheme="explicit-rk4-adaptive", dt_min=1e-19),
            t_end=1.0, snapshot_times=(0.0,))
    if name == "infinite-time-boundary":
        return ScenarioConfig(
            name=name, params=mk(3, 0.5, 4, 0),
            geometry=GeometrySpec(kind="interval", points=256, length=2 * math.pi),
            initial=InitialSpec(type="perturbed", value=1.0, eps=0.5, mode=2),
            integrator=imex, t_end=15.0)
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


PRESET_NAMES = tuple(_PRESET_EXPECTATIONS)


def _chk(description: str, lhs: float, op: str, rhs: float) -> InequalityCheck:
    ops = {"<": lhs < rhs, "<=": lhs <= rhs, ">": lhs > rhs, ">=": lhs >= rhs}
    return InequalityCheck(description, float(lhs), op, float(rhs), ops[op])


def verify_scenario(cfg: ScenarioConfig) -> list[InequalityCheck]:
    """Re-evaluate the hypotheses a preset relies on, including data conditions.

    Returns the full list of checks; callers decide whether failures abort.
    For region-global the two textbook entry inequalities cannot hold at once
    (their product contradicts w*z >= zeta^2), so the verified condition is
    the operative one, zeta(0)^(1+gamma) > w(0), which starts the decay of
    zeta; see the package notes in the README.
    """
    p = cfg.params
    checks: list[InequalityCheck] = []
    name = cfg.preset or cfg.name
    dim = cfg.geometry.dimension if cfg.geometry.kind == "ball" else 1

    def need_tag(tag_name):
        rep = classify_regime(p, dimension=dim)
        tag = next((t for t in rep.theorem_tags if t.name == tag_name), None)
        if tag is None:
            checks.append(InequalityCheck(f"parameter tag {tag_name}", 0.0, ">=", 1.0, False))
        else:
            checks.extend(tag.checks)

    needs_field = name in ("ode-blowup", "variational-blowup", "region-blowup",
                           "region-global", "infinite-time-boundary")
    grid = u0 = None
    if needs_field or name in ("turing-instability", "ddi-spiky", "rate-fit"):
        grid = build_grid(cfg.geometry.kind, cfg.geometry.points,
                          extent=cfg.geometry.length, dimension=cfg.geometry.dimension)
    if needs_field:
        u0 = build_initial_field(cfg, grid)

    if name == "turing-instability":
        checks.append(_chk("p - r*gamma < 1", p.net_exponent, "<", 1.0))
        mu2 = float(neumann_eigenpairs(grid, 2).mu_squared[1])
        checks.append(_chk("mu_2^2 < p - 1", mu2, "<", p.p - 1.0))
    elif name == "ode-blowup":
        need_tag("ode-blowup")
        checks.append(_chk("mean(u0) > 1", float(grid.weights @ u0), ">", 1.0))
    elif name == "variational-blowup":
        need_tag("variational-blowup")
        checks.append(_chk("J(u0) <= 0", _j_value(grid, p, u0, cfg.delta_diag), "<=", 0.0))
    elif name == "variational-global":
        need_tag("variational-global")
    elif name == "small-rho-global":
        need_tag("small-rho-global")
    elif name == "region-blowup":
        need_tag("region-blowup")
        zeta0 = average_power(grid, u0, p.r)
        z0 = average_power(grid, u0, p.r - p.p + 1.0)
        checks.append(_chk("z(0) < zeta(0)^(1-gamma)", z0, "<", zeta0 ** (1.0 - p.gamma)))
    elif name == "region-global":
        need_tag("region-global")
        zeta0 = average_power(grid, u0, p.r)
        w0 = average_power(grid, u0, p.r + p.p - 1.0)
        checks.append(_chk("zeta(0)^(1+gamma) > w(0)", zeta0 ** (1.0 + p.gamma), ">", w0))
    elif name in ("ddi-spiky", "rate-fit"):
        need_tag("ddi-spiky")
        checks.append(_chk("delta >= 4h", cfg.initial.delta, ">=", 4.0 * grid.h))
        checks.append(_chk("p - r*gamma < 1 (kinetics relax to 1)",
                           p.net_exponent, "<", 1.0))
        if name == "rate-fit":
            n = cfg.geometry.dimension
            checks.append(_chk("p > max(r, N/(N-2))", p.p, ">", max(p.r, n / (n - 2))))
            checks.append(_chk("p < (N+2)/(N-2)", p.p, "<", (n + 2) / (n - 2)))
    elif name == "infinite-time-boundary":
        checks.append(_chk("|gamma - (p-1)/(p+1)| = 0", abs(p.gamma - (p.p - 1) / (p.p + 1)), "<=", 1e-12))
        checks.append(_chk("J(u0) < 0", _j_value(grid, p, u0, cfg.delta_diag), "<", 0.0))
    return checks


def preset(name: str) -> ScenarioConfig:
    """Instantiate a named preset and re-run its hypothesis checks."""
    cfg = replace(_preset_raw(name), preset=name,
                  expectation=_PRESET_EXPECTATIONS[name])
    failed = [c for c in verify_scenario(cfg) if not c.holds]
    if failed:
        lines = "; ".join(f"{c.description} ({c.lhs:g} {c.op} {c.rhs:g})" for c in failed)
        raise PresetError(f"preset {name!r} failed its hypothesis check: {lines}")
    return cfg


# ---------------------------------------------------------------------------
# config files

_TOP_KEYS = {"name", "preset", "params", "geometry", "initial", "integrator",
             "time", "diagnostics", "output_dir"}
_SECTION_KEYS = {
    "params": {"p", "q", "r", "s"},
    "geometry": {"kind", "dimension", "length", "points"},
    "initial": {"type", "value", "eps", "mode", "lambda", "delta", "path",
                "ensure_negative_j"},
    "integrator": {"scheme", "cfl_safety", "reaction_safety", "dt_min", "dt_max",
                   "overflow_guard", "steady_tol", "step_tol"},
    "time": {"t_end", "record_cadence", "snapshot_times"},
    "diagnostics": {"delta"},
}


def _reject_unknown(section: str, data: dict, allowed: set) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")


def _parse_file(path) -> dict:
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from exc
    try:
        return tomli.loads(text.decode("utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario from a TOML or JSON file.

    A `preset` key seeds every field from the named preset; any other key
    present in the file overrides the seeded value.  Unknown keys are
    rejected.  The preset hypothesis checks re-run whenever a preset is
    referenced.
    """
    raw = _parse_file(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    _reject_unknown("top level", raw, _TOP_KEYS)
    for sec, allowed in _SECTION_KEYS.items():
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError(f"{path}: section {sec} must be a table/object")
            _reject_unknown(sec, raw[sec], allowed)

    def parse_params(sec):
        missing = {"p", "q", "r", "s"} - set(sec)
        if missing:
            raise ConfigError(f"{path}: params section missing {', '.join(sorted(missing))}")
        return validate_params(sec["p"], sec["q"], sec["r"], sec["s"])

    if "preset" in raw:
        cfg = replace(_preset_raw(str(raw["preset"])), preset=str(raw["preset"]),
                      expectation=_PRESET_EXPECTATIONS.get(str(raw["preset"]), ""))
    elif "params" in raw:
        cfg = ScenarioConfig(name="", params=parse_params(raw["params"]))
    else:
        raise ConfigError(f"{path}: either 'preset' or a [params] section is required")

    if "params" in raw:
        cfg = replace(cfg, params=parse_params(raw["params"]))
    if "geometry" in raw:
        cfg = replace(cfg, geometry=replace(cfg.geometry, **raw["geometry"]))
    if "initial" in raw:
        d = dict(raw["initial"])
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        cfg = replace(cfg, initial=replace(cfg.initial, **d))
    if "integrator" in raw:
        cfg = replace(cfg, integrator=replace(cfg.integrator, **raw["integrator"]))
    if "time" in raw:
        tsec = raw["time"]
        cfg = replace(cfg,
                      t_end=float(tsec.get("t_end", cfg.t_end)),
                      record_cadence=int(tsec.get("record_cadence", cfg.record_cadence)),
                      snapshot_times=tuple(float(x) for x in tsec.get("snapshot_times", cfg.snapshot_times)))
    if "diagnostics" in raw:
        cfg = replace(cfg, delta_diag=float(raw["diagnostics"]["delta"]))
    if "output_dir" in raw:
        cfg = replace(cfg, output_dir=str(raw["output_dir"]))
    if "name" in raw:
        cfg = replace(cfg, name=str(raw["name"]))
    if not cfg.name:
        raise ConfigError(f"{path}: scenario needs a name")
    return validate_scenario(cfg)


def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Cross-field validation shared by file loading and programmatic use."""
    validate_integrator_config(cfg.integrator)
    if cfg.geometry.kind not in ("interval", "ball"):
        raise ConfigError(f"geometry.kind must be interval or ball (got {cfg.geometry.kind!r})")
    if cfg.t_end <= 0:
        raise ConfigError(f"time.t_end must be positive (got {cfg.t_end})")
    if cfg.record_cadence < 1:
        raise ConfigError(f"time.record_cadence must be >= 1 (got {cfg.record_cadence})")
    if not 0.0 < cfg.delta_diag < 1.0:
        raise ConfigError(f"diagnostics.delta must lie in (0, 1) (got {cfg.delta_diag})")
    if any(t < 0 for t in cfg.snapshot_times):
        raise ConfigError("snapshot_times must be nonnegative")
    if cfg.initial.type == "spiky" and cfg.geometry.kind != "ball":
        raise ConfigError("spiky initial data requires ball geometry")
    if cfg.initial.type == "file" and not cfg.initial.path:
        raise ConfigError("initial.type = file requires initial.path")
    if cfg.initial.type not in ("constant", "perturbed", "spiky", "file"):
        raise ConfigError(f"unknown initial.type {cfg.initial.type!r}")
    if cfg.preset:
        failed = [c for c in verify_scenario(cfg) if not c.holds]
        if failed:
            lines = "; ".join(c.description for c in failed)
            raise ConfigError(f"scenario no longer satisfies preset hypotheses: {lines}")
    return cfg
