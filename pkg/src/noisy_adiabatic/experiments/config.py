"""INI experiment files.

Sections ``model``, ``noise``, ``solver``, ``ensemble``, ``scan`` and
``output``; every key is checked against the tables below and anything
unknown is rejected.  Example::

    [model]
    name = ModelA
    omega = 5
    omega_z = 5

    [noise]
    kind = gaussian
    gamma = 1.0

    [solver]
    steps = 4000

    [ensemble]
    n_traj = 2000
    base_seed = 11
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import models
from ..eigenframe import spectrum
from ..models import ModelError, ModelKind, ModelSpec
from ..noise import NoiseKind, NoiseSpec
from ..solver import Method, SolverConfig, suggest_steps


class ConfigError(ValueError):
    pass


_KEYS = {
    "model": {"name", "j0", "omega", "omega_z", "passage_time", "branch", "mu", "nu", "a", "b"},
    "noise": {"kind", "gamma", "j", "w", "a", "nu", "seed", "paper_j"},
    "solver": {"method", "steps", "t_end", "include_geometric_term"},
    "ensemble": {"n_traj", "base_seed"},
    "scan": {"parameter", "values", "target", "saturating_gamma", "tolerance"},
    "output": {"dir", "prefix", "figures"},
}

_MODEL_NAMES = {k.value.lower(): k for k in ModelKind}


@dataclass(frozen=True)
class ScanConfig:
    parameter: str | None = None
    values: tuple = ()
    target: float = 0.95
    saturating_gamma: float | None = None
    tolerance: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    noise: NoiseSpec
    solver: SolverConfig
    n_traj: int = 1
    base_seed: int = 0
    scan: ScanConfig = field(default_factory=ScanConfig)
    out_dir: Path = Path("out")
    prefix: str = "run"
    figures: bool = False
    source: str | None = None
    paper_j: str | None = None

    def with_overrides(self, seed=None, steps=None, n_traj=None, out_dir=None, figures=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, base_seed=int(seed), noise=replace(cfg.noise, seed=int(seed)))
        if steps is not None:
            cfg = replace(cfg, solver=replace(cfg.solver, steps=int(steps)))
        if n_traj is not None:
            if n_traj < 1:
                raise ConfigError("--traj must be >= 1")
            cfg = replace(cfg, n_traj=int(n_traj))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        if figures:
            cfg = replace(cfg, figures=True)
        return cfg


def _floats(text: str, key: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse number list {text!r}") from exc
    if not vals or not all(np.isfinite(vals)):
        raise ConfigError(f"{key}: values must be finite and non-empty")
    return vals


def _get(sec, key, conv, default=None):
    if key not in sec:
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{sec.name}.{key}: bad value {raw!r}") from exc


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _model(sec) -> ModelSpec:
    name = sec.get("name")
    if name is None:
        raise ConfigError("model.name is required")
    kind = _MODEL_NAMES.get(name.strip().lower())
    if kind is None:
        raise ConfigError(f"model.name: unknown model {name!r} (known: {', '.join(k.value for k in ModelKind)})")
    j0 = _get(sec, "j0", float, 1.0)
    branch = _get(sec, "branch", str, "E0")
    try:
        if kind is ModelKind.MODEL_A:
            return models.model_a(_get(sec, "omega", float, 0.0), _get(sec, "omega_z", float, 0.0),
                                  j0=j0, branch=branch)
        if kind is ModelKind.LINEAR_SWEEP:
            return models.linear_sweep(_get(sec, "passage_time", float), j0=j0, branch=branch)
        if kind is ModelKind.MODEL_B:
            return models.model_b(_get(sec, "passage_time", float), j0=j0,
                                  mu=_get(sec, "mu", complex, 1.0), nu=_get(sec, "nu", complex, 0.0))
        poly = {k: _floats(sec[k], f"model.{k}") for k in ("a", "b", "omega_z") if k in sec}
        return models.ModelSpec(ModelKind.GENERIC_TLS, j0=j0, initial_branch=branch, poly=poly)
    except (ModelError, TypeError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _noise(sec, j0) -> tuple[NoiseSpec, str | None]:
    kind_text = _get(sec, "kind", str, "none").strip().lower()
    try:
        kind = NoiseKind(kind_text)
    except ValueError:
        raise ConfigError(f"noise.kind: unknown noise {kind_text!r}") from None
    if "gamma" in sec and "j" in sec:
        raise ConfigError("noise: give either gamma or J, not both")
    J = _get(sec, "j", float, None)
    if J is None:
        gamma = _get(sec, "gamma", float, 0.0)
        if not gamma >= 0:
            raise ConfigError(f"noise.gamma must be >= 0, got {gamma}")
        J = float(np.sqrt(gamma * j0))
    try:
        spec = NoiseSpec(kind, J=J, W=_get(sec, "w", float, 1.0), A=_get(sec, "a", float, 0.0),
                         nu=_get(sec, "nu", float, 1.0), seed=_get(sec, "seed", int, 0), j0=j0)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc
    return spec, sec.get("paper_j")


def default_t_end(model: ModelSpec) -> float:
    """Sweeps end at T; other models default to one period ``pi / J0``."""
    return model.passage_time if model.is_sweep else np.pi / model.j0


def default_steps(model: ModelSpec, t_end: float, noise: NoiseSpec | None = None) -> int:
    t = np.linspace(0.0, t_end, 201)
    e_max = model.j0 * float(np.abs(spectrum(model, t).e).max())
    W = noise.W if noise is not None and noise.kind is NoiseKind.SHOT else None
    return suggest_steps(t_end, e_max, W)


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source or "<string>")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for name in cp.sections():
        if name not in _KEYS:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - _KEYS[name]
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    if "model" not in cp:
        raise ConfigError("missing [model] section")

    model = _model(cp["model"])
    noise, paper_j = _noise(cp["noise"], model.j0) if "noise" in cp else (NoiseSpec(j0=model.j0), None)

    sol = cp["solver"] if "solver" in cp else None
    t_end = _get(sol, "t_end", float, None) if sol is not None else None
    if t_end is None:
        t_end = default_t_end(model)
    if model.is_sweep and abs(t_end - model.passage_time) > 1e-12 * model.passage_time:
        raise ConfigError("solver.t_end must equal model.passage_time for sweep models")
    steps = _get(sol, "steps", int, None) if sol is not None else None
    if steps is None:
        steps = default_steps(model, t_end, noise)
    method_text = _get(sol, "method", str, Method.VOLTERRA.value) if sol is not None else Method.VOLTERRA.value
    methods = {m.value.lower(): m for m in Method}
    method = methods.get(method_text.strip().lower())
    if method is None:
        raise ConfigError(f"solver.method: unknown method {method_text!r}")
    geom = _get(sol, "include_geometric_term", _bool, True) if sol is not None else True
    try:
        solver = SolverConfig(t_end, steps, method, geom)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    ens = cp["ensemble"] if "ensemble" in cp else None
    n_traj = _get(ens, "n_traj", int, 1) if ens is not None else 1
    if n_traj < 1:
        raise ConfigError("ensemble.n_traj must be >= 1")
    base_seed = _get(ens, "base_seed", int, None) if ens is not None else None
    if base_seed is None:
        base_seed = noise.seed

    scan = ScanConfig()
    if "scan" in cp:
        s = cp["scan"]
        target = _get(s, "target", float, 0.95)
        if not 0 < target < 1:
            raise ConfigError("scan.target must lie in (0, 1)")
        scan = ScanConfig(
            parameter=_get(s, "parameter", str, None),
            values=_floats(s["values"], "scan.values") if "values" in s else (),
            target=target,
            saturating_gamma=_get(s, "saturating_gamma", float, None),
            tolerance=_get(s, "tolerance", float, 1e-3),
        )
        if scan.parameter not in (None, "passage_time", "gamma"):
            raise ConfigError(f"scan.parameter: unknown parameter {scan.parameter!r}")

    out = cp["output"] if "output" in cp else None
    out_dir = Path(_get(out, "dir", str, "out")) if out is not None else Path("out")
    prefix = _get(out, "prefix", str, None) if out is not None else None
    if prefix is None:
        prefix = Path(source).stem if source else "run"
    figures = _get(out, "figures", _bool, False) if out is not None else False
    return ExperimentConfig(model, noise, solver, n_traj, base_seed, scan, out_dir, prefix,
                            figures, source, paper_j)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
