"""Single runs, ensembles and the parameter scans behind the figures."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..eigenframe import build_frame_path, tls_angles, tls_vectors
from ..ensemble import EnsembleResult, metrics, run_ensemble
from ..kernel import build_context
from ..models import ModelKind, ModelSpec, eval_fields
from ..noise import NoiseKind, NoiseSpec, sample_increments, trajectory_rng
from ..solver import Method, SolverConfig, solve_batch, solve_components_batch
from .config import ConfigError, ExperimentConfig, default_steps


def initial_components(model: ModelSpec):
    """Eigenbasis amplitudes of Model B's ``mu|ud> + nu|du>``; ``None`` for the target state."""
    if model.kind is not ModelKind.MODEL_B or model.modelB_init == (1.0, 0.0):
        return None
    f = eval_fields(model, 0.0)
    _, alpha, beta = tls_angles(f.a, f.b, f.omega)
    V = tls_vectors(alpha, beta, model.initial_branch)
    return V.conj().T @ np.asarray(model.modelB_init, dtype=complex)


def run_single(model: ModelSpec, noise: NoiseSpec, solver: SolverConfig, seed: int = 0,
               index: int = 0):
    """One trajectory; stochastic noise uses the ensemble's sub-stream ``(seed, index)``."""
    path = build_frame_path(model, solver.grid)
    rng = trajectory_rng(seed, index) if noise.is_stochastic else None
    inc = sample_increments(noise, solver.grid, rng)[None]
    ctx = build_context(path, inc, seeds=(seed,))
    init = initial_components(model)
    if init is not None:
        if solver.method is not Method.ORACLE:
            raise ConfigError("a non-eigenstate Model B start needs method = ComponentOracle")
        return solve_components_batch(ctx, solver, init).member(0)
    return solve_batch(ctx, solver).member(0)


def run_experiment(cfg: ExperimentConfig):
    """Trajectory for ``n_traj == 1``, otherwise an :class:`EnsembleResult`."""
    if cfg.n_traj == 1:
        return run_single(cfg.model, cfg.noise, cfg.solver, cfg.base_seed)
    if initial_components(cfg.model) is not None:
        raise ConfigError("ensembles start in the target eigenstate; drop model.mu/nu")
    return run_ensemble(cfg.model, cfg.noise, cfg.solver, cfg.n_traj, cfg.base_seed)


# ------------------------------------------------------------ passage-time scans

def _with_time(cfg: ExperimentConfig, T: float) -> tuple[ModelSpec, SolverConfig]:
    if not cfg.model.is_sweep:
        raise ConfigError("passage-time scans need LinearSweep or ModelB")
    model = replace(cfg.model, passage_time=float(T))
    steps = max(cfg.solver.steps, default_steps(model, T, cfg.noise))
    return model, replace(cfg.solver, t_end=float(T), steps=steps)


def final_amplitude(cfg: ExperimentConfig, T: float, noise: NoiseSpec | None = None):
    """Final ``|psi0|`` (ensemble mean for stochastic noise) and its standard error."""
    noise = cfg.noise if noise is None else noise
    model, solver = _with_time(cfg, T)
    if noise.is_stochastic and cfg.n_traj > 1:
        ens = run_ensemble(model, noise, solver, cfg.n_traj, cfg.base_seed)
        return float(ens.mean_abs_psi0[-1]), float(ens.stderr_abs[-1]), metrics(ens)
    res = run_single(model, noise, solver, cfg.base_seed)
    return float(abs(res.psi0[-1])), 0.0, metrics(res)


def find_threshold(f, values, target: float, tolerance: float = 1e-3):
    """Smallest ``x`` with ``f(x) >= target``: first passing scan value, refined by bisection.

    Returns ``(threshold, bracketed)``; ``threshold`` is ``None`` when no scan
    value reaches the target, and ``bracketed`` is false when the first scan
    value already passes (the true threshold may lie lower).
    """
    values = sorted(values)
    hits = [x for x in values if f(x) >= target]
    if not hits:
        return None, False
    hi = hits[0]
    i = values.index(hi)
    if i == 0:
        return hi, False
    lo = values[i - 1]
    while hi - lo > tolerance * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi, True


@dataclass
class TimeScanReport:
    rows: list
    target: float
    threshold: float | None
    bracketed: bool

    def finals(self):
        return np.array([r["final_abs_psi0"] for r in self.rows])

    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.finals()) > 0))


def scan_passage_time(cfg: ExperimentConfig, values=None, target=None, tolerance=None) -> TimeScanReport:
    values = tuple(values or cfg.scan.values)
    if not values:
        raise ConfigError("scan.values is empty")
    target = cfg.scan.target if target is None else target
    tolerance = cfg.scan.tolerance if tolerance is None else tolerance
    cache = {}

    def f(T):
        if T not in cache:
            cache[T] = final_amplitude(cfg, T)
        return cache[T][0]

    rows = []
    for T in sorted(values):
        f(T)
        val, se, m = cache[T]
        rows.append({"passage_time": T, "final_abs_psi0": val, "stderr_final": se,
                     "final_fidelity": m["final_fidelity"], "min_abs_psi0": m["min_abs_psi0"]})
    thr, bracketed = find_threshold(f, values, target, tolerance)
    return TimeScanReport(rows, target, thr, bracketed)


# ------------------------------------------------------------ noise scans

@dataclass
class NoiseScanReport:
    rows: list
    ensembles: list = field(repr=False, default_factory=list)
    saturation_gamma: float | None = None
    level: float = 0.95

    @property
    def minima(self):
        return np.array([r["min_mean_abs_psi0"] for r in self.rows])

    def steps(self):
        """Per consecutive pair: increase, combined standard error, flags."""
        out = []
        for a, b in zip(self.rows, self.rows[1:]):
            inc = b["min_mean_abs_psi0"] - a["min_mean_abs_psi0"]
            se = float(np.hypot(a["stderr_at_min"], b["stderr_at_min"]))
            out.append({"from": a["gamma"], "to": b["gamma"], "increase": inc, "combined_se": se,
                        "significant": inc >= 2 * se, "violation": inc < -2 * se})
        return out

    @property
    def monotone(self) -> bool:
        return not any(s["violation"] for s in self.steps())


def scan_noise(cfg: ExperimentConfig, gammas=None, n_traj=None, level: float = 0.95) -> NoiseScanReport:
    gammas = tuple(gammas or cfg.scan.values)
    if not gammas or list(gammas) != sorted(gammas) or gammas[0] != 0:
        raise ConfigError("noise scan needs an ascending Gamma list starting at 0")
    n_traj = n_traj or cfg.n_traj
    kind = cfg.noise.kind if cfg.noise.kind in (NoiseKind.GAUSSIAN, NoiseKind.SHOT) else NoiseKind.GAUSSIAN
    path = build_frame_path(cfg.model, cfg.solver.grid)
    rows, ensembles = [], []
    for G in gammas:
        noise = replace(cfg.noise, kind=kind, J=float(np.sqrt(G * cfg.model.j0)))
        ens = run_ensemble(cfg.model, noise, cfg.solver, n_traj, cfg.base_seed, path=path)
        i = int(np.argmin(ens.mean_abs_psi0))
        rows.append({"gamma": G, "min_mean_abs_psi0": float(ens.mean_abs_psi0[i]),
                     "stderr_at_min": float(ens.stderr_abs[i]), "time_of_min": float(ens.grid.t[i]),
                     "final_mean_abs_psi0": float(ens.mean_abs_psi0[-1]),
                     "final_purity": float(ens.purity[-1]) if ens.purity is not None else float("nan")})
        ensembles.append(ens)
    sat = next((r["gamma"] for r in rows if r["min_mean_abs_psi0"] >= level), None)
    return NoiseScanReport(rows, ensembles, sat, level)


# ------------------------------------------------------------ speedup

@dataclass
class SpeedupReport:
    target: float
    gamma: float
    T_free: float | None
    T_noisy: float | None

    @property
    def ratio(self) -> float | None:
        if self.T_free is None or self.T_noisy is None:
            return None
        return self.T_free / self.T_noisy

    @property
    def reachable(self) -> bool:
        return self.ratio is not None


def speedup_report(cfg: ExperimentConfig, target=None, values=None, gamma=None) -> SpeedupReport:
    """Ratio of the smallest noise-free to the smallest noisy passage time reaching ``target``."""
    target = cfg.scan.target if target is None else target
    if not 0 < target < 1:
        raise ConfigError("target must lie in (0, 1)")
    values = tuple(values or cfg.scan.values)
    if gamma is None:
        gamma = cfg.scan.saturating_gamma if cfg.scan.saturating_gamma is not None else cfg.noise.gamma
    free = replace(cfg, noise=NoiseSpec(j0=cfg.model.j0))
    if gamma > 0:
        kind = cfg.noise.kind if cfg.noise.kind in (NoiseKind.GAUSSIAN, NoiseKind.SHOT) else NoiseKind.GAUSSIAN
        noisy_spec = replace(cfg.noise, kind=kind, J=float(np.sqrt(gamma * cfg.model.j0)))
    else:
        noisy_spec = NoiseSpec(j0=cfg.model.j0)
    noisy = replace(cfg, noise=noisy_spec)
    tol = cfg.scan.tolerance
    T_free, _ = find_threshold(lambda T: final_amplitude(free, T)[0], values, target, tol)
    if noisy_spec.is_stochastic:
        T_noisy, _ = find_threshold(lambda T: final_amplitude(noisy, T)[0], values, target, tol)
    else:
        T_noisy = T_free
    return SpeedupReport(target, float(gamma), T_free, T_noisy)


__all__ = [
    "EnsembleResult", "NoiseScanReport", "SpeedupReport", "TimeScanReport", "find_threshold",
    "final_amplitude", "initial_components", "run_experiment", "run_single", "scan_noise",
    "scan_passage_time", "speedup_report",
]
