"""Monte Carlo over noise realizations.

Trajectories are solved in chunks that share one frame path; every
trajectory draws its noise from ``trajectory_rng(base_seed, index)``, so the
result does not depend on the chunk size or on evaluation order beyond
last-bit rounding.  Sums are accumulated one trajectory at a time in index
order, so repeat runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigenframe import FramePath, build_frame_path
from .grid import TimeGrid
from .kernel import KernelError, build_context
from .noise import NoiseKind, NoiseSpec, UnsupportedNoiseError, ensemble_increments, sample_increments
from .solver import Method, SolverConfig, TrajectoryResult, solve_batch

CHUNK_ELEMENTS = 1_000_000


@dataclass
class EnsembleResult:
    grid: TimeGrid
    mean_abs_psi0: np.ndarray
    stderr_abs: np.ndarray
    mean_pop0: np.ndarray
    stderr_pop: np.ndarray
    mean_psi0: np.ndarray            # complex ensemble mean E[psi0]
    rho: np.ndarray | None           # (N+1, n, n), instantaneous eigenbasis
    purity: np.ndarray | None
    n_traj: int
    base_seed: int
    mean_residual_abs: np.ndarray | None = None
    mean_residual: np.ndarray | None = None   # complex E[residual]

    @property
    def t(self) -> np.ndarray:
        return self.grid.t


def _chunk_size(steps: int, batch_hint: int | None = None) -> int:
    size = max(1, CHUNK_ELEMENTS // (steps + 1))
    return min(size, batch_hint) if batch_hint else size


def frame_path_for(model, cfg: SolverConfig) -> FramePath:
    return build_frame_path(model, cfg.grid)


def run_ensemble(model, noise: NoiseSpec, cfg: SolverConfig, n_traj: int,
                 base_seed: int = 0, path: FramePath | None = None,
                 chunk: int | None = None) -> EnsembleResult:
    """Average ``n_traj`` independent trajectories.

    ``rho`` is built from the normalized eigenbasis coefficients
    ``psi_m e^{i theta_m}`` of each realization when the method provides all
    components.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    path = path or frame_path_for(model, cfg)
    grid = path.grid
    deterministic = not noise.is_stochastic

    s1 = s2 = p1 = p2 = r1 = m1 = mr = rho_sum = None
    done = 0
    size = _chunk_size(grid.steps, chunk)
    runs = 1 if deterministic else n_traj
    while done < runs:
        idx = range(done, min(runs, done + size))
        if deterministic:
            inc = sample_increments(noise, grid, None)[None]
        else:
            inc = ensemble_increments(noise, grid, base_seed, idx)
        ctx = build_context(path, inc, seeds=tuple(idx))
        res = solve_batch(ctx, cfg)
        a = np.abs(res.psi0)
        coef = None
        if res.components is not None:
            coef = res.components * np.exp(-1j * ctx.int_E)
            # the RK4 route drifts the norm at the 1e-8 level; rho is built from unit states
            coef = coef / np.linalg.norm(coef, axis=-1, keepdims=True)
        if s1 is None:
            shape = grid.t.shape
            s1, s2, p1, p2, r1 = (np.zeros(shape) for _ in range(5))
            m1 = np.zeros(shape, dtype=complex)
            mr = np.zeros(shape, dtype=complex)
            if coef is not None:
                rho_sum = np.zeros(shape + (coef.shape[-1],) * 2, dtype=complex)
        # one trajectory at a time, in index order
        for b in range(len(a)):
            ab = a[b]
            pop = ab * ab
            s1 += ab
            s2 += pop
            p1 += pop
            p2 += pop * pop
            r1 += np.abs(res.residual[b])
            m1 += res.psi0[b]
            mr += res.residual[b]
            if coef is not None:
                rho_sum += coef[b][:, :, None] * coef[b][:, None, :].conj()
        done = idx.stop

    weight = n_traj if deterministic else runs
    scale = n_traj / runs
    s1, s2, p1, p2, r1, m1, mr = (x * scale for x in (s1, s2, p1, p2, r1, m1, mr))
    if rho_sum is not None:
        rho_sum = rho_sum * scale

    def stats(x1, x2):
        mean = x1 / weight
        if weight < 2 or deterministic:
            return mean, np.zeros_like(mean)
        var = np.maximum(x2 - weight * mean ** 2, 0.0) / (weight - 1)
        return mean, np.sqrt(var / weight)

    mean_abs, se_abs = stats(s1, s2)
    mean_pop, se_pop = stats(p1, p2)
    rho = purity = None
    if rho_sum is not None:
        rho = rho_sum / weight
        rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
        purity = np.einsum("nij,nji->n", rho, rho).real
    return EnsembleResult(grid, mean_abs, se_abs, mean_pop, se_pop, m1 / weight, rho, purity,
                          n_traj, base_seed, r1 / weight, mr / weight)


def averaged_kernel_run(model, noise: NoiseSpec, cfg: SolverConfig,
                        path: FramePath | None = None) -> TrajectoryResult:
    """One deterministic solve with the noise-averaged kernel.

    For white noise the increments after ``s`` are independent of ``psi0(s)``,
    so the result is the ensemble mean ``E[psi0(t)]``.
    """
    if noise.kind not in (NoiseKind.GAUSSIAN, NoiseKind.NONE):
        raise UnsupportedNoiseError(f"averaged kernel needs Gaussian white noise, got {noise.kind.value}")
    if cfg.method is Method.ORACLE:
        raise KernelError("the averaged kernel has no component-oracle form")
    path = path or frame_path_for(model, cfg)
    ctx = build_context(path, averaged=noise)
    return solve_batch(ctx, cfg).member(0)


def metrics(result) -> dict:
    """Scalar summary of a trajectory or ensemble."""
    if isinstance(result, EnsembleResult):
        a = result.mean_abs_psi0
        fid = result.mean_pop0[-1]
    else:
        a = np.abs(result.psi0)
        fid = a[-1] ** 2
    i = int(np.argmin(a))
    return {
        "min_abs_psi0": float(a[i]),
        "final_abs_psi0": float(a[-1]),
        "final_fidelity": float(fid),
        "time_of_min": float(result.grid.t[i]),
    }
