"""Seeded realizations of the multiplicative dephasing noise.

The noise ``c(t)`` enters the Hamiltonian as ``J0 -> J0 + c(t)`` and, because
it does not move the eigenvectors, reaches the dynamics only through the
integrated phase ``Phi(t) = int_0^t c(s) ds``.  Paths therefore store ``Phi``
on the solver grid.

Calibration: white noise has ``<c(t) c(t')> = Gamma delta(t - t')`` with
``Gamma = J^2 / J0``.  The biased Poissonian shot noise uses exponential
amplitudes with mean ``a0 = J / sqrt(2 W J0)`` and subtracts its mean drift,
so its intensity ``2 W a0^2`` equals ``Gamma`` and it tends to the Gaussian
case as ``W -> infinity``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .grid import TimeGrid


class NoiseKind(str, Enum):
    NONE = "none"
    SHOT = "shot"
    GAUSSIAN = "gaussian"
    DETERMINISTIC = "deterministic"


class UnsupportedNoiseError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model.

    ``J`` is the strength (energy), ``W`` the shot rate, ``A`` and ``nu`` the
    amplitude and angular frequency of the deterministic control modulation
    ``c(t) = A sin(nu t)``.
    """

    kind: NoiseKind = NoiseKind.NONE
    J: float = 0.0
    W: float = 1.0
    A: float = 0.0
    nu: float = 1.0
    seed: int = 0
    j0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.J < 0:
            raise ValueError(f"noise strength J must be >= 0, got {self.J}")
        if self.kind is NoiseKind.SHOT and not self.W > 0:
            raise ValueError(f"shot rate W must be > 0, got {self.W}")
        if self.kind is NoiseKind.DETERMINISTIC and not self.nu > 0:
            raise ValueError(f"modulation frequency nu must be > 0, got {self.nu}")

    @classmethod
    def gaussian(cls, gamma: float, seed: int = 0, j0: float = 1.0) -> "NoiseSpec":
        """Gaussian white noise of intensity ``gamma`` (``J = sqrt(gamma J0)``)."""
        return cls(NoiseKind.GAUSSIAN, J=float(np.sqrt(gamma * j0)), seed=seed, j0=j0)

    @classmethod
    def shot(cls, gamma: float, W: float, seed: int = 0, j0: float = 1.0) -> "NoiseSpec":
        return cls(NoiseKind.SHOT, J=float(np.sqrt(gamma * j0)), W=W, seed=seed, j0=j0)

    @property
    def gamma(self) -> float:
        if self.kind in (NoiseKind.NONE, NoiseKind.DETERMINISTIC):
            return 0.0
        return self.J ** 2 / self.j0

    @property
    def shot_amplitude(self) -> float:
        return self.J / np.sqrt(2.0 * self.W * self.j0)

    @property
    def is_stochastic(self) -> bool:
        return self.kind in (NoiseKind.SHOT, NoiseKind.GAUSSIAN) and self.J > 0


@dataclass(frozen=True)
class NoisePath:
    grid: TimeGrid
    phi: np.ndarray
    seed: int | None

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.phi)


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index``, keyed only by ``(base_seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(base_seed) & (2 ** 64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_increments(spec: NoiseSpec, grid: TimeGrid, rng: np.random.Generator | None) -> np.ndarray:
    """Per-step increments of ``Phi`` on ``grid``."""
    h, n = grid.h, grid.steps
    if spec.kind is NoiseKind.NONE or (spec.is_stochastic is False
                                       and spec.kind is not NoiseKind.DETERMINISTIC):
        return np.zeros(n)
    if spec.kind is NoiseKind.DETERMINISTIC:
        return np.diff(spec.A / spec.nu * (1.0 - np.cos(spec.nu * grid.t)))
    if spec.kind is NoiseKind.GAUSSIAN:
        return rng.normal(0.0, np.sqrt(spec.gamma * h), size=n)
    a0 = spec.shot_amplitude
    counts = rng.poisson(spec.W * h, size=n)
    jumps = rng.gamma(np.maximum(counts, 1), a0) * (counts > 0)
    return jumps - spec.W * a0 * h


def sample_path(spec: NoiseSpec, grid: TimeGrid, seed: int | None = None) -> NoisePath:
    """One realization of ``Phi``; a pure function of ``(spec, grid, seed)``.

    ``seed`` defaults to ``spec.seed``.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid.from_times(grid)
    seed = spec.seed if seed is None else seed
    rng = np.random.Generator(np.random.PCG64(seed))
    dphi = sample_increments(spec, grid, rng)
    return NoisePath(grid, np.concatenate([[0.0], np.cumsum(dphi)]), seed)


def ensemble_increments(spec: NoiseSpec, grid: TimeGrid, base_seed: int,
                        indices) -> np.ndarray:
    """Stacked increments for trajectories ``indices``, shape ``(len(indices), steps)``."""
    return np.stack([sample_increments(spec, grid, trajectory_rng(base_seed, i))
                     for i in indices])


def noise_phase(path: NoisePath, s: float, t: float,
                k: float | Callable[[np.ndarray], np.ndarray] = 1.0) -> float:
    """Accumulated phase ``int_s^t c(s') k(s') ds'`` on grid points ``s <= t``.

    Constant ``k`` gives ``k (Phi(t) - Phi(s))``; a callable ``k`` is sampled
    at step midpoints, ``sum_i k(t_{i+1/2}) dPhi_i``.
    """
    i, j = path.grid.index(s), path.grid.index(t)
    if i > j:
        raise ValueError("noise_phase requires s <= t")
    if not callable(k):
        return float(k * (path.phi[j] - path.phi[i]))
    mid = path.grid.t[i:j] + 0.5 * path.grid.h
    return float(np.sum(k(mid) * path.increments[i:j]))


def analytic_dephasing(spec: NoiseSpec, s: float, t: float,
                       k: float | Callable[[float], float] = 1.0) -> float:
    """Ensemble mean of ``exp(i int_s^t c k)``: ``exp(-(Gamma/2) int_s^t k^2)``.

    Exact for Gaussian white noise; for shot noise it is the white-noise-limit
    approximation.
    """
    if spec.kind is NoiseKind.DETERMINISTIC:
        raise UnsupportedNoiseError("analytic dephasing undefined for deterministic modulation")
    if t < s:
        raise ValueError("analytic_dephasing requires s <= t")
    if spec.gamma == 0.0 or t == s:
        return 1.0
    if callable(k):
        k2 = quad(lambda x: k(x) ** 2, s, t, limit=200)[0]
    else:
        k2 = k * k * (t - s)
    return float(np.exp(-0.5 * spec.gamma * k2))
