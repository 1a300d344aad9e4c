"""Time evolution of the target-eigenstate amplitude.

Three routes, all on the same piecewise-constant noise representation:

* ``solve_volterra``: the one-component memory equation
  ``d psi0/dt = -c00 psi0 - int_0^t g(t, s) psi0(s) ds`` by product
  integration whose weights integrate the kernel's fast phase exactly;
* ``solve_auxiliary``: the same equation reduced to two coupled ODEs through
  the separable two-level kernel, integrated with classical RK4;
* ``solve_components``: the full multi-component system in the instantaneous
  eigenbasis with a fourth-order Magnus integrator (the oracle).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import TimeGrid
from .kernel import (KernelContext, KernelError, expm_antihermitian,
                     magnus_generator, phase_weights)

MAX_PHASE_STEP = 0.1
MIN_STEPS = 10


class Method(str, Enum):
    VOLTERRA = "VolterraQuadrature"
    AUXILIARY = "AuxiliaryODE"
    ORACLE = "ComponentOracle"


class ResolutionError(ValueError):
    """Grid too coarse for the fastest phase; carries a suggested step count."""

    def __init__(self, message, suggested_steps: int):
        super().__init__(message)
        self.suggested_steps = suggested_steps


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    steps: int
    method: Method = Method.VOLTERRA
    include_geometric_term: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if int(self.steps) != self.steps or self.steps < MIN_STEPS:
            raise ValueError(f"steps must be an integer >= {MIN_STEPS}, got {self.steps}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_end, int(self.steps))


@dataclass
class TrajectoryResult:
    """One trajectory on ``grid``.

    ``psi0`` is the target amplitude (the rotating-frame amplitude when the
    geometric term is switched off), ``residual`` the memory integral
    ``int_0^t g(t, s) psi0(s) ds``, ``full_components`` all amplitudes
    ``psi_m`` when available.
    """

    grid: TimeGrid
    psi0: np.ndarray
    residual: np.ndarray
    full_components: np.ndarray | None = None
    seed: int | None = None
    method: Method = Method.VOLTERRA

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def abs_psi0(self) -> np.ndarray:
        return np.abs(self.psi0)


@dataclass
class BatchResult:
    """Trajectories sharing one frame path; arrays carry a leading batch axis."""

    grid: TimeGrid
    psi0: np.ndarray                 # (B, N+1)
    residual: np.ndarray             # (B, N+1)
    components: np.ndarray | None    # (B, N+1, n)
    seeds: tuple | None
    method: Method

    def __len__(self):
        return self.psi0.shape[0]

    def member(self, i: int = 0) -> TrajectoryResult:
        comps = None if self.components is None else self.components[i]
        seed = None if self.seeds is None else self.seeds[i]
        return TrajectoryResult(self.grid, self.psi0[i], self.residual[i], comps, seed, self.method)


# ------------------------------------------------------------ guards

def max_level_energy(ctx: KernelContext) -> float:
    return float(ctx.path.j0 * np.abs(ctx.path.e).max())


def suggest_steps(t_end: float, e_max: float, shot_rate: float | None = None) -> int:
    """Smallest step count with ``h <= min(0.01, 0.1/E_max, 0.2/W)`` (units of 1/J0)."""
    h = min(0.01, MAX_PHASE_STEP / max(e_max, 1e-300))
    if shot_rate:
        h = min(h, 0.2 / shot_rate)
    return max(MIN_STEPS, int(np.ceil(t_end / h)))


def check_resolution(ctx: KernelContext, cfg: SolverConfig):
    if abs(ctx.grid.t_end - cfg.t_end) > 1e-12 * cfg.t_end or ctx.grid.steps != cfg.steps:
        raise KernelError("context grid does not match the solver config")
    e_max = max_level_energy(ctx)
    if cfg.grid.h * e_max >= MAX_PHASE_STEP:
        need = int(np.ceil(cfg.t_end * e_max / MAX_PHASE_STEP)) + 1
        raise ResolutionError(
            f"h*max|E| = {cfg.grid.h * e_max:.3g} >= {MAX_PHASE_STEP}; use steps >= {need}", need)


# ------------------------------------------------------------ one-component routes

def _finish(ctx, chi, resid_rot, cfg, method, components=None):
    """Map rotating-frame amplitudes back to ``psi0``."""
    back = np.exp(-ctx.B)[None]
    psi0 = chi if not cfg.include_geometric_term else chi * back
    residual = -resid_rot * back
    return BatchResult(ctx.grid, psi0, residual, components, ctx.seeds, method)


def solve_volterra_batch(ctx: KernelContext, cfg: SolverConfig, history: str = "recursive") -> BatchResult:
    """Product-integration solve of the memory equation for every batch member.

    The history sum ``M_n = sum_j K(t_n, s_j)`` weights is kept as the
    recurrence ``H_{n+1} = exp(i delta_n) H_n + rho_n`` which is algebraically
    the full-history sum for the separable kernel; ``history="direct"``
    re-sums the whole row at every step instead (O(N^2), for checking).
    """
    check_resolution(ctx, cfg)
    N, h = ctx.grid.steps, ctx.grid.h
    left, right, Psi = ctx.separable
    delta = np.diff(Psi, axis=1)
    w = phase_weights(delta)                              # per interval, (B, N)
    A0, A1, A2 = w.m1, w.m0 - w.m1, w.a2
    W0, W1, W2 = w.m0 - w.m1, w.m1, w.b2

    nb = ctx.batch
    chi = np.zeros((nb, N + 1), dtype=complex)
    M = np.zeros((nb, N + 1), dtype=complex)
    chi[:, 0] = 1.0
    rho = np.zeros((nb, N, right.shape[-1]), dtype=complex)
    Hsum = np.zeros((nb, right.shape[-1]), dtype=complex)
    H_all = np.zeros((nb, N + 1, right.shape[-1]), dtype=complex)
    for n in range(N):
        rho[:, n] = h * (chi[:, n, None] * (right[:, n] * A0[:, n, None] + right[:, n + 1] * A1[:, n, None])
                         + h * M[:, n, None] * right[:, n] * A2[:, n, None])
        if history == "direct":
            ph = np.exp(1j * (Psi[:, n, None] - Psi[:, 1:n + 1]))          # (B, n)
            hist = np.einsum("bj,bjq->bq", ph, rho[:, :n])
        else:
            hist = Hsum
        Y = np.einsum("bq,bq->b", left[:, n + 1], hist)
        kap_nn = np.einsum("bq,bq->b", left[:, n], right[:, n])
        chi[:, n + 1] = (chi[:, n] + h * (M[:, n] * W0[:, n] + Y * W1[:, n])
                         + h * h * kap_nn * chi[:, n] * W2[:, n])
        Hsum = np.exp(1j * delta[:, n, None]) * hist + rho[:, n]
        M[:, n + 1] = np.einsum("bq,bq->b", left[:, n + 1], Hsum)
        H_all[:, n + 1] = Hsum
    comps = None if ctx.averaged_gamma else _components_from_history(ctx, chi, H_all)
    return _finish(ctx, chi, M, cfg, Method.VOLTERRA, comps)


def _components_from_history(ctx, chi, H_all):
    """Recover every ``psi_m`` from the accumulated history sums."""
    psi0 = chi * np.exp(-ctx.B)[None]
    if ctx.is_tls:
        z = np.exp(-1j * ctx.Psi) * H_all[..., 0]
        psi1 = -np.exp(-ctx.int_cdiag[None, :, 1]) * z
        return np.stack([psi0, psi1], axis=-1)
    # a_Q(t) = -U_Q(t) int U_Q(s)^-1 c_Q0(s) a_0(s) ds
    aQ = -np.einsum("bnqr,bnr->bnq", ctx.q_propagators, H_all)
    psiQ = aQ * np.exp(1j * ctx.int_E[..., 1:])
    return np.concatenate([psi0[..., None], psiQ], axis=-1)


def solve_auxiliary_batch(ctx: KernelContext, cfg: SolverConfig) -> BatchResult:
    """RK4 on ``(chi, z)``: ``chi' = c01 e^{i Psi} z``, ``z' = c10 e^{-i Psi} chi``."""
    if not ctx.is_tls:
        raise KernelError("auxiliary ODE needs the separable two-level kernel")
    check_resolution(ctx, cfg)
    N, h = ctx.grid.steps, ctx.grid.h
    Psi, Psi_mid = ctx.Psi, ctx.Psi_mid
    if ctx.averaged_gamma:
        Psi_mid = Psi_mid + 0.25j * ctx.averaged_gamma * ctx.path.int_gap2[None]
    p, q = ctx.p, ctx.q
    p_mid, q_mid = ctx.path.C_mid[:, 0, 1], ctx.path.C_mid[:, 1, 0]
    ep, eq = p * np.exp(1j * Psi), q * np.exp(-1j * Psi)
    ep_m, eq_m = p_mid * np.exp(1j * Psi_mid), q_mid * np.exp(-1j * Psi_mid)

    nb = ctx.batch
    chi = np.zeros((nb, N + 1), dtype=complex)
    z = np.zeros((nb, N + 1), dtype=complex)
    chi[:, 0] = 1.0
    x, y = chi[:, 0].copy(), z[:, 0].copy()
    for n in range(N):
        a0, b0, am, bm, a1, b1 = ep[:, n], eq[:, n], ep_m[:, n], eq_m[:, n], ep[:, n + 1], eq[:, n + 1]
        k1x, k1y = a0 * y, b0 * x
        k2x, k2y = am * (y + 0.5 * h * k1y), bm * (x + 0.5 * h * k1x)
        k3x, k3y = am * (y + 0.5 * h * k2y), bm * (x + 0.5 * h * k2x)
        k4x, k4y = a1 * (y + h * k3y), b1 * (x + h * k3x)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        chi[:, n + 1], z[:, n + 1] = x, y
    M = ep * z
    psi1 = -np.exp(-ctx.int_cdiag[None, :, 1]) * z
    comps = None
    if not ctx.averaged_gamma:
        comps = np.stack([chi * np.exp(-ctx.B)[None], psi1], axis=-1)
    return _finish(ctx, chi, M, cfg, Method.AUXILIARY, comps)


# ------------------------------------------------------------ oracle

def solve_components_batch(ctx: KernelContext, cfg: SolverConfig, initial=None) -> BatchResult:
    """Full amplitude system ``da/dt = (-i diag(E) - C) a``, ``psi_m = a_m e^{i int E_m}``."""
    if ctx.averaged_gamma:
        raise KernelError("the component oracle needs explicit noise realizations")
    check_resolution(ctx, cfg)
    N = ctx.grid.steps
    n = ctx.n_levels
    nb = ctx.batch
    a = np.zeros((nb, N + 1, n), dtype=complex)
    if initial is None:
        a[:, 0, 0] = 1.0
    else:
        init = np.asarray(initial, dtype=complex)
        a[:, 0] = init / np.linalg.norm(init)
    scale = ctx.path.j0 + ctx.noise_rate
    for j in range(N):
        U = expm_antihermitian(magnus_generator(ctx.path, j, scale[:, j]))
        a[:, j + 1] = np.einsum("bij,bj->bi", U, a[:, j])
    psi = a * np.exp(1j * ctx.int_E)
    psi0 = psi[..., 0]
    # memory integral from the psi0 row of the full system: e^{i int E0} sum_Q c_0Q a_Q
    resid = np.exp(1j * ctx.int_E[..., 0]) * np.einsum("nq,bnq->bn", ctx.path.C[:, 0, 1:], a[..., 1:])
    if not cfg.include_geometric_term:
        psi0 = psi0 * np.exp(ctx.B)[None]
    return BatchResult(ctx.grid, psi0, resid, psi, ctx.seeds, Method.ORACLE)


_DISPATCH = {
    Method.VOLTERRA: solve_volterra_batch,
    Method.AUXILIARY: solve_auxiliary_batch,
    Method.ORACLE: solve_components_batch,
}


def solve_batch(ctx: KernelContext, cfg: SolverConfig) -> BatchResult:
    return _DISPATCH[cfg.method](ctx, cfg)


def solve_volterra(ctx: KernelContext, cfg: SolverConfig) -> TrajectoryResult:
    return solve_volterra_batch(ctx, cfg).member(0)


def solve_auxiliary(ctx: KernelContext, cfg: SolverConfig) -> TrajectoryResult:
    return solve_auxiliary_batch(ctx, cfg).member(0)


def solve_components(ctx: KernelContext, cfg: SolverConfig, initial=None) -> TrajectoryResult:
    return solve_components_batch(ctx, cfg, initial).member(0)


def solve(ctx: KernelContext, cfg: SolverConfig) -> TrajectoryResult:
    return solve_batch(ctx, cfg).member(0)


def adiabatic_residual(ctx: KernelContext, result: TrajectoryResult, t: float) -> complex:
    """Memory integral ``int_0^t g(t, s) psi0(s) ds`` at grid time ``t``."""
    if result.grid != ctx.grid:
        raise KernelError("result was computed on a different grid")
    return complex(result.residual[ctx.grid.index(t)])
