"""Memory kernel ``g(t, s)`` of the one-component equation.

For a target level 0 and the remaining levels Q, the kernel is

    g(t, s) = -exp(i int_s^t E_0) c_{0Q}(t) U_Q(t, s) c_{Q0}(s)

where ``c_mn = <E_m|dE_n/dt>`` and ``U_Q`` propagates the Q-block amplitudes
under ``-i diag(E_Q) - c_QQ``.  For two levels ``U_Q`` is a scalar and the
kernel reduces to ``-c01(t) c10(s) exp(int_s^t (i E - c11))``.

Solvers work with the rotating-frame amplitude ``chi = exp(B) psi0``,
``B = int c00``, for which the kernel becomes

    K(t, s) = -exp(B(t) - B(s)) g(t, s) = kappa(t, s) exp(i (Psi(t) - Psi(s)))

with a slowly varying ``kappa`` and all fast (and noisy) phase collected in
the scalar ``Psi``.  ``kappa`` is separable: ``kappa(t_n, t_j) = left_n . right_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .eigenframe import FramePath
from .noise import NoiseKind, NoisePath, NoiseSpec, UnsupportedNoiseError


class KernelError(ValueError):
    pass


# ------------------------------------------------------------ quadrature

_SERIES_RADIUS = 0.5
_SERIES_TERMS = 24


def _series(z, coef):
    out = np.zeros_like(z)
    for c in coef[::-1]:
        out = out * z + c
    return out


_FACT = np.cumprod(np.concatenate([[1.0], np.arange(1, _SERIES_TERMS + 4)]))
_M0_COEF = np.array([1.0 / (_FACT[k] * (k + 1)) for k in range(_SERIES_TERMS)])
_M1_COEF = np.array([1.0 / (_FACT[k] * (k + 2)) for k in range(_SERIES_TERMS)])
_A2_COEF = np.array([(m + 1) / _FACT[m + 2] for m in range(_SERIES_TERMS)])
_B2_COEF = np.array([1.0 / _FACT[m + 2] for m in range(_SERIES_TERMS)])


@dataclass(frozen=True)
class PhaseWeights:
    """Exact integrals against a linear phase ``exp(i delta x)`` on ``x in [0, 1]``.

    ``m0 = int e^{i d x}``, ``m1 = int x e^{i d x}``,
    ``a2 = int e^{i d (1-x)} F(x)``, ``b2 = int F(x)`` with ``F(x) = int_0^x e^{i d y}``.
    """

    m0: np.ndarray
    m1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray


def phase_weights(delta) -> PhaseWeights:
    z = 1j * np.asarray(delta, dtype=complex)
    small = np.abs(z) < _SERIES_RADIUS
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    ez = np.exp(zl)
    m0_l = (ez - 1.0) / zl
    m1_l = (ez * (zl - 1.0) + 1.0) / zl ** 2
    a2_l = (ez - m0_l) / zl
    b2_l = (m0_l - 1.0) / zl
    m0 = np.where(small, _series(zs, _M0_COEF), m0_l)
    m1 = np.where(small, _series(zs, _M1_COEF), m1_l)
    a2 = np.where(small, _series(zs, _A2_COEF), a2_l)
    b2 = np.where(small, _series(zs, _B2_COEF), b2_l)
    return PhaseWeights(m0, m1, a2, b2)


# ------------------------------------------------------------ Magnus steps

_GL2_OFFSET = np.sqrt(3.0) / 12.0


def expm_antihermitian(X: np.ndarray) -> np.ndarray:
    """``exp(X)`` for a stack of anti-Hermitian matrices (exactly unitary)."""
    n = X.shape[-1]
    if n == 1:
        return np.exp(X)
    if n == 2:
        # X = -i (a0 I + n . sigma)
        H = 1j * X
        a0 = 0.5 * (H[..., 0, 0] + H[..., 1, 1]).real
        nz = 0.5 * (H[..., 0, 0] - H[..., 1, 1]).real
        nx = H[..., 1, 0].real
        ny = H[..., 1, 0].imag
        r = np.sqrt(nx ** 2 + ny ** 2 + nz ** 2)
        sinc = np.sinc(r / np.pi)  # sin(r)/r
        c = np.cos(r)
        ph = np.exp(-1j * a0)
        out = np.empty(X.shape, dtype=complex)
        out[..., 0, 0] = ph * (c - 1j * sinc * nz)
        out[..., 1, 1] = ph * (c + 1j * sinc * nz)
        out[..., 0, 1] = ph * (-1j * sinc * (nx - 1j * ny))
        out[..., 1, 0] = ph * (-1j * sinc * (nx + 1j * ny))
        return out
    w, v = np.linalg.eigh(1j * X)
    return np.einsum("...ij,...j,...kj->...ik", v, np.exp(-1j * w), v.conj())


def magnus_generator(path: FramePath, step: int, scale, levels=None) -> np.ndarray:
    """Fourth-order Magnus exponent for ``da/dt = (-i diag(E) - C) a`` on one step.

    ``scale`` is ``J0 + c`` for this step (shape ``(B,)``); returns ``(B, n, n)``.
    """
    e = path.e_gl[step]
    C = path.C_gl[step]
    if levels is not None:
        e = e[:, levels]
        C = C[:, levels][:, :, levels]
    h = path.grid.h
    scale = np.asarray(scale, dtype=float)[:, None, None]
    n = e.shape[-1]
    eye = np.eye(n)
    A1 = -1j * scale * (e[0] * eye) - C[0]
    A2 = -1j * scale * (e[1] * eye) - C[1]
    comm = A2 @ A1 - A1 @ A2
    return 0.5 * h * (A1 + A2) + _GL2_OFFSET * h * h * comm


# ------------------------------------------------------------ context

@dataclass
class KernelContext:
    """Kernel data for one frame path and a batch of noise realizations.

    ``dphi`` has shape ``(batch, steps)``.  With ``averaged_gamma`` set the
    context describes the noise-averaged kernel (no realization).
    """

    path: FramePath
    dphi: np.ndarray
    averaged_gamma: float = 0.0
    seeds: tuple | None = None

    def __post_init__(self):
        self.dphi = np.atleast_2d(np.asarray(self.dphi, dtype=float))
        if self.dphi.shape[1] != self.path.steps:
            raise KernelError("noise path and frame path grids differ")

    # -- basic data
    @property
    def grid(self):
        return self.path.grid

    @property
    def batch(self) -> int:
        return self.dphi.shape[0]

    @property
    def n_levels(self) -> int:
        return self.path.n_levels

    @property
    def is_tls(self) -> bool:
        return self.n_levels == 2

    @cached_property
    def noise_rate(self) -> np.ndarray:
        """Piecewise-constant noise value ``c`` on each step, ``(B, N)``."""
        return self.dphi / self.grid.h

    @cached_property
    def step_int_E(self) -> np.ndarray:
        """Per-step ``int E_m`` including noise, ``(B, N, 2 halves, n)``."""
        p = self.path
        det = p.j0 * p.int_e[None]
        noisy = 0.5 * self.dphi[:, :, None, None] * p.e_mid[None, :, None, :]
        return det + noisy

    @cached_property
    def int_E(self) -> np.ndarray:
        """Cumulative ``int_0^t E_m``, ``(B, N+1, n)``."""
        inc = self.step_int_E.sum(axis=2)
        out = np.zeros((self.batch, self.path.steps + 1, self.n_levels))
        out[:, 1:] = np.cumsum(inc, axis=1)
        return out

    @cached_property
    def int_cdiag(self) -> np.ndarray:
        """Cumulative ``int_0^t c_mm``, ``(N+1, n)``."""
        inc = self.path.int_cdiag.sum(axis=1)
        out = np.zeros((self.path.steps + 1, self.n_levels), dtype=complex)
        out[1:] = np.cumsum(inc, axis=0)
        return out

    @property
    def B(self) -> np.ndarray:
        return self.int_cdiag[:, 0]

    @cached_property
    def B_mid(self) -> np.ndarray:
        return self.int_cdiag[:-1, 0] + self.path.int_cdiag[:, 0, 0]

    # -- two-level phase bookkeeping
    def _require_tls(self):
        if not self.is_tls:
            raise KernelError("two-level context required")

    @cached_property
    def delta(self) -> np.ndarray:
        """Per-step increment of ``Psi``, ``(B, N)``; complex when averaged."""
        self._require_tls()
        sE = self.step_int_E.sum(axis=2)
        cd = self.path.int_cdiag.sum(axis=1)
        d = (sE[..., 0] - sE[..., 1]) + (1j * (cd[:, 1] - cd[:, 0])).real[None]
        if self.averaged_gamma:
            d = d + 0.5j * self.averaged_gamma * self.path.int_gap2[None]
        return d

    @cached_property
    def Psi(self) -> np.ndarray:
        out = np.zeros((self.batch, self.path.steps + 1), dtype=self.delta.dtype)
        out[:, 1:] = np.cumsum(self.delta, axis=1)
        return out

    @cached_property
    def Psi_mid(self) -> np.ndarray:
        self._require_tls()
        sE = self.step_int_E[:, :, 0]
        cd = self.path.int_cdiag[:, 0]
        d = (sE[..., 0] - sE[..., 1]) + (1j * (cd[:, 1] - cd[:, 0])).real[None]
        return self.Psi[:, :-1] + d

    @property
    def p(self) -> np.ndarray:
        """``c01`` on the grid."""
        return self.path.C[:, 0, 1]

    @property
    def q(self) -> np.ndarray:
        """``c10`` on the grid."""
        return self.path.C[:, 1, 0]

    # -- separable factors for the rotating-frame kernel
    @cached_property
    def q_propagators(self) -> np.ndarray:
        """Q-block amplitude propagators ``U_Q(t_n, 0)``, ``(B, N+1, nQ, nQ)``."""
        if self.averaged_gamma:
            raise KernelError("generic kernel has no averaged form")
        n = self.n_levels
        Q = list(range(1, n))
        U = np.zeros((self.batch, self.path.steps + 1, n - 1, n - 1), dtype=complex)
        U[:, 0] = np.eye(n - 1)
        scale = self.path.j0 + self.noise_rate
        for j in range(self.path.steps):
            step = expm_antihermitian(magnus_generator(self.path, j, scale[:, j], Q))
            U[:, j + 1] = step @ U[:, j]
        return U

    @cached_property
    def separable(self):
        """``(left, right, Psi)`` with ``kappa(t_n, t_j) = left[:, n] . right[:, j]``."""
        if self.is_tls:
            left = np.broadcast_to(self.p[None, :, None], (self.batch, self.path.steps + 1, 1))
            right = np.broadcast_to(self.q[None, :, None], left.shape)
            return left, right, self.Psi
        U = self.q_propagators
        ph = np.exp(self.B[None] + 1j * self.int_E[..., 0])           # (B, N+1)
        c0Q = self.path.C[:, 0, 1:]                                    # (N+1, nQ)
        cQ0 = self.path.C[:, 1:, 0]
        left = ph[..., None] * np.einsum("nq,bnqr->bnr", c0Q, U)
        right = np.einsum("bnrq,nr->bnq", U.conj(), cQ0) / ph[..., None]
        return left, right, np.zeros((self.batch, self.path.steps + 1))

    def kappa_row(self, n: int) -> np.ndarray:
        """``kappa(t_n, t_j)`` for ``j = 0..n``, shape ``(B, n+1)``."""
        left, right, _ = self.separable
        return np.einsum("bq,bjq->bj", left[:, n], right[:, : n + 1])

    # -- Eq.-level factors u(t) v(s) of g
    @cached_property
    def Lambda(self) -> np.ndarray:
        """``int_0^t (i E - c11)``, ``(B, N+1)``."""
        self._require_tls()
        iE = 1j * (self.int_E[..., 0] - self.int_E[..., 1])
        return iE - self.int_cdiag[None, :, 1]

    @cached_property
    def attenuation_integral(self) -> np.ndarray:
        """``int_0^t (e0 - e1)^2``, ``(N+1,)``."""
        out = np.zeros(self.path.steps + 1)
        out[1:] = np.cumsum(self.path.int_gap2)
        return out

    @cached_property
    def u(self) -> np.ndarray:
        return -self.p[None] * np.exp(self.Lambda)

    @cached_property
    def v(self) -> np.ndarray:
        return self.q[None] * np.exp(-self.Lambda)


def build_context(path: FramePath, noise: NoisePath | np.ndarray | None = None,
                  averaged: NoiseSpec | None = None, seeds=None) -> KernelContext:
    """Assemble a :class:`KernelContext`.

    ``noise`` is a single :class:`NoisePath` or an array of increments of
    shape ``(batch, steps)``.  ``averaged`` builds the noise-averaged kernel
    for a Gaussian white-noise spec instead.
    """
    gamma = 0.0
    if averaged is not None:
        if averaged.kind not in (NoiseKind.GAUSSIAN, NoiseKind.NONE):
            raise UnsupportedNoiseError(f"averaged kernel needs Gaussian white noise, got {averaged.kind.value}")
        gamma = averaged.gamma
        if noise is not None:
            raise KernelError("averaged context takes no noise realization")
    if noise is None:
        dphi = np.zeros((1, path.steps))
    elif isinstance(noise, NoisePath):
        if noise.grid != path.grid:
            raise KernelError("noise path and frame path grids differ")
        dphi = noise.increments[None]
        seeds = (noise.seed,) if seeds is None else seeds
    else:
        dphi = np.asarray(noise, dtype=float)
    return KernelContext(path, dphi, gamma, None if seeds is None else tuple(seeds))


def _indices(ctx: KernelContext, t, s):
    n, j = ctx.grid.index(t), ctx.grid.index(s)
    if j > n:
        raise KernelError("kernel requires s <= t")
    return n, j


def kernel_tls(ctx: KernelContext, t: float, s: float, member: int = 0) -> complex:
    """Two-level kernel ``-c01(t) c10(s) exp(int_s^t (i E - c11))`` with noisy ``E``."""
    n, j = _indices(ctx, t, s)
    g = -ctx.p[n] * ctx.q[j] * np.exp(ctx.Lambda[member, n] - ctx.Lambda[member, j])
    if ctx.averaged_gamma:
        att = ctx.attenuation_integral
        g *= np.exp(-0.5 * ctx.averaged_gamma * (att[n] - att[j]))
    return complex(g)


def kernel_generic(ctx: KernelContext, t: float, s: float, member: int = 0) -> complex:
    """``R(t) G(t, s) W(s)`` for any number of levels, via the Q-block propagators."""
    n, j = _indices(ctx, t, s)
    U = ctx.q_propagators[member]
    G = U[n] @ U[j].conj().T
    c0Q = ctx.path.C[n, 0, 1:]
    cQ0 = ctx.path.C[j, 1:, 0]
    ph = np.exp(1j * (ctx.int_E[member, n, 0] - ctx.int_E[member, j, 0]))
    return complex(-ph * (c0Q @ G @ cQ0))


def kernel_averaged(ctx: KernelContext, t: float, s: float) -> complex:
    """Noise-averaged two-level kernel; ``ctx`` must come from ``build_context(averaged=...)``."""
    if ctx.dphi.any():
        raise KernelError("averaged kernel needs a noise-free context")
    return kernel_tls(ctx, t, s)
