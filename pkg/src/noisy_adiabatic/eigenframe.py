"""Instantaneous eigenbasis, non-adiabatic couplings and accumulated phases.

Two routes are provided: closed forms for the two-level catalog (mixing angle
``alpha``, azimuth ``beta``, gap parameter ``k``) and a numerical
diagonalization route that works for any Hermitian matrix and serves as the
oracle for the closed forms.

Conventions: eigenvectors are ordered with the *target* state first.  For the
two-level catalog the target is the upper state ``|E0>`` unless the model asks
for the ``E1`` branch.  ``couplings[m, n] = <E_m | d/dt E_n>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import TimeGrid
from .models import (Branch, FieldSample, ModelSpec, eval_fields, field_matrix,
                     field_rates)

GAP_TOL = 1e-9
FD_STEP = 1e-6

# Gauss-Legendre nodes on [0, 1]
_GL2 = np.array([0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6])
_GL3_X = np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10])
_GL3_W = np.array([5.0, 8.0, 5.0]) / 18.0


class GapClosureError(ArithmeticError):
    """Two instantaneous eigenvalues (nearly) coincide."""


@dataclass(frozen=True)
class EigenFrame:
    """Eigen-decomposition of H at one instant.

    ``energies`` and the columns of ``vectors`` are ordered target first.
    ``couplings`` is ``None`` when no time derivative was supplied.  The
    two-level angle parametrization (``k``, ``alpha``, ``beta``) is filled in
    for 2x2 problems; ``scale`` is the factor ``J0 + noise_value`` multiplying
    the dimensionless field matrix.
    """

    t: float
    energies: np.ndarray
    vectors: np.ndarray
    couplings: np.ndarray | None = None
    k: float | None = None
    alpha: float | None = None
    beta: float | None = None
    scale: float = 1.0

    @property
    def E0(self) -> float:
        return float(self.energies[0])

    @property
    def E1(self) -> float:
        return float(self.energies[1])

    @property
    def coupling01(self) -> complex:
        return complex(self.couplings[0, 1])

    @property
    def coupling00(self) -> complex:
        return complex(self.couplings[0, 0])

    @property
    def coupling11(self) -> complex:
        return complex(self.couplings[1, 1])


@dataclass(frozen=True)
class PhaseRecord:
    """Dynamical phases ``theta_n = -int E_n`` and geometric phase ``beta0 = i int <E0|dE0>``."""

    t: np.ndarray
    theta0: np.ndarray
    theta1: np.ndarray
    beta0: np.ndarray


# ---------------------------------------------------------------- two-level

def tls_angles(a, b, omega):
    """Return ``(k, alpha, beta)`` for the field ``a sx + b sy + (omega/2) sz``."""
    a, b, omega = (np.asarray(x, dtype=float) for x in (a, b, omega))
    rho = np.hypot(a, b)
    k = np.sqrt(omega ** 2 + 4 * rho ** 2)
    alpha = 0.5 * np.arctan2(2 * rho, omega)
    beta = np.arctan2(b, a)
    return k, alpha, beta


def tls_vectors(alpha, beta, branch=Branch.E0) -> np.ndarray:
    """Column eigenvectors ``[target, other]`` in the angle gauge.

    ``|E0> = e^{-i beta} cos(alpha)|u> + sin(alpha)|d>`` and
    ``|E1> = -e^{-i beta} sin(alpha)|u> + cos(alpha)|d>``.
    Works elementwise; output shape ``alpha.shape + (2, 2)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    ph = np.exp(-1j * np.asarray(beta, dtype=float))
    c, s = np.cos(alpha), np.sin(alpha)
    e0 = np.stack([ph * c, s + 0j], axis=-1)
    e1 = np.stack([-ph * s, c + 0j], axis=-1)
    cols = (e0, e1) if Branch(branch) is Branch.E0 else (e1, e0)
    return np.stack(cols, axis=-1)


def _offdiag_couplings(vectors, energies, dH):
    """``<m|dH|n> / (E_n - E_m)`` for ``m != n``; diagonal left at zero."""
    num = np.einsum("...im,...ij,...jn->...mn", vectors.conj(), dH, vectors)
    gap = energies[..., None, :] - energies[..., :, None]
    n = energies.shape[-1]
    off = ~np.eye(n, dtype=bool)
    if np.any(np.abs(gap[..., off]) < GAP_TOL):
        raise GapClosureError("instantaneous gap below tolerance")
    out = np.zeros_like(num)
    out[..., off] = num[..., off] / gap[..., off]
    return out


def frame_analytic(fields: FieldSample, j0: float = 1.0, noise_value: float = 0.0,
                   branch=Branch.E0, rates: FieldSample | None = None) -> EigenFrame:
    """Closed-form eigenframe of ``(J0 + noise) (a sx + b sy + omega/2 sz)``.

    ``k`` is always the positive root; ``E0 - E1 = (J0 + noise) k``.  The
    couplings are filled in only when the field ``rates`` are given.
    """
    k, alpha, beta = (float(x) for x in tls_angles(fields.a, fields.b, fields.omega))
    if k < GAP_TOL:
        raise GapClosureError("degenerate field: k = 0")
    scale = j0 + noise_value
    vectors = tls_vectors(alpha, beta, branch)
    sign = 1.0 if Branch(branch) is Branch.E0 else -1.0
    energies = scale * np.array([sign * k / 2, -sign * k / 2])
    couplings = None
    if rates is not None:
        couplings = _tls_couplings(fields, rates, vectors, branch)
    return EigenFrame(float(fields.t), energies, vectors, couplings, k, alpha, beta, scale)


def _tls_couplings(fields, rates, vectors, branch):
    a, b, w = (np.asarray(x, dtype=float) for x in (fields.a, fields.b, fields.omega))
    da, db, dw = (np.asarray(x, dtype=float) for x in (rates.a, rates.b, rates.omega))
    k, _, _ = tls_angles(a, b, w)
    if np.any(k < GAP_TOL):
        raise GapClosureError("degenerate field: k = 0")
    sign = 1.0 if Branch(branch) is Branch.E0 else -1.0
    e = np.stack([sign * k / 2, -sign * k / 2], axis=-1)
    dh = field_matrix(FieldSample(da, db, dw))
    C = _offdiag_couplings(vectors, e, dh)
    # diagonal in the angle gauge: <E_m|dE_m> = -i beta_dot |<u|E_m>|^2
    rho2 = a ** 2 + b ** 2
    safe = rho2 > 1e-300
    beta_dot = np.where(safe, (a * db - b * da) / np.where(safe, rho2, 1.0), 0.0)
    up2 = np.abs(vectors[..., 0, :]) ** 2
    idx = np.arange(2)
    C[..., idx, idx] = -1j * beta_dot[..., None] * up2
    return C


# ---------------------------------------------------------------- numeric

def _fix_gauge(vectors, reference=None):
    """Make a chosen component of each column real and positive.

    ``reference`` gives the component index per column; by default the
    largest-magnitude component is used.
    """
    if reference is None:
        reference = np.argmax(np.abs(vectors), axis=-2)
    reference = np.asarray(reference)
    comp = np.take_along_axis(vectors, reference[..., None, :], axis=-2)
    phase = np.exp(-1j * np.angle(comp))
    return vectors * phase


def _sorted_eigh(H, target=0):
    w, v = np.linalg.eigh(H)
    w, v = w[..., ::-1], v[..., ::-1]
    n = w.shape[-1]
    order = [target] + [i for i in range(n) if i != target]
    return w[..., order], v[..., :, order]


def frame_numeric(H, previous: EigenFrame | None = None, gap_tol: float = GAP_TOL,
                  t: float = 0.0, target: int = 0, scale: float = 1.0) -> EigenFrame:
    """Diagonalize a Hermitian matrix; the generic oracle for the closed forms.

    Eigenvalues are sorted in descending order and the ``target`` one is put
    first.  Each eigenvector's largest component is made real positive; when
    ``previous`` is given the phase is instead chosen so the overlap with the
    previous eigenvector is real positive.  For 2x2 input the angle triple is
    recovered with ``k = (E0 - E1) / scale``.
    """
    H = np.asarray(H, dtype=complex)
    if np.abs(H - H.conj().T).max() > 1e-10 * max(1.0, np.abs(H).max()):
        raise ValueError("matrix is not Hermitian")
    w, v = _sorted_eigh(H, target)
    if np.min(np.abs(np.diff(np.sort(w)))) < gap_tol:
        raise GapClosureError("instantaneous gap below tolerance")
    v = _fix_gauge(v)
    if previous is not None:
        ov = np.einsum("im,im->m", previous.vectors.conj(), v)
        v = v * np.exp(-1j * np.angle(ov))
    k = alpha = beta = None
    if H.shape == (2, 2):
        upper = v[:, 0] if w[0] > w[1] else v[:, 1]
        k = float(abs(w[0] - w[1]) / scale)
        alpha = float(np.arctan2(abs(upper[1]), abs(upper[0])))
        beta = float(np.angle(upper[1]) - np.angle(upper[0]))
        beta = float(np.angle(np.exp(1j * beta)))
    return EigenFrame(t, w, v, None, k, alpha, beta, scale)


def coupling(m: int, n: int, frame: EigenFrame, dH=None, frame_dt: tuple | None = None,
             dt: float = FD_STEP) -> complex:
    """Non-adiabatic coupling ``<E_m | d/dt E_n>``.

    With ``frame_dt = (frame(t - dt), frame(t + dt))``, in a gauge continuous
    with ``frame``, the central difference of ``|E_n>`` is projected on
    ``<E_m|``.  Otherwise ``m != n`` uses the gap formula with ``dH`` and
    ``m == n`` falls back on the frame's stored couplings.
    """
    if m != n and frame_dt is None:
        if dH is None:
            raise ValueError("off-diagonal coupling needs dH")
        gap = frame.energies[n] - frame.energies[m]
        if abs(gap) < GAP_TOL:
            raise GapClosureError("instantaneous gap below tolerance")
        vm, vn = frame.vectors[:, m], frame.vectors[:, n]
        return complex(vm.conj() @ np.asarray(dH) @ vn / gap)
    if frame_dt is None:
        if frame.couplings is None:
            raise ValueError("diagonal coupling needs neighbouring frames")
        return complex(frame.couplings[m, m])
    before, after = frame_dt
    dv = (after.vectors[:, n] - before.vectors[:, n]) / (2 * dt)
    return complex(frame.vectors[:, m].conj() @ dv)


def accumulate_phases(frames: Sequence[EigenFrame], grid: TimeGrid,
                      noise_phi: np.ndarray | None = None) -> PhaseRecord:
    """Cumulative trapezoidal ``theta_n`` and ``beta0`` along a frame path.

    ``noise_phi`` is the integrated noise on the same grid; it shifts the
    energies through the dimensionless level values ``E_n / scale``.
    """
    if len(frames) != grid.steps + 1:
        raise ValueError("one frame per grid point required")
    E = np.array([f.energies[:2] for f in frames], dtype=float)
    c00 = np.array([f.couplings[0, 0] if f.couplings is not None else 0.0
                    for f in frames], dtype=complex)
    theta = -cumulative_trapezoid(E, grid.t, axis=0, initial=0.0)
    if noise_phi is not None:
        e = E / np.array([f.scale for f in frames])[:, None]
        e_mid = 0.5 * (e[1:] + e[:-1])
        dphi = np.diff(noise_phi)
        theta[1:] -= np.cumsum(e_mid * dphi[:, None], axis=0)
    beta0 = np.real(1j * cumulative_trapezoid(c00, grid.t, initial=0.0))
    return PhaseRecord(grid.t, theta[:, 0], theta[:, 1], beta0)


def tls_frame_path(model: ModelSpec, grid: TimeGrid) -> list[EigenFrame]:
    """Per-grid-point analytic frames (noise free) for a catalog model."""
    frames = []
    for t in grid.t:
        frames.append(frame_analytic(eval_fields(model, t), model.j0, 0.0,
                                     model.initial_branch, field_rates(model, t)))
    return frames


# ---------------------------------------------------------------- N-level

@dataclass
class MatrixModel:
    """A generic Hermitian ``H(t)`` handled by numerical diagonalization.

    ``hamiltonian(t)`` returns the noise-free matrix; dephasing noise rescales
    it as ``(1 + c/J0) H(t)``.  ``target`` indexes the eigenvalues sorted in
    descending order.  If ``dhamiltonian`` is omitted a central difference
    with step ``fd_step`` is used.  ``gauge_components`` pins, per level, the
    component made real positive; by default the largest one at ``t_ref``.
    """

    hamiltonian: Callable[[float], np.ndarray]
    j0: float = 1.0
    target: int = 0
    dhamiltonian: Callable[[float], np.ndarray] | None = None
    fd_step: float = FD_STEP
    t_ref: float = 0.0
    gauge_components: tuple | None = None
    _reference: np.ndarray | None = field(default=None, repr=False)

    def _H(self, times):
        return np.array([self.hamiltonian(float(t)) for t in np.ravel(times)],
                        dtype=complex).reshape(np.shape(times) + self.shape)

    @property
    def shape(self):
        n = np.asarray(self.hamiltonian(self.t_ref)).shape[0]
        return (n, n)

    def reference(self):
        """Gauge-reference component per level, fixed once at ``t_ref``."""
        if self._reference is None and self.gauge_components is not None:
            self._reference = np.asarray(self.gauge_components, dtype=int)
        if self._reference is None:
            _, v = _sorted_eigh(self._H(np.array([self.t_ref]))[0], self.target)
            self._reference = np.argmax(np.abs(v), axis=0)
        return self._reference

    def eigen(self, times):
        """Energies and smoothly gauged eigenvectors at ``times``."""
        w, v = _sorted_eigh(self._H(times), self.target)
        gaps = np.abs(w[..., :, None] - w[..., None, :])
        n = w.shape[-1]
        if n > 1 and np.any(gaps[..., ~np.eye(n, dtype=bool)] < GAP_TOL * self.j0):
            raise GapClosureError("instantaneous gap below tolerance")
        return w, _fix_gauge(v, np.broadcast_to(self.reference(), w.shape))


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class Spectrum:
    """Noise-free dimensionless level values ``e_m = E_m / J0`` and couplings."""

    e: np.ndarray          # (..., n)
    C: np.ndarray          # (..., n, n)
    k: np.ndarray | None = None


@dataclass(frozen=True)
class GaugeTwist:
    """Time-dependent re-gauging ``|E_m> -> exp(i gamma_m(t)) |E_m>``.

    ``gamma(t)`` and ``dgamma(t)`` return arrays of shape ``t.shape + (n,)``.
    """

    gamma: Callable[[np.ndarray], np.ndarray]
    dgamma: Callable[[np.ndarray], np.ndarray]

    def apply(self, spec: Spectrum, times) -> Spectrum:
        g = self.gamma(times)
        dg = self.dgamma(times)
        ph = np.exp(1j * (g[..., None, :] - g[..., :, None]))
        C = spec.C * ph
        idx = np.arange(C.shape[-1])
        C[..., idx, idx] += 1j * dg
        return Spectrum(spec.e, C, spec.k)


def spectrum(system, times, gauge: GaugeTwist | None = None) -> Spectrum:
    """Evaluate level values and couplings of ``system`` at an array of times."""
    times = np.asarray(times, dtype=float)
    if isinstance(system, ModelSpec):
        f = eval_fields(system, times)
        r = field_rates(system, times)
        k, alpha, beta = tls_angles(f.a, f.b, f.omega)
        if np.any(k < GAP_TOL):
            raise GapClosureError("degenerate field: k = 0")
        V = tls_vectors(alpha, beta, system.initial_branch)
        C = _tls_couplings(f, r, V, system.initial_branch)
        sign = 1.0 if system.initial_branch is Branch.E0 else -1.0
        e = np.stack([sign * k / 2, -sign * k / 2], axis=-1)
        out = Spectrum(e, C, k)
    elif isinstance(system, MatrixModel):
        w, v = system.eigen(times)
        if system.dhamiltonian is not None:
            dH = np.array([system.dhamiltonian(float(t)) for t in times.ravel()],
                          dtype=complex).reshape(times.shape + system.shape)
        else:
            d = system.fd_step
            dH = (system._H(times + d) - system._H(times - d)) / (2 * d)
        C = _offdiag_couplings(v, w, dH)
        d = system.fd_step
        _, vp = system.eigen(times + d)
        _, vm = system.eigen(times - d)
        diag = np.einsum("...im,...im->...m", v.conj(), (vp - vm) / (2 * d))
        idx = np.arange(w.shape[-1])
        C[..., idx, idx] = 1j * diag.imag
        out = Spectrum(w / system.j0, C)
    else:
        raise TypeError(f"unsupported system {type(system).__name__}")
    if gauge is not None:
        out = gauge.apply(out, times)
    return out


@dataclass(frozen=True)
class FramePath:
    """Noise-free frame data on a uniform grid, plus intra-step quadrature data.

    ``int_e`` / ``int_cdiag`` hold integrals of the level values and of the
    diagonal couplings over each half step (axis 1: first / second half),
    from 3-point Gauss-Legendre rules.
    """

    grid: TimeGrid
    j0: float
    e: np.ndarray            # (N+1, n)
    C: np.ndarray            # (N+1, n, n)
    e_mid: np.ndarray        # (N, n)
    C_mid: np.ndarray        # (N, n, n)
    e_gl: np.ndarray         # (N, 2, n)  at 2-point Gauss nodes
    C_gl: np.ndarray         # (N, 2, n, n)
    int_e: np.ndarray        # (N, 2, n)
    int_cdiag: np.ndarray    # (N, 2, n)
    int_gap2: np.ndarray     # (N,)  integral of (e0 - e1)^2 over the step
    k: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return self.e.shape[-1]

    @property
    def steps(self) -> int:
        return self.grid.steps


def build_frame_path(system, grid: TimeGrid, gauge: GaugeTwist | None = None) -> FramePath:
    t, h = grid.t, grid.h
    t0 = t[:-1]
    at_grid = spectrum(system, t, gauge)
    at_mid = spectrum(system, t0 + 0.5 * h, gauge)
    at_gl = spectrum(system, t0[:, None] + _GL2[None, :] * h, gauge)
    half = 0.5 * h
    starts = np.stack([t0, t0 + half], axis=1)                      # (N, 2)
    nodes = starts[..., None] + _GL3_X * half                       # (N, 2, 3)
    at_q = spectrum(system, nodes, gauge)
    n = at_grid.e.shape[-1]
    idx = np.arange(n)
    int_e = half * np.einsum("q,abqn->abn", _GL3_W, at_q.e)
    int_cd = half * np.einsum("q,abqn->abn", _GL3_W, at_q.C[..., idx, idx])
    gap = at_q.e[..., 0] - at_q.e[..., 1] if n > 1 else np.zeros(nodes.shape)
    int_gap2 = half * np.einsum("q,abq->a", _GL3_W, gap ** 2)
    return FramePath(grid, float(system.j0), at_grid.e, at_grid.C, at_mid.e, at_mid.C,
                     at_gl.e, at_gl.C, int_e, int_cd, int_gap2, at_grid.k)
