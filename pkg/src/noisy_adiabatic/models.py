"""Catalog of time-dependent two-level Hamiltonians.

Every catalog entry is expressed through one field parametrization,

    H(t) = (J0 + c) * (a sx + b sy + (omega/2) sz),

with dimensionless fields ``(a, b, omega)``.  Units: hbar = 1, energies in
units of J0, times in units of 1/J0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

_TIME_SLACK = 1e-12


class ModelError(ValueError):
    """Invalid model parameters or evaluation outside the model's domain."""


class ModelKind(str, Enum):
    GENERIC_TLS = "GenericTLS"
    LINEAR_SWEEP = "LinearSweep"
    MODEL_A = "ModelA"
    MODEL_B = "ModelB"


class Branch(str, Enum):
    E0 = "E0"  # upper-energy eigenstate
    E1 = "E1"


@dataclass(frozen=True)
class FieldSample:
    a: float | np.ndarray
    b: float | np.ndarray
    omega: float | np.ndarray
    t: float | np.ndarray = 0.0


@dataclass(frozen=True)
class ModelSpec:
    """One entry of the model catalog.

    Parameters
    ----------
    kind:
        Catalog name.
    j0:
        Overall energy scale J0 (> 0).
    passage_time:
        Sweep duration T; required by ``LinearSweep`` and ``ModelB``.
    omega:
        Rotation frequency Omega of the transverse field (``ModelA``), in
        units of J0.
    omega_z:
        Dimensionless longitudinal field (``ModelA``).
    initial_branch:
        Which instantaneous eigenstate is the target.
    modelB_init:
        Amplitudes ``(mu, nu)`` of the initial single-exciton state
        ``mu|ud> + nu|du>`` (``ModelB`` only).
    poly:
        ``GenericTLS`` only: polynomial coefficients (lowest order first) for
        the fields, keyed by ``"a"``, ``"b"``, ``"omega_z"``.
    """

    kind: ModelKind
    j0: float = 1.0
    passage_time: float | None = None
    omega: float = 0.0
    omega_z: float = 0.0
    initial_branch: Branch = Branch.E0
    modelB_init: tuple[complex, complex] = (1.0, 0.0)
    poly: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "initial_branch", Branch(self.initial_branch))
        if not self.j0 > 0:
            raise ModelError(f"j0 must be positive, got {self.j0}")
        if self.kind in (ModelKind.LINEAR_SWEEP, ModelKind.MODEL_B):
            if self.passage_time is None or not self.passage_time > 0:
                raise ModelError(f"{self.kind.value} requires passage_time > 0")
        if self.kind is ModelKind.MODEL_B:
            mu, nu = self.modelB_init
            norm = abs(mu) ** 2 + abs(nu) ** 2
            if abs(norm - 1.0) > 1e-12:
                raise ModelError(f"|mu|^2 + |nu|^2 must be 1, got {norm!r}")
        if self.kind is ModelKind.GENERIC_TLS:
            unknown = set(self.poly) - {"a", "b", "omega_z"}
            if unknown:
                raise ModelError(f"unknown GenericTLS field(s): {sorted(unknown)}")
            frozen = {k: tuple(float(c) for c in v) for k, v in self.poly.items()}
            object.__setattr__(self, "poly", frozen)

    @property
    def is_sweep(self) -> bool:
        return self.kind in (ModelKind.LINEAR_SWEEP, ModelKind.MODEL_B)

    @property
    def natural_t_end(self) -> float | None:
        return self.passage_time if self.is_sweep else None


def linear_sweep(passage_time: float, j0: float = 1.0, branch="E0") -> ModelSpec:
    return ModelSpec(ModelKind.LINEAR_SWEEP, j0=j0, passage_time=passage_time,
                     initial_branch=branch)


def model_a(omega: float, omega_z: float, j0: float = 1.0, branch="E0") -> ModelSpec:
    return ModelSpec(ModelKind.MODEL_A, j0=j0, omega=omega, omega_z=omega_z,
                     initial_branch=branch)


def model_b(passage_time: float, j0: float = 1.0, mu=1.0, nu=0.0) -> ModelSpec:
    return ModelSpec(ModelKind.MODEL_B, j0=j0, passage_time=passage_time,
                     modelB_init=(mu, nu))


def generic_tls(a=(0.0,), b=(0.0,), omega_z=(2.0,), j0: float = 1.0,
                branch="E0") -> ModelSpec:
    return ModelSpec(ModelKind.GENERIC_TLS, j0=j0, initial_branch=branch,
                     poly={"a": tuple(a), "b": tuple(b), "omega_z": tuple(omega_z)})


def _check_time(model: ModelSpec, t):
    if model.is_sweep:
        t_arr = np.asarray(t, dtype=float)
        T = model.passage_time
        if np.any(t_arr < -_TIME_SLACK * T) or np.any(t_arr > T * (1 + _TIME_SLACK)):
            raise ModelError(f"t outside [0, T={T}] for {model.kind.value}")


def _polyval(coeffs, t):
    return np.polynomial.polynomial.polyval(t, coeffs) if coeffs else np.zeros_like(t)


def _polyder(coeffs, t):
    if len(coeffs) < 2:
        return np.zeros_like(t)
    return np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(coeffs))


def eval_fields(model: ModelSpec, t) -> FieldSample:
    """Dimensionless fields ``(a, b, omega)`` at time(s) ``t``."""
    _check_time(model, t)
    t = np.asarray(t, dtype=float)
    if model.is_sweep:
        x = t / model.passage_time
        a, b, w = x, np.zeros_like(t), 2.0 * (1.0 - x)
    elif model.kind is ModelKind.MODEL_A:
        a, b = np.cos(model.omega * t), np.sin(model.omega * t)
        w = np.full_like(t, model.omega_z)
    else:
        a = _polyval(model.poly.get("a", ()), t)
        b = _polyval(model.poly.get("b", ()), t)
        w = _polyval(model.poly.get("omega_z", ()), t)
    if t.ndim == 0:
        return FieldSample(float(a), float(b), float(w), float(t))
    return FieldSample(a, b, w, t)


def field_rates(model: ModelSpec, t) -> FieldSample:
    """Time derivatives of the fields; returned in a :class:`FieldSample`."""
    _check_time(model, t)
    t = np.asarray(t, dtype=float)
    if model.is_sweep:
        inv_T = 1.0 / model.passage_time
        da, db, dw = np.full_like(t, inv_T), np.zeros_like(t), np.full_like(t, -2 * inv_T)
    elif model.kind is ModelKind.MODEL_A:
        W = model.omega
        da, db = -W * np.sin(W * t), W * np.cos(W * t)
        dw = np.zeros_like(t)
    else:
        da = _polyder(model.poly.get("a", ()), t)
        db = _polyder(model.poly.get("b", ()), t)
        dw = _polyder(model.poly.get("omega_z", ()), t)
    if t.ndim == 0:
        return FieldSample(float(da), float(db), float(dw), float(t))
    return FieldSample(da, db, dw, t)


def field_matrix(fields: FieldSample) -> np.ndarray:
    """``a sx + b sy + (omega/2) sz``; stacked along leading axes for array fields."""
    a = np.asarray(fields.a, dtype=float)[..., None, None]
    b = np.asarray(fields.b, dtype=float)[..., None, None]
    w = np.asarray(fields.omega, dtype=float)[..., None, None]
    return a * SIGMA_X + b * SIGMA_Y + 0.5 * w * SIGMA_Z


def hamiltonian_matrix(model: ModelSpec, t, noise_value=0.0) -> np.ndarray:
    """``(J0 + noise_value) * (a sx + b sy + (omega/2) sz)`` at time ``t``."""
    scale = model.j0 + np.asarray(noise_value, dtype=float)[..., None, None]
    return scale * field_matrix(eval_fields(model, t))


def map_modelB_to_tls(c_complex: complex, omega: float, t: float = 0.0) -> FieldSample:
    """Map the single-exciton block of the two-qubit model onto TLS fields.

    ``|ud> -> |u>``, ``|du> -> |d>``, and ``c = a - i b``.
    """
    c_complex = complex(c_complex)
    return FieldSample(a=c_complex.real, b=-c_complex.imag, omega=float(omega), t=t)


# two-qubit operators, basis order |uu>, |ud>, |du>, |dd>
_SP = np.array([[0, 1], [0, 0]], dtype=complex)  # |u><d|
_SM = _SP.conj().T
SIGMA1_PLUS_SIGMA2_MINUS = np.kron(_SP, _SM)
SIGMA1_Z = np.kron(SIGMA_Z, IDENTITY2)
SIGMA2_Z = np.kron(IDENTITY2, SIGMA_Z)
SINGLE_EXCITON = np.array([[0, 0], [1, 0], [0, 1], [0, 0]], dtype=complex)  # columns |ud>, |du>


def modelB_hamiltonian_4x4(fields: FieldSample, B: float, j0: float = 1.0) -> np.ndarray:
    """Two coupled qubits with collective noise ``B`` and field difference ``omega``."""
    c = complex(fields.a, -fields.b)
    B1 = B + fields.omega / 4.0
    B2 = B - fields.omega / 4.0
    hop = c * SIGMA1_PLUS_SIGMA2_MINUS
    return j0 * (hop + hop.conj().T + B1 * SIGMA1_Z + B2 * SIGMA2_Z)


@dataclass(frozen=True)
class DFSCheck:
    ok: bool
    collective_residual: float
    block_residual: float

    @property
    def residual(self) -> float:
        return max(self.collective_residual, self.block_residual)


def validate_dfs(fields: FieldSample, B: float, state=None, j0: float = 1.0,
                 tol: float = 1e-12) -> DFSCheck:
    """Check that collective noise ``B (s1z + s2z)`` leaves the single-exciton space alone.

    ``state`` is a 2-vector of amplitudes on ``(|ud>, |du>)``; default ``|ud>``.
    Also compares the 4x4 Hamiltonian's single-exciton block with the mapped
    2x2 effective Hamiltonian.
    """
    if state is None:
        state = np.array([1.0, 0.0], dtype=complex)
    state = np.asarray(state, dtype=complex)
    state = state / np.linalg.norm(state)
    psi4 = SINGLE_EXCITON @ state
    collective = j0 * B * (SIGMA1_Z + SIGMA2_Z)
    collective_res = float(np.linalg.norm(collective @ psi4))

    H4 = modelB_hamiltonian_4x4(fields, B, j0)
    block = SINGLE_EXCITON.conj().T @ H4 @ SINGLE_EXCITON
    mapped = j0 * field_matrix(map_modelB_to_tls(complex(fields.a, -fields.b), fields.omega))
    # H4 must not leak out of the subspace either
    leak = H4 @ psi4 - SINGLE_EXCITON @ (block @ state)
    block_res = float(max(np.abs(block - mapped).max(), np.linalg.norm(leak)))
    return DFSCheck(collective_res <= tol and block_res <= tol, collective_res, block_res)
