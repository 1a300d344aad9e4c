import numpy as np

from noisy_adiabatic.eigenframe import MatrixModel


def random_three_level(seed=0, size=0.4):
    """Smooth 3x3 Hamiltonian with well separated levels."""
    rng = np.random.default_rng(seed)

    def herm():
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        return 0.5 * (A + A.conj().T)

    X, Y = herm(), herm()
    return MatrixModel(lambda t: np.diag([2.0, 0.0, -2.0]) + size * np.sin(t) * X + 0.75 * size * t * Y)


def rabi_abs_psi0(omega, omega_z, t, j0=1.0):
    """Closed-form ``|psi0(t)|`` for Model A from the co-rotating frame.

    ``H(t) = R H(0) R^+`` with ``R = exp(-i omega t sigma_z / 2)``, so the
    co-rotating state evolves under the static ``H(0) - omega sigma_z / 2``.
    """
    from scipy.linalg import expm

    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    H0 = j0 * (sx + 0.5 * omega_z * sz)
    e, V = np.linalg.eigh(H0)
    up = V[:, 1]
    K = H0 - 0.5 * omega * sz
    return np.array([abs(up.conj() @ expm(-1j * K * s) @ up) for s in np.atleast_1d(t)])


def solve_model(model, t_end, steps, method="VolterraQuadrature", noise=None, gauge=None,
                geometric=True, path=None):
    from noisy_adiabatic.eigenframe import build_frame_path
    from noisy_adiabatic.kernel import build_context
    from noisy_adiabatic.solver import SolverConfig, solve_batch

    cfg = SolverConfig(t_end, steps, method, geometric)
    path = path or build_frame_path(model, cfg.grid, gauge)
    return solve_batch(build_context(path, noise), cfg)
