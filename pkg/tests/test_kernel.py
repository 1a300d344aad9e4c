import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from noisy_adiabatic import models as m
from noisy_adiabatic.eigenframe import MatrixModel, build_frame_path
from noisy_adiabatic.grid import TimeGrid
from noisy_adiabatic.kernel import (KernelError, build_context, expm_antihermitian, kernel_averaged,
                                    kernel_generic, kernel_tls, phase_weights)
from noisy_adiabatic.noise import NoiseSpec, UnsupportedNoiseError, ensemble_increments, sample_path

from .helpers import random_three_level


def ctx_for(model, t_end, steps, noise=None, **kw):
    return build_context(build_frame_path(model, TimeGrid(t_end, steps)), noise, **kw)


def test_model_a_modulus():
    ctx = ctx_for(m.model_a(5.0, 5.0), 1.0, 100)
    t = ctx.grid.t
    vals = [abs(kernel_tls(ctx, t[i], t[j])) for i in range(0, 101, 10) for j in range(0, i + 1, 5)]
    np.testing.assert_allclose(vals, 25 / 29, rtol=1e-12)
    assert 25 / 29 == pytest.approx(0.8621, abs=1e-4)


def test_linear_sweep_closed_form():
    T = 1.0
    ctx = ctx_for(m.linear_sweep(T), T, 400)
    assert kernel_tls(ctx, 0.0, 0.0) == pytest.approx(0.25, abs=1e-14)
    k = lambda s: 2 * np.sqrt(T ** 2 - 2 * s * T + 2 * s ** 2) / T
    for t, s in [(0.5, 0.1), (1.0, 0.0), (0.75, 0.75)]:
        phase = quad(k, s, t, epsabs=1e-13)[0]
        closed = 4 * np.exp(1j * phase) / (T ** 2 * k(t) ** 2 * k(s) ** 2)
        assert kernel_tls(ctx, t, s) == pytest.approx(closed, abs=1e-12)


def test_constant_h_zero_kernel():
    ctx = ctx_for(m.generic_tls(a=(0.3,), b=(0.1,), omega_z=(1.0,)), 2.0, 50)
    assert kernel_tls(ctx, 2.0, 0.4) == 0


def test_ordering_enforced():
    ctx = ctx_for(m.model_a(5.0, 5.0), 1.0, 10)
    with pytest.raises(KernelError):
        kernel_tls(ctx, 0.1, 0.5)


def test_separable_factors_with_noise():
    model = m.model_a(5.0, 5.0)
    grid = TimeGrid(1.0, 200)
    ctx = build_context(build_frame_path(model, grid), sample_path(NoiseSpec.gaussian(1.0), grid, 3))
    rng = np.random.default_rng(0)
    for _ in range(50):
        j, i = sorted(rng.integers(0, 201, size=2))
        assert abs(kernel_tls(ctx, grid.t[i], grid.t[j]) - ctx.u[0, i] * ctx.v[0, j]) <= 1e-12


def test_noise_only_in_phase():
    model = m.model_a(5.0, 5.0)
    grid = TimeGrid(1.0, 200)
    path = build_frame_path(model, grid)
    free = build_context(path)
    noisy = build_context(path, sample_path(NoiseSpec.gaussian(4.0), grid, 1))
    a = np.abs(np.outer(free.u[0], free.v[0]))
    b = np.abs(np.outer(noisy.u[0], noisy.v[0]))
    np.testing.assert_allclose(b, a, rtol=1e-12)


def test_real_hamiltonian_pair_symmetry():
    ctx = ctx_for(m.linear_sweep(2.0), 2.0, 100)
    u, v = ctx.u[0], ctx.v[0]
    G = np.outer(u, v)                       # G[n, j] = formula at (t_n, s_j)
    np.testing.assert_allclose(G.T, G.conj(), atol=1e-10)


def test_generic_equals_tls_for_two_levels():
    model = m.model_a(5.0, 5.0)
    grid = TimeGrid(1.0, 200)
    noise = ensemble_increments(NoiseSpec.gaussian(1.0), grid, 4, [0])
    mm = MatrixModel(lambda t: m.hamiltonian_matrix(model, t), gauge_components=(1, 1))
    c_gen = build_context(build_frame_path(mm, grid), noise)
    c_tls = build_context(build_frame_path(model, grid), noise)
    t = grid.t
    worst = max(abs(kernel_generic(c_gen, t[i], t[j]) - kernel_tls(c_tls, t[i], t[j]))
                for i in range(0, 201, 10) for j in range(0, i + 1, 10))
    assert worst <= 1e-8


def test_generic_diagonal_is_coupling_norm():
    mm = random_three_level()
    ctx = build_context(build_frame_path(mm, TimeGrid(2.0, 100)))
    for n in (0, 37, 100):
        t = ctx.grid.t[n]
        C = ctx.path.C[n]
        assert kernel_generic(ctx, t, t) == pytest.approx(np.sum(np.abs(C[0, 1:]) ** 2), abs=1e-12)


def test_averaged_kernel():
    model = m.model_a(5.0, 5.0)
    path = build_frame_path(model, TimeGrid(1.0, 100))
    free = build_context(path)
    zero = build_context(path, averaged=NoiseSpec.gaussian(0.0))
    avg = build_context(path, averaged=NoiseSpec.gaussian(1.0))
    assert kernel_averaged(zero, 0.7, 0.2) == kernel_tls(free, 0.7, 0.2)
    ratio = kernel_averaged(avg, 0.5, 0.4) / kernel_tls(free, 0.5, 0.4)
    assert ratio == pytest.approx(np.exp(-1.45), rel=1e-12)
    with pytest.raises(UnsupportedNoiseError):
        build_context(path, averaged=NoiseSpec.shot(1.0, 10.0))


def test_averaged_kernel_monte_carlo():
    model = m.model_a(5.0, 5.0)
    grid = TimeGrid(0.2, 20)
    path = build_frame_path(model, grid)
    gamma, n = 1.0, 100_000
    noise = ensemble_increments(NoiseSpec.gaussian(gamma), grid, 9, range(n))
    mc = build_context(path, noise)
    g = mc.u[:, 20] * mc.v[:, 5]
    target = kernel_averaged(build_context(path, averaged=NoiseSpec.gaussian(gamma)), 0.2, 0.05)
    se_re, se_im = g.real.std() / np.sqrt(n), g.imag.std() / np.sqrt(n)
    assert abs(g.real.mean() - target.real) <= 3 * se_re
    assert abs(g.imag.mean() - target.imag) <= 3 * se_im


@pytest.mark.parametrize("delta", [0.0, 1e-3, 0.3, 0.49, 0.51, 2.0, 7.5, 0.4 + 0.2j, 3.0 + 5.0j])
def test_phase_weights(delta):
    w = phase_weights(np.array([delta]))
    z = 1j * delta

    def cquad(f):
        re = quad(lambda x: f(x).real, 0, 1, epsabs=1e-14)[0]
        im = quad(lambda x: f(x).imag, 0, 1, epsabs=1e-14)[0]
        return re + 1j * im

    F = lambda x: x if delta == 0 else (np.exp(z * x) - 1) / z
    assert w.m0[0] == pytest.approx(cquad(lambda x: np.exp(z * x)), abs=1e-13)
    assert w.m1[0] == pytest.approx(cquad(lambda x: x * np.exp(z * x)), abs=1e-13)
    assert w.a2[0] == pytest.approx(cquad(lambda x: np.exp(z * (1 - x)) * F(x)), abs=1e-13)
    assert w.b2[0] == pytest.approx(cquad(F), abs=1e-13)


def test_expm_antihermitian():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3, 4):
        A = rng.normal(size=(5, n, n)) + 1j * rng.normal(size=(5, n, n))
        X = A - np.swapaxes(A.conj(), -1, -2)
        ref = np.array([expm(x) for x in X])
        np.testing.assert_allclose(expm_antihermitian(X), ref, atol=1e-12)
