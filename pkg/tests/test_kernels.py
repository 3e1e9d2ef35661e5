"""The numba and numpy kernel paths compute the same thing."""
import importlib

import numpy as np
import pytest

from ctpt import _kernels

pytestmark = pytest.mark.skipif(_kernels.NUMBA is None, reason="numba not installed")
rng = np.random.default_rng(7)


def test_hermite_functions_agree():
    xi = rng.normal(size=50) * 4 + 1j * rng.normal(size=50)
    a = _kernels.NUMPY.hermite_functions(40, xi)
    b = _kernels.NUMBA.hermite_functions(40, xi)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


def test_cubic_interp_agrees_and_is_exact_on_cubics():
    x0, h, n = -3.0, 0.05, 121
    x = x0 + h * np.arange(n)
    vals = (x**3 - 2 * x + 1) * (1 + 0.5j)
    xq = rng.uniform(-3.2, 3.2, size=200)
    a = _kernels.NUMPY.cubic_interp(x0, h, vals, xq)
    b = _kernels.NUMBA.cubic_interp(x0, h, vals, xq)
    np.testing.assert_allclose(a, b, atol=1e-13)
    inside = (xq >= x[0]) & (xq <= x[-1])
    np.testing.assert_allclose(a[inside], ((xq**3 - 2 * xq + 1) * (1 + 0.5j))[inside], atol=1e-11)
    assert np.all(a[~inside] == 0)


def _random_bands(n):
    ab = rng.normal(size=(5, n)) + 1j * rng.normal(size=(5, n))
    ab[2] += 10.0  # diagonally dominant
    return ab


def test_penta_matvec_matches_dense():
    n = 30
    ab = _random_bands(n)
    dense = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(max(0, i - 2), min(n, i + 3)):
            dense[i, j] = ab[2 + i - j, j]
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    for impl in (_kernels.NUMPY, _kernels.NUMBA):
        np.testing.assert_allclose(impl.penta_matvec(ab, v), dense @ v, atol=1e-12)


def test_penta_solve_inverts_matvec():
    n = 200
    ab = _random_bands(n)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    rhs = _kernels.NUMPY.penta_matvec(ab, x)
    for impl in (_kernels.NUMPY, _kernels.NUMBA):
        np.testing.assert_allclose(impl.penta_solve(ab, rhs), x, atol=1e-11)


def test_crank_nicolson_paths_agree():
    x = np.linspace(-8, 8, 401)
    psi0 = np.exp(-x**2 / 2 + 0.3j * x).astype(complex)
    alpha = np.exp(-2 * (np.arange(50) + 0.5) * 1e-3)
    args = (x, x[1] - x[0], 1.0, 1.0, 2.0, alpha, 1e-3, 10)
    a = _kernels.NUMPY.cn_propagate(psi0, *args)
    b = _kernels.NUMBA.cn_propagate(psi0, *args)
    assert a.shape == (6, 401)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("CTPT_NO_NUMBA", "1")
    assert _kernels.active() is _kernels.NUMPY
    monkeypatch.setenv("CTPT_NO_NUMBA", "0")
    assert _kernels.active() is _kernels.NUMBA
