import math

import numpy as np
import pytest

from defcast import _kernels_py, kernels

BACKENDS = kernels.available_backends()


def _brute_vertex(coef, eta, gamma):
    n = coef.shape[0]
    out = []
    for v in range(2**n):
        omega = np.array([(v >> j) & 1 for j in range(n)], dtype=float)
        lam = gamma @ omega
        terms = [coef[j, k] + eta[k] * (lam - omega[j]) for j in range(n) for k in range(len(eta))]
        m = max(terms)
        out.append(m + math.log(sum(math.exp(x - m) for x in terms)))
    return np.array(out)


def test_vertex_bits():
    bits = kernels.vertex_bits(3)
    assert bits.shape == (8, 3)
    np.testing.assert_array_equal(bits[5], [1, 0, 1])
    assert not bits.flags.writeable


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("n,K", [(1, 1), (2, 1), (3, 4), (5, 7), (8, 3)])
def test_vertex_kernel_against_brute_force(name, n, K):
    rng = np.random.default_rng(n * 31 + K)
    coef = rng.normal(scale=2.0, size=(n, K))
    eta = rng.uniform(0, 1, K)
    gamma = rng.dirichlet(np.ones(n))
    logf, etabar = BACKENDS[name].vertex_logf(coef, eta, gamma)
    np.testing.assert_allclose(logf, _brute_vertex(coef, eta, gamma), atol=1e-12)
    assert np.all(etabar >= eta.min() - 1e-15) and np.all(etabar <= eta.max() + 1e-15)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_rows_kernel_matches_vertex_kernel(name):
    rng = np.random.default_rng(5)
    n, K = 6, 9
    coef = rng.normal(size=(n, K))
    eta = np.geomspace(1e-3, 0.36, K)
    gamma = rng.dirichlet(np.ones(n))
    bits = kernels.vertex_bits(n)
    a, ea = BACKENDS[name].vertex_logf(coef, eta, gamma)
    b, eb = BACKENDS[name].rows_logf(bits @ gamma, bits, coef, eta)
    np.testing.assert_allclose(a, b, atol=1e-13)
    np.testing.assert_allclose(ea, eb, atol=1e-13)


def test_backends_agree():
    if "cython" not in BACKENDS:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(9)
    for n, K in [(2, 1), (8, 32), (12, 64)]:
        coef = rng.normal(scale=3.0, size=(n, K))
        eta = np.geomspace(1e-4, 0.36, K)
        gamma = rng.dirichlet(np.ones(n))
        om = rng.random((40, n))
        for fn, args in (("vertex_logf", (coef, eta, gamma)), ("rows_logf", (om @ gamma, om, coef, eta))):
            x = getattr(BACKENDS["cython"], fn)(*args)
            y = getattr(_kernels_py, fn)(*args)
            np.testing.assert_allclose(x[0], y[0], atol=1e-13)
            np.testing.assert_allclose(x[1], y[1], atol=1e-13)


def test_extreme_coefficients_stay_finite():
    coef = np.array([[-800.0, 700.0], [650.0, -900.0]])
    eta = np.array([0.1, 0.3])
    for mod in BACKENDS.values():
        logf, _ = mod.vertex_logf(coef, eta, np.array([0.5, 0.5]))
        assert np.all(np.isfinite(logf))
