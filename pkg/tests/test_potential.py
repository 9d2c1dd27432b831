import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defcast.potential import (C_ZETA, FIXED, MIXTURE, THEOREM3, PotentialState, default_i_max,
                               direct_f, effective_n, fixed_grid, hoeffding_exponent, theorem2_grid,
                               theorem3_grid)
from defcast.solver import best_response


def test_hoeffding_exponent_examples():
    assert hoeffding_exponent(0.0, 0.3, 0.9) == 0.0
    assert hoeffding_exponent(1.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert hoeffding_exponent(0.5, 0.2, 0.7) == pytest.approx(-0.375, abs=1e-15)


def test_theorem2_grid_masses():
    assert theorem2_grid(math.exp(-10), 64).mass == pytest.approx(0.9, abs=1e-12)
    assert theorem2_grid(math.exp(-20), 7).mass == pytest.approx(0.95, abs=1e-12)
    one = theorem2_grid(math.exp(-2), 1)
    assert one.weight[0] == pytest.approx(0.5, abs=1e-15)
    assert one.eta[0] == pytest.approx(math.exp(-1.5), rel=1e-15)


def test_theorem2_grid_structure():
    g = theorem2_grid(1e-4, 32)
    assert len(g) == 32 and np.all(g.weight > 0)
    assert np.all(np.diff(g.eta) > 0) and g.eta[-1] < math.exp(-1)
    ratios = g.eta[1:] / g.eta[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    with pytest.raises(ValueError):
        theorem2_grid(0.5, 4)
    with pytest.raises(ValueError):
        theorem2_grid(1e-3, 0)


def test_theorem2_mass_increases_as_grid_refines():
    masses = [theorem2_grid(10.0**-k, 16).mass for k in range(2, 12)]
    assert all(b > a for a, b in zip(masses, masses[1:]))
    assert masses[-1] < 1


def test_theorem3_grid():
    assert C_ZETA == pytest.approx(0.607927101854, rel=1e-11)
    g = theorem3_grid(4, 2)
    np.testing.assert_allclose(g.eta, [0.5, 1.0])
    np.testing.assert_allclose(g.weight, [C_ZETA, C_ZETA / 4])


def test_default_i_max():
    assert default_i_max(100) == 4
    assert default_i_max(2) == default_i_max(3) == 3
    assert effective_n(np.full(5, 0.2)) == 5
    assert effective_n(np.array([0.5, 0.25, 0.125])) == 8


def test_log_f_single_expert_zero_difference():
    st_ = PotentialState.fresh(FIXED, fixed_grid(0.7), n=1)
    assert st_.log_f(0.4, [0.4]) == pytest.approx(-0.245, abs=1e-15)


def test_log_f_zero_rate():
    st_ = PotentialState.fresh(FIXED, fixed_grid(0.0), n=3)
    assert st_.log_f_dtol([0.2, 0.3, 0.5], [1, 0, 0.4]) == pytest.approx(0.0, abs=1e-15)


def test_log_f_hand_example():
    st_ = PotentialState.fresh(FIXED, fixed_grid(1.0), n=2)
    expected = math.log((math.exp(-1) + 1) / 2)
    assert st_.log_f_dtol([0.5, 0.5], [1, 0]) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(-0.37988549, abs=1e-8)


def test_capacity_examples():
    s = PotentialState.fresh(THEOREM3, theorem3_grid(1, 2), n=4)
    assert math.exp(s.log_capacity()) == pytest.approx(C_ZETA * 1.25, rel=1e-14)
    assert math.exp(s.log_capacity()) == pytest.approx(0.759909, abs=1e-6)
    big = PotentialState.fresh(THEOREM3, theorem3_grid(1, 100_000), n=2)
    # the truncated tail is c * sum_{i > M} 1/i^2 ~ c / M
    assert math.exp(big.log_capacity()) == pytest.approx(1 - C_ZETA / 100_000, abs=1e-10)


def test_update_hand_example():
    s = PotentialState.fresh(FIXED, fixed_grid(0.3), n=2).update(0.25, np.array([1.0, 0.0]))
    np.testing.assert_allclose(s.R, [-0.75, 0.25], atol=1e-15)
    assert s.t == 1


def test_update_trivial_cases():
    s = PotentialState.fresh(MIXTURE, theorem2_grid(1e-3, 8), n=3)
    s1 = s.update(0.6, np.array([0.6, 0.1, 0.9]))
    assert s1.R[0] == 0
    s2 = s.update(0.4, np.full(3, 0.4))
    np.testing.assert_array_equal(s2.R, 0)


def test_theorem3_variance_term():
    s = PotentialState.fresh(THEOREM3, theorem3_grid(1, 3), n=2)
    for _ in range(4):
        s = s.update(0.5, np.array([0.2, 0.9]))
    assert s.V == pytest.approx(1 + 1 / math.sqrt(2) + 1 / math.sqrt(3) + 1 / math.sqrt(4))
    # capacity C_5 written out term by term
    T = 5
    total = 0.0
    for n in range(2):
        for i in (1, 2, 3):
            acc = (i / (2 * math.sqrt(T))) * sum(i / math.sqrt(t) for t in range(1, T))
            total += 0.5 * C_ZETA / i**2 * math.exp((i / math.sqrt(T)) * s.R[n] - acc)
    assert math.exp(s.log_capacity()) == pytest.approx(total, rel=1e-13)


def test_stored_potential_closed_form():
    grid = theorem2_grid(1e-3, 6)
    p = np.array([0.5, 0.3, 0.2])
    s = PotentialState.fresh(MIXTURE, grid, weights=p)
    rng = np.random.default_rng(3)
    L = 0.0
    Ln = np.zeros(3)
    for t in range(1, 30):
        omega = rng.random(3)
        gamma = rng.dirichlet(np.ones(3))
        lam = float(gamma @ omega)
        s = s.update(lam, omega)
        L += lam
        Ln += omega
        R = L - Ln
        want = sum(p[n] * grid.weight[k] * math.exp(grid.eta[k] * R[n] - t * grid.eta[k] ** 2 / 2)
                   for n in range(3) for k in range(len(grid)))
        assert math.exp(s.last_log_f) == pytest.approx(want, rel=1e-12)


def _random_state(rng, mode, n, steps):
    if mode == FIXED:
        grid = fixed_grid(rng.uniform(0.05, 1.0))
    elif mode == MIXTURE:
        grid = theorem2_grid(1e-3, 8)
    else:
        grid = theorem3_grid(1, 3)
    w = rng.dirichlet(np.ones(n)) * rng.uniform(0.5, 1.0)
    s = PotentialState.fresh(mode, grid, weights=w)
    for _ in range(steps):
        omega = rng.random(n)
        s = s.update(float(rng.dirichlet(np.ones(n)) @ omega), omega)
    return s


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([FIXED, MIXTURE, THEOREM3]), st.integers(1, 6), st.integers(0, 40),
       st.integers(0, 2**32 - 1))
def test_log_domain_matches_direct(mode, n, steps, seed):
    rng = np.random.default_rng(seed)
    s = _random_state(rng, mode, n, steps)
    omega = rng.random(n)
    gamma = rng.dirichlet(np.ones(n))
    direct = direct_f(s, float(gamma @ omega), omega)
    assert math.exp(s.log_f_dtol(gamma, omega)) == pytest.approx(direct, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([FIXED, MIXTURE, THEOREM3]), st.integers(1, 5), st.integers(0, 30),
       st.integers(0, 2**32 - 1))
def test_duplication_invariance(mode, n, steps, seed):
    rng = np.random.default_rng(seed)
    s = _random_state(rng, mode, n, steps)
    j = int(rng.integers(n))
    w2 = np.concatenate([s.weights, [s.weights[j] / 2]])
    w2[j] /= 2
    dup = PotentialState(s.mode, s.grid, w2, np.concatenate([s.R, [s.R[j]]]), s.t, s.V)
    omega = rng.random(n)
    lam = float(rng.random())
    a = s.log_f(lam, omega)
    b = dup.log_f(lam, np.concatenate([omega, [omega[j]]]))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n, steps, seed):
    rng = np.random.default_rng(seed)
    s = PotentialState.fresh(MIXTURE, theorem2_grid(1e-3, 8), n=n)
    for _ in range(steps):
        omega = rng.random(n)
        s = s.update(float(omega.mean()), omega)
    perm = rng.permutation(n)
    ps = PotentialState(s.mode, s.grid, s.weights[perm], s.R[perm], s.t, s.V)
    omega = rng.random(n)
    gamma = rng.dirichlet(np.ones(n))
    assert ps.log_f_dtol(gamma[perm], omega[perm]) == pytest.approx(s.log_f_dtol(gamma, omega), abs=1e-12)


def test_positivity_with_large_regret():
    s = PotentialState(FIXED, fixed_grid(1.0), np.array([0.5, 0.5]), np.array([-5000.0, 800.0]), 100)
    v = s.log_f(0.0, np.array([1.0, 1.0]))
    assert np.isfinite(v) and v > 0


def test_hoeffding_expectation_monte_carlo():
    rng = np.random.default_rng(11)
    n = 4
    for _ in range(5):
        support = rng.random((6, n))
        pi = rng.dirichlet(np.ones(6))
        mu = pi @ support
        best = best_response(mu)
        gamma = np.zeros(n)
        gamma[best[0]] = 1.0
        omegas = support[rng.choice(6, size=100_000, p=pi)]
        for eta in (0.1, 0.5, 1.0):
            for other in range(n):
                x = np.exp(hoeffding_exponent(eta, omegas @ gamma, omegas[:, other]))
                se = x.std(ddof=1) / math.sqrt(len(x))
                assert x.mean() <= 1 + 3 * se
