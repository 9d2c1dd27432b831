import math

import numpy as np
import pytest

from defcast.game import GameSpec
from defcast.levin import (LevinNotFound, check_expectation, hoeffding_relation, levin_search, levin_suite,
                           simplex_lattice)


def test_simplex_lattice():
    pts = simplex_lattice(3, 4)
    assert pts.shape == (math.comb(6, 2), 3)
    np.testing.assert_allclose(pts.sum(axis=1), 1)
    assert len({tuple(p) for p in pts}) == len(pts)
    assert simplex_lattice(2, 1000).shape == (1001, 2)


def test_mean_centered_relation_needs_point_mass():
    def q(pi):
        mean = pi[1]
        return [np.array([0.0 - mean, 1.0 - mean])]

    assert check_expectation(q, 2, 50, 0.0) <= 1e-15
    res = levin_search(q, 2, 100, 0.0, tol=1e-12)
    np.testing.assert_allclose(res.pi, [0, 1])
    assert res.g.max() <= 0


def test_constant_relation_any_point():
    res = levin_search(lambda pi: [np.full(3, 0.7)], 3, 5, 0.7, tol=0)
    assert res.slack == 0


def test_not_found_reports_slack():
    with pytest.raises(LevinNotFound) as info:
        levin_search(lambda pi: [np.ones(2)], 2, 10, 0.0, tol=1e-3)
    assert info.value.best_slack == pytest.approx(1.0)


def test_outcome_limit():
    with pytest.raises(ValueError):
        levin_search(lambda pi: [np.zeros(5)], 5, 2, 0.0)


def test_hoeffding_relation_two_outcomes():
    game = GameSpec.finite_convex([0, 1], [[0.0, 1.0], [1.0, 0.0], [0.4, 0.4]])
    preds = np.array([[1, 0, 0], [0, 1, 0], [0.2, 0.3, 0.5]])
    eta = np.array([0.5])
    coef = np.log(np.full((3, 1), 1 / 3)) - eta**2 / 2
    q = hoeffding_relation(game, coef, eta, preds, tie_tol=1e-3)
    assert q.constant == pytest.approx(1.0)
    assert check_expectation(q, 2, 200, q.constant) <= 1e-12
    res = levin_search(q, 2, 1000, q.constant, tol=1e-2)
    assert res.g.max() <= 1 + 1e-2


def test_levin_suite_small():
    out = levin_suite(2, 200, count=8, seed=4)
    assert all(r["found"] for r in out)
    assert all(r["precondition"] <= 1e-12 for r in out)
