import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defcast.game import (GameSpec, ProtocolState, check_decision, default_eps_grid, dtol_loss,
                          quantile_loss, quantile_regret, reduce_pea_outcome)


@pytest.mark.parametrize("gamma,omega,expected", [
    ((0.5, 0.5), (1, 0), 0.5),
    ((1, 0), (0.3, 0.9), 0.3),
    ((0.25,) * 4, (1, 1, 1, 1), 1.0),
])
def test_dtol_loss(gamma, omega, expected):
    assert dtol_loss(gamma, omega) == pytest.approx(expected, abs=1e-15)


def test_dtol_loss_dimension_mismatch():
    with pytest.raises(ValueError):
        dtol_loss((0.5, 0.5), (1, 0, 0))


def test_game_spec_validation():
    assert GameSpec.dtol(3).decision_dim == 3
    with pytest.raises(ValueError):
        GameSpec.dtol(0)
    with pytest.raises(ValueError):
        GameSpec.finite_convex(["a"], [[0.1]])
    with pytest.raises(ValueError):
        GameSpec.finite_convex(["a", "b"], [[0.1, 1.2]])
    with pytest.raises(ValueError):
        GameSpec.finite_convex(["a", "b"], [[0.1, 0.2, 0.3]])


def test_check_decision():
    check_decision([0.2, 0.8])
    with pytest.raises(ValueError):
        check_decision([0.2, 0.7])
    with pytest.raises(ValueError):
        check_decision([-0.1, 1.1])


def test_reduce_pea_outcome_mixtures():
    game = GameSpec.finite_convex(["a", "b"], [[0.2, 0.6], [0.8, 0.1]])
    preds = [[1, 0], [0, 1], [0.5, 0.5]]
    np.testing.assert_allclose(reduce_pea_outcome(preds, "a", game), [0.2, 0.8, 0.5], atol=1e-15)


def test_reduce_pea_outcome_indicator_game():
    # generator j loses 1 unless the outcome equals j
    game = GameSpec.finite_convex([0, 1], [[0, 1], [1, 0]])
    np.testing.assert_array_equal(reduce_pea_outcome([[0, 1], [1, 0]], 0, game), [1, 0])
    same = reduce_pea_outcome([[0.3, 0.7]] * 3, 1, game)
    assert np.all(same == same[0])
    with pytest.raises(KeyError):
        reduce_pea_outcome([[0, 1]], 7, game)


def test_advance_hand_example():
    s = ProtocolState(2)
    lam, expert = s.advance([0.25, 0.75], [1, 0])
    assert lam == 0.25 and s.L == 0.25
    np.testing.assert_array_equal(s.Ln, [1, 0])
    assert s.T == 1


def test_advance_zero_outcome_and_additivity():
    s = ProtocolState(3)
    s.advance([1 / 3] * 3, [0, 0, 0])
    assert s.L == 0 and not s.Ln.any()
    s.advance([0.5, 0.5, 0], [0.2, 0.4, 1.0])
    s.advance([0, 0, 1], [0.1, 0.1, 0.5])
    assert s.L == pytest.approx(0.3 + 0.5)
    np.testing.assert_allclose(s.Ln, [0.3, 0.5, 1.5])


def test_advance_rejects_bad_losses():
    s = ProtocolState(2)
    with pytest.raises(ValueError):
        s.advance([0.5, 0.5], [1.5, 0])


def test_trace_retention_modes():
    full = ProtocolState(2, history=None)
    ring = ProtocolState(2, history=3)
    none = ProtocolState(2, history=0)
    for _ in range(5):
        for s in (full, ring, none):
            s.advance([0.5, 0.5], [1, 0])
    assert len(full.trace) == 5 and len(ring.trace) == 3 and len(none.trace) == 0
    c = full.copy()
    c.advance([1, 0], [1, 1])
    assert full.T == 5 and c.T == 6


def test_finite_game_advance():
    game = GameSpec.finite_convex(["a", "b"], [[0.2, 0.6], [0.8, 0.1]])
    s = ProtocolState(3)
    lam, expert = s.advance([0.5, 0.5], "a", game=game, expert_predictions=[[1, 0], [0, 1], [0.5, 0.5]])
    assert lam == pytest.approx(0.5)
    np.testing.assert_allclose(expert, [0.2, 0.8, 0.5])


def test_quantile_loss_examples():
    Ln = [3, 1, 2, 5, 4]
    p = np.full(5, 0.2)
    assert quantile_loss(Ln, p, 0.4) == 2
    assert quantile_loss(Ln, p, 1.0) == 5
    assert quantile_loss([0, 10], [0.3, 0.7], 0.3) == 0
    assert quantile_loss([0, 10], [0.3, 0.7], 0.31) == 10


def test_quantile_loss_domain():
    with pytest.raises(ValueError):
        quantile_loss([1, 2], [0.5, 0.5], 0)
    with pytest.raises(ValueError):
        quantile_loss([1, 2], [0.3, 0.3], 0.7)


def test_quantile_regret():
    s = ProtocolState(4)
    s.L = 10.0
    s.Ln = np.array([2.0, 7, 9, 3])
    q = quantile_regret(s, 0.25)
    assert (q.loss, q.regret) == (2.0, 8.0)
    assert q.regret == s.L - s.Ln.min()


def test_learner_beats_every_expert():
    # experts alternate 0/1 in opposite phase; the learner always sits on the
    # expert that is about to lose 0
    s = ProtocolState(2)
    for t in range(20):
        if t % 2:
            s.advance([0.0, 1.0], [1, 0])
        else:
            s.advance([1.0, 0.0], [0, 1])
    assert s.L == 0 and list(s.Ln) == [10, 10]
    for eps in (0.5, 1.0):
        assert quantile_regret(s, eps).regret < 0


def test_default_eps_grid():
    assert default_eps_grid(4) == [0.01, 0.05, 0.1, 0.25, 0.5, 1.0]
    assert default_eps_grid(3)[-3:] == [1 / 3, 0.5, 1.0]
    assert default_eps_grid(10, total_weight=0.3) == [0.01, 0.05, 0.1, 0.25]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=12), st.data())
def test_quantile_monotone_in_eps(losses, data):
    n = len(losses)
    raw = data.draw(st.lists(st.floats(0.01, 1), min_size=n, max_size=n))
    p = np.asarray(raw) / (sum(raw) * data.draw(st.floats(1, 2)))
    e1 = data.draw(st.floats(1e-6, 1)) * p.sum()
    e2 = data.draw(st.floats(1e-6, 1)) * p.sum()
    lo, hi = sorted((e1, e2))
    assert quantile_loss(losses, p, lo) <= quantile_loss(losses, p, hi)
    # the covered weight at the returned value reaches eps
    v = quantile_loss(losses, p, hi)
    assert p[np.asarray(losses) <= v].sum() >= hi * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 50), min_size=1, max_size=10), st.integers(1, 10))
def test_uniform_quantile_is_order_statistic(losses, k):
    n = len(losses)
    k = min(k, n)
    p = np.full(n, 1.0 / n)
    assert quantile_loss(losses, p, k / n) == sorted(losses)[k - 1]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 30), st.integers(0, 2**31))
def test_pea_regret_not_above_dtol(G, T, seed):
    # a learner mixing expert predictions with weights gamma' suffers the loss of
    # the mixture, which by linearity equals gamma' . omega'
    rng = np.random.default_rng(seed)
    game = GameSpec.finite_convex(["x", "y", "z"], rng.random((G, 3)))
    preds = rng.dirichlet(np.ones(G), size=4)
    pea, dtol = ProtocolState(4), ProtocolState(4)
    for _ in range(T):
        w = rng.dirichlet(np.ones(4))
        omega = ["x", "y", "z"][rng.integers(3)]
        gamma = w @ preds
        pea.advance(gamma, omega, game=game, expert_predictions=preds)
        dtol.advance(w, reduce_pea_outcome(preds, omega, game))
    np.testing.assert_array_equal(pea.Ln, dtol.Ln)
    assert pea.L <= dtol.L + 1e-9
    assert pea.L <= pea.T
