"""Online learners: defensive forecasting variants and exponential-weights baselines.

Every learner follows the same two-call protocol per step::

    gamma = learner.predict(expert_predictions)   # None in DTOL
    record = learner.observe(outcome)

For a finite convex game ``expert_predictions`` are the experts' generator
weights and ``gamma`` is a generator-weight vector; for DTOL ``gamma`` is a
distribution over the N actions and ``outcome`` the loss vector.
"""

import math
from dataclasses import dataclass

import numpy as np

from .game import GameSpec, check_weights, reduce_pea_outcome, uniform_weights
from .potential import (FIXED, MIXTURE, THEOREM3, PotentialState, default_i_max, effective_n,
                        fixed_grid, theorem2_grid, theorem3_grid)
from .solver import Infeasible, SolveOptions, StepProblem, reverify, solve


class LearnerAborted(RuntimeError):
    """Raised when the solver cannot certify a decision; the run must stop."""

    def __init__(self, message, t, best=None):
        super().__init__(message)
        self.t = t
        self.best = best


@dataclass
class StepRecord:
    t: int
    gamma: np.ndarray
    outcome: object
    learner_loss: float
    expert_losses: np.ndarray
    log_f: float = math.nan
    log_capacity: float = math.nan
    exact: bool = None
    reverify_gap: float = math.nan


class Learner:
    name = "learner"

    def __init__(self, game, weights=None):
        if isinstance(game, int):
            game = GameSpec.dtol(game)
        self.game = game
        self.weights = weights
        self.t = 0
        self.Ln = None
        self.L = 0.0
        self._gamma = None
        self._preds = None

    def _init_experts(self, n):
        if self.weights is None:
            self.weights = uniform_weights(n)
        self.weights = check_weights(self.weights, n)
        self.Ln = np.zeros(n)

    def _n_experts(self, expert_predictions):
        if self.game.is_dtol:
            return self.game.n_actions
        return np.asarray(expert_predictions).shape[0]

    def predict(self, expert_predictions=None):
        if self.Ln is None:
            self._init_experts(self._n_experts(expert_predictions))
        if not self.game.is_dtol:
            self._preds = np.array(expert_predictions, dtype=np.float64, ndmin=2)
        self._gamma = self._decide()
        return self._gamma

    def _losses(self, outcome):
        if self.game.is_dtol:
            omega = np.asarray(outcome, dtype=np.float64)
            return float(self._gamma @ omega), omega
        lam = self.game.loss(self._gamma, outcome)
        return lam, reduce_pea_outcome(self._preds, outcome, self.game)

    def observe(self, outcome):
        if self._gamma is None:
            raise RuntimeError("observe() called before predict()")
        lam, expert = self._losses(outcome)
        self.t += 1
        record = self._record(lam, expert, outcome)
        self.L += lam
        self.Ln = self.Ln + expert
        self._gamma = None
        return record

    def _record(self, lam, expert, outcome):
        return StepRecord(self.t, self._gamma, outcome, lam, expert)

    def _mix(self, action_weights):
        if self.game.is_dtol:
            return action_weights
        gamma = action_weights @ self._preds
        return gamma / gamma.sum()


class Hedge(Learner):
    """Exponentially weighted average: gamma_n proportional to p_n exp(-eta L^n)."""

    name = "hedge"

    def __init__(self, game, eta, weights=None):
        super().__init__(game, weights)
        if not eta > 0:
            raise ValueError("eta must be positive")
        self.eta = eta

    def current_eta(self):
        return self.eta

    def _decide(self):
        lw = np.log(self.weights) - self.current_eta() * self.Ln
        return self._mix(np.exp(lw - np.logaddexp.reduce(lw)))


class HedgeAnytime(Hedge):
    """Hedge with eta_t = sqrt(8 ln N / t)."""

    name = "hedge_anytime"

    def __init__(self, game, weights=None):
        Learner.__init__(self, game, weights)

    def current_eta(self):
        n = len(self.weights)
        return math.sqrt(8 * math.log(max(n, 2)) / (self.t + 1))


class DefensiveForecaster(Learner):
    """Algorithm-1 style learner driven by a Hoeffding potential.

    Subclasses choose the learning-rate grid and the capacity each step's
    decision must respect.
    """

    mode = None

    def __init__(self, game, weights=None, solver=SolveOptions(), verify=False):
        super().__init__(game, weights)
        self.solver = solver
        self.verify = verify
        self.state = None
        self.certificate = None
        self._problem = None
        self._cap = None

    def _grid(self, n):
        raise NotImplementedError

    def _init_experts(self, n):
        super()._init_experts(n)
        self.state = PotentialState.fresh(self.mode, self._grid(n), weights=self.weights)

    def capacity_log(self):
        """Right-hand side of the step inequality: the previous realized potential."""
        return self.state.last_log_f

    def _decide(self):
        problem = StepProblem.from_state(self.state, self.game, self._preds)
        cap = self.capacity_log()
        try:
            cert = solve(problem, cap, self.solver)
        except Infeasible as exc:
            raise LearnerAborted(f"step {self.t + 1}: {exc}", self.t + 1, exc.best) from exc
        self.certificate, self._problem, self._cap = cert, problem, cap
        # the solver works in decision coordinates (generator weights for finite games)
        return cert.gamma

    def _record(self, lam, expert, outcome):
        gap = math.nan
        if self.verify:
            gap = reverify(self._problem, self.certificate) - self.certificate.worst_value_log
        self.state = self.state.update(lam, expert)
        return StepRecord(self.t, self._gamma, outcome, lam, expert, self.state.last_log_f,
                          self._cap, self.certificate.exact, gap)

    def worst_outcome(self):
        """Outcome maximizing the current step's potential (after predict)."""
        return None if self.certificate is None else self.certificate.worst_outcome


class DfaFixed(DefensiveForecaster):
    """Single learning rate; eta = sqrt(2 ln N / T) when a horizon is given."""

    name = "dfa_fixed"
    mode = FIXED

    def __init__(self, game, eta=None, horizon=None, **kw):
        super().__init__(game, **kw)
        if eta is None and horizon is None:
            raise ValueError("dfa_fixed needs either eta or a known horizon T")
        self.eta = eta
        self.horizon = horizon

    def _grid(self, n):
        if self.eta is None:
            self.eta = math.sqrt(2 * math.log(n) / self.horizon)
        return fixed_grid(self.eta)


class DfaMixture(DefensiveForecaster):
    """Mixture over the discretized log-scale learning-rate measure."""

    name = "dfa_mixture"
    mode = MIXTURE

    def __init__(self, game, eta_min=1e-4, K=64, **kw):
        super().__init__(game, **kw)
        self.eta_min = eta_min
        self.K = K

    def _grid(self, n):
        return theorem2_grid(self.eta_min, self.K)


class FakeDfa(DefensiveForecaster):
    """Time-varying grid eta_i = i / sqrt(t) with capacity C_t instead of f_{t-1}."""

    name = "fake_dfa"
    mode = THEOREM3

    def __init__(self, game, i_max=None, **kw):
        super().__init__(game, **kw)
        self.i_max = i_max

    def _grid(self, n):
        if self.i_max is None:
            self.i_max = default_i_max(effective_n(self.weights))
        return theorem3_grid(1, self.i_max)

    def capacity_log(self):
        return self.state.log_capacity()


VARIANTS = {
    "dfa_fixed": DfaFixed,
    "dfa_mixture": DfaMixture,
    "fake_dfa": FakeDfa,
    "hedge": Hedge,
    "hedge_anytime": HedgeAnytime,
}


def solve_options(cfg):
    cfg = dict(cfg or {})
    return SolveOptions(**cfg)


def make_learner(cfg, game, verify=False):
    """Build a learner from a config mapping (see the run-config schema)."""
    variant = cfg["variant"]
    weights = cfg.get("weights")
    weights = None if weights is None else np.asarray(weights, dtype=np.float64)
    if variant == "hedge":
        return Hedge(game, cfg["eta"], weights=weights)
    if variant == "hedge_anytime":
        return HedgeAnytime(game, weights=weights)
    kw = dict(weights=weights, solver=solve_options(cfg.get("solver")), verify=verify)
    if variant == "dfa_fixed":
        return DfaFixed(game, eta=cfg.get("eta"), horizon=cfg.get("horizon"), **kw)
    if variant == "dfa_mixture":
        return DfaMixture(game, eta_min=cfg.get("eta_min", 1e-4), K=cfg.get("K", 64), **kw)
    if variant == "fake_dfa":
        return FakeDfa(game, i_max=cfg.get("i_max"), **kw)
    raise ValueError(f"unknown learner variant {variant!r}")
