"""Games, the repeated-play protocol and epsilon-quantile statistics.

Two kinds of game are supported:

* DTOL with N actions: decisions are points of the simplex, outcomes are loss
  vectors in [0,1]^N and the loss is the scalar product.
* A finite-outcome convex game given by generator loss vectors over a finite
  outcome set. Decisions are weights over generators; an expert advising in
  such a game announces a generator-weight vector as well.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-12


@dataclass(frozen=True)
class GameSpec:
    kind: str
    n_actions: int = 0
    outcomes: tuple = ()
    generators: np.ndarray = None

    @classmethod
    def dtol(cls, n):
        if int(n) != n or n < 1:
            raise ValueError(f"DTOL needs N >= 1, got {n!r}")
        return cls(kind="dtol", n_actions=int(n))

    @classmethod
    def finite_convex(cls, outcomes, generators):
        outcomes = tuple(outcomes)
        g = np.array(generators, dtype=np.float64, ndmin=2)
        if len(outcomes) < 2:
            raise ValueError("a finite game needs at least two outcomes")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("outcome symbols must be distinct")
        if g.shape[0] < 1 or g.shape[1] != len(outcomes):
            raise ValueError(f"generators must have shape (G, {len(outcomes)}), got {g.shape}")
        if not np.all((g >= 0) & (g <= 1)):
            raise ValueError("generator losses must lie in [0, 1]")
        g.flags.writeable = False
        return cls(kind="finite", outcomes=outcomes, generators=g)

    @property
    def is_dtol(self):
        return self.kind == "dtol"

    @property
    def decision_dim(self):
        return self.n_actions if self.is_dtol else self.generators.shape[0]

    def outcome_index(self, symbol):
        try:
            return self.outcomes.index(symbol)
        except ValueError:
            raise KeyError(f"unknown outcome symbol {symbol!r}") from None

    def loss(self, gamma, omega):
        """Loss of decision ``gamma`` at outcome ``omega``."""
        if self.is_dtol:
            return dtol_loss(gamma, omega)
        j = self.outcome_index(omega)
        return float(np.dot(gamma, self.generators[:, j]))


def check_decision(gamma, dim=None):
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or (dim is not None and gamma.shape[0] != dim):
        raise ValueError(f"decision has shape {gamma.shape}, expected ({dim},)")
    if np.any(gamma < 0) or abs(gamma.sum() - 1.0) > SUM_TOL:
        raise ValueError("decision must be a probability vector")
    return gamma


def check_outcome(omega, n):
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (n,):
        raise ValueError(f"outcome has shape {omega.shape}, expected ({n},)")
    if np.any(omega < 0) or np.any(omega > 1) or not np.all(np.isfinite(omega)):
        raise ValueError("outcome coordinates must lie in [0, 1]")
    return omega


def check_weights(p, n=None):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or (n is not None and p.shape[0] != n):
        raise ValueError(f"expert weights have shape {p.shape}, expected ({n},)")
    if np.any(p <= 0):
        raise ValueError("expert weights must be positive")
    if p.sum() > 1.0 + SUM_TOL:
        raise ValueError(f"expert weights sum to {p.sum()!r} > 1")
    return p


def uniform_weights(n):
    return np.full(n, 1.0 / n)


def dtol_loss(gamma, omega):
    gamma = np.asarray(gamma, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if gamma.shape != omega.shape:
        raise ValueError(f"dimension mismatch: {gamma.shape} vs {omega.shape}")
    return float(gamma @ omega)


def reduce_pea_outcome(expert_predictions, omega, game):
    """Loss vector of the experts at outcome symbol ``omega``.

    This is the image of a finite-game round in DTOL: coordinate n is the loss
    of expert n's generator mixture.
    """
    if game.is_dtol:
        raise ValueError("reduce_pea_outcome needs a finite convex game")
    preds = np.array(expert_predictions, dtype=np.float64, ndmin=2)
    if preds.shape[1] != game.generators.shape[0]:
        raise ValueError("expert predictions must be weights over the game's generators")
    j = game.outcome_index(omega)
    return preds @ game.generators[:, j]


@dataclass
class StepLog:
    decision: np.ndarray
    outcome: object
    learner_loss: float
    expert_losses: np.ndarray


@dataclass
class ProtocolState:
    """Cumulative losses of one run.

    ``history=None`` keeps every step, an integer keeps a ring buffer of that
    many steps (0 keeps nothing).
    """

    n_experts: int
    weights: np.ndarray = None
    T: int = 0
    L: float = 0.0
    Ln: np.ndarray = None
    history: int = None
    trace: deque = field(default=None, repr=False)

    def __post_init__(self):
        if self.weights is None:
            self.weights = uniform_weights(self.n_experts)
        self.weights = check_weights(self.weights, self.n_experts)
        if self.Ln is None:
            self.Ln = np.zeros(self.n_experts)
        if self.trace is None:
            self.trace = deque(maxlen=self.history)

    def copy(self):
        out = ProtocolState(self.n_experts, self.weights.copy(), self.T, self.L, self.Ln.copy(),
                            self.history)
        out.trace.extend(self.trace)
        return out

    def advance(self, gamma, omega, game=None, expert_predictions=None):
        """Play one round in place and return the step's (learner, expert) losses.

        For DTOL ``omega`` is the loss vector; for a finite game it is an
        outcome symbol and ``expert_predictions`` are the experts' generator
        weights.
        """
        if game is None or game.is_dtol:
            omega = np.asarray(omega, dtype=np.float64)
            lam = dtol_loss(gamma, omega)
            expert = omega
        else:
            lam = game.loss(gamma, omega)
            expert = reduce_pea_outcome(expert_predictions, omega, game)
        if not (-1e-12 <= lam <= 1 + 1e-12) or np.any(expert < 0) or np.any(expert > 1):
            raise ValueError("step losses must lie in [0, 1]")
        self.T += 1
        self.L += lam
        self.Ln = self.Ln + expert
        if self.history != 0:
            self.trace.append(StepLog(np.array(gamma, dtype=np.float64), omega, lam, np.array(expert)))
        return lam, expert


def quantile_losses(Ln, p, eps):
    """quantile_loss for an array of eps values from a single sort."""
    Ln = np.asarray(Ln, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    total = p.sum()
    if np.any(~(eps > 0)) or np.any(eps > total * (1 + SUM_TOL)):
        raise ValueError(f"eps must lie in (0, {total}]")
    order = np.argsort(Ln, kind="stable")
    covered = np.cumsum(p[order])
    idx = np.minimum(np.searchsorted(covered, eps * (1 - SUM_TOL), side="left"), len(order) - 1)
    return Ln[order[idx]]


def quantile_loss(Ln, p, eps):
    """Smallest v such that the experts with loss <= v carry weight >= eps."""
    Ln = np.asarray(Ln, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    total = p.sum()
    if not eps > 0 or eps > total * (1 + SUM_TOL):
        raise ValueError(f"eps must lie in (0, {total}], got {eps!r}")
    order = np.argsort(Ln, kind="stable")
    covered = np.cumsum(p[order])
    idx = int(np.searchsorted(covered, eps * (1 - SUM_TOL), side="left"))
    idx = min(idx, len(order) - 1)
    return float(Ln[order[idx]])


@dataclass(frozen=True)
class QuantileQuery:
    eps: float
    loss: float
    regret: float


def quantile_regret(state, eps):
    loss = quantile_loss(state.Ln, state.weights, eps)
    return QuantileQuery(eps, loss, state.L - loss)


def default_eps_grid(n, total_weight=1.0):
    grid = sorted({1.0 / n, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0})
    return [e for e in grid if 0 < e <= total_weight * (1 + SUM_TOL)]
