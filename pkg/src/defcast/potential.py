"""Hoeffding supermartingale potentials, kept in log space.

A potential state stores, for every expert n, the regret accumulator
R^n = L_{t-1} - L^n_{t-1} together with a learning-rate grid. The prefactor
of node (n, k) before step t is

    p_n * w_k * exp(eta_k * R^n - acc_k)

where ``acc_k`` is the accumulated variance term: (t-1) * eta_k^2 / 2 for a
fixed grid, and (i^2 / (2 sqrt(t))) * sum_{s<t} 1/sqrt(s) for the time-varying
grid eta_i = i / sqrt(t). The potential at step t is the prefactor-weighted sum
of the one-step Hoeffding factors exp(eta (lambda - lambda_n) - eta^2 / 2).
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .game import check_weights, uniform_weights

FIXED = "fixed"
MIXTURE = "mixture"
THEOREM3 = "theorem3"
MODES = (FIXED, MIXTURE, THEOREM3)

# 1/c = sum_{i>=1} 1/i^2
C_ZETA = 6.0 / math.pi**2
ETA_MAX = math.exp(-1.0)


def hoeffding_exponent(eta, learner_loss, expert_loss):
    return eta * (learner_loss - expert_loss) - eta * eta / 2.0


@dataclass(frozen=True)
class EtaNode:
    eta: float
    weight: float


@dataclass(frozen=True)
class EtaGrid:
    """Learning-rate nodes with sub-probability weights.

    ``index`` holds the integer i of the time-varying grid (eta = i/sqrt(T));
    it is None for fixed grids.
    """

    eta: np.ndarray
    weight: np.ndarray
    index: np.ndarray = None

    def __len__(self):
        return len(self.weight)

    @property
    def mass(self):
        return float(np.sum(self.weight))

    def nodes(self):
        return [EtaNode(float(e), float(w)) for e, w in zip(self.eta, self.weight)]


def fixed_grid(eta):
    if not eta >= 0:
        raise ValueError(f"eta must be nonnegative, got {eta!r}")
    return EtaGrid(np.array([float(eta)]), np.array([1.0]))


def theorem2_grid(eta_min=1e-4, K=64):
    """Discretize dEta / (eta ln^2(1/eta)) on [eta_min, 1/e] into K geometric cells.

    Each cell [a, b] carries its exact mass 1/ln(1/b) - 1/ln(1/a) and is
    represented by its geometric midpoint.
    """
    if not 0 < eta_min < ETA_MAX:
        raise ValueError(f"eta_min must lie in (0, 1/e), got {eta_min!r}")
    if K < 1:
        raise ValueError("K must be positive")
    log_edges = np.linspace(math.log(eta_min), -1.0, K + 1)
    log_edges[-1] = -1.0
    antider = -1.0 / log_edges
    weight = np.diff(antider)
    eta = np.exp(0.5 * (log_edges[:-1] + log_edges[1:]))
    return EtaGrid(eta, weight)


def theorem3_grid(T, i_max):
    """Nodes (i/sqrt(T), c/i^2) for i = 1..i_max, left unrenormalized."""
    if T < 1 or i_max < 1:
        raise ValueError("T and i_max must be positive")
    i = np.arange(1, i_max + 1, dtype=np.float64)
    return EtaGrid(i / math.sqrt(T), C_ZETA / i**2, index=i)


def default_i_max(n_effective):
    return math.ceil(math.sqrt(math.log(max(n_effective, 3)))) + 1


def effective_n(weights):
    """N used in the default truncation; ceil(1/min p) for non-uniform weights."""
    return int(math.ceil(1.0 / float(np.min(weights)) - 1e-9))


@dataclass(frozen=True)
class PotentialState:
    mode: str
    grid: EtaGrid
    weights: np.ndarray
    R: np.ndarray
    t: int = 0
    V: float = 0.0
    last_log_f: float = None

    @classmethod
    def fresh(cls, mode, grid, n=None, weights=None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if mode == THEOREM3 and grid.index is None:
            raise ValueError("theorem3 mode needs a grid built by theorem3_grid")
        if weights is None:
            weights = uniform_weights(n)
        weights = check_weights(weights, n)
        n = len(weights)
        st = cls(mode, grid, weights, np.zeros(n))
        return replace(st, last_log_f=st.log_capacity())

    @property
    def n(self):
        return len(self.weights)

    def step_eta(self):
        """Learning rates for the upcoming step t+1."""
        if self.mode == THEOREM3:
            return self.grid.index / math.sqrt(self.t + 1)
        return self.grid.eta

    def log_prefactors(self):
        eta = self.step_eta()
        if self.mode == THEOREM3:
            i = self.grid.index
            acc = i * i * self.V / (2.0 * math.sqrt(self.t + 1))
        else:
            acc = self.t * eta * eta / 2.0
        return (np.log(self.weights)[:, None] + np.log(self.grid.weight)[None, :]
                + np.outer(self.R, eta) - acc[None, :])

    def log_coef(self):
        """Prefactors with the one-step -eta^2/2 folded in, as the kernels expect."""
        eta = self.step_eta()
        return self.log_prefactors() - eta * eta / 2.0

    def log_capacity(self):
        """log of the sum of prefactors (C_T for the time-varying grid)."""
        return float(np.logaddexp.reduce(self.log_prefactors(), axis=None))

    def log_f(self, learner_loss, expert_losses):
        """log f_t at one outcome (scalar) or a batch of outcome rows."""
        ll = np.atleast_1d(np.asarray(learner_loss, dtype=np.float64))
        el = np.asarray(expert_losses, dtype=np.float64)
        if el.ndim == 1:
            el = el[None, :]
        if el.shape != (ll.shape[0], self.n):
            raise ValueError(f"expert losses have shape {el.shape}, expected ({ll.shape[0]}, {self.n})")
        out, _ = kernels.rows_logf(ll, el, self.log_coef(), self.step_eta())
        return float(out[0]) if np.ndim(learner_loss) == 0 else out

    def log_f_dtol(self, gamma, omega):
        omega = np.asarray(omega, dtype=np.float64)
        return self.log_f(float(np.dot(gamma, omega)), omega)

    def update(self, learner_loss, expert_losses):
        """Advance past step t+1 and cache log f_{t+1} at the realized outcome."""
        expert_losses = np.asarray(expert_losses, dtype=np.float64)
        if expert_losses.shape != (self.n,):
            raise ValueError("expert loss vector has the wrong dimension")
        lf = self.log_f(float(learner_loss), expert_losses)
        t = self.t + 1
        return replace(self, R=self.R + (learner_loss - expert_losses), t=t,
                       V=self.V + 1.0 / math.sqrt(t), last_log_f=lf)


def direct_f(state, learner_loss, expert_losses):
    """Linear-domain reference evaluation (overflows for large exponents)."""
    eta = state.step_eta()
    if state.mode == THEOREM3:
        acc = state.grid.index**2 * state.V / (2.0 * math.sqrt(state.t + 1))
    else:
        acc = state.t * eta**2 / 2.0
    total = 0.0
    for n in range(state.n):
        for k in range(len(eta)):
            total += (state.weights[n] * state.grid.weight[k]
                      * math.exp(eta[k] * state.R[n] - acc[k])
                      * math.exp(hoeffding_exponent(eta[k], learner_loss, expert_losses[n])))
    return total
