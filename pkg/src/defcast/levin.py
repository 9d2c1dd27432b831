"""Brute-force verification of the fixed-point existence lemmas on tiny outcome sets.

If E_pi q(pi) <= C for every distribution pi, some pi admits g in q(pi) with
g(omega) <= C for every outcome omega. ``levin_search`` looks for such a pi on
the simplex lattice with a given denominator.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .solver import Infeasible, SolveOptions, StepProblem, solve

MAX_OUTCOMES = 4
MAX_LATTICE = 5_000_000


class LevinNotFound(RuntimeError):
    def __init__(self, message, best_slack):
        super().__init__(message)
        self.best_slack = best_slack


@dataclass
class LevinResult:
    pi: np.ndarray
    g: np.ndarray
    slack: float  # max_omega g(omega) - C


def simplex_lattice(m, resolution):
    """All points of the m-simplex with coordinates in (1/resolution) Z."""
    size = math.comb(resolution + m - 1, m - 1)
    if size > MAX_LATTICE:
        raise ValueError(f"lattice with {size} points is too large")
    if m == 1:
        return np.ones((1, 1))
    pts = []
    for bars in itertools.combinations(range(resolution + m - 1), m - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(resolution + m - 2 - prev)
        pts.append(row)
    return np.asarray(pts, dtype=np.float64) / resolution


def levin_search(q, n_outcomes, resolution, C, tol=1e-2):
    """Grid search for pi with min_{g in q(pi)} max_omega g(omega) <= C + tol.

    ``q`` maps a distribution (array of length n_outcomes) to an array of
    candidate loss functions, one per row. The best lattice point is returned;
    LevinNotFound is raised with the best slack if it exceeds ``tol``.
    """
    if not 2 <= n_outcomes <= MAX_OUTCOMES:
        raise ValueError(f"levin_search supports 2..{MAX_OUTCOMES} outcomes")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    best = None
    for pi in simplex_lattice(n_outcomes, resolution):
        gs = np.array(q(pi), dtype=np.float64, ndmin=2)
        if gs.shape[1] != n_outcomes:
            raise ValueError("q must return loss functions over the outcome set")
        worst = gs.max(axis=1)
        j = int(np.argmin(worst))
        slack = float(worst[j] - C)
        if best is None or slack < best.slack:
            best = LevinResult(pi.copy(), gs[j].copy(), slack)
    if best.slack > tol:
        raise LevinNotFound(f"best slack {best.slack:.3e} exceeds {tol:g} at resolution {resolution}",
                            best.slack)
    return best


def check_expectation(q, n_outcomes, resolution, C, atol=1e-12):
    """Largest violation of min_{g in q(pi)} E_pi g <= C over the lattice."""
    worst = -np.inf
    for pi in simplex_lattice(n_outcomes, resolution):
        gs = np.array(q(pi), dtype=np.float64, ndmin=2)
        worst = max(worst, float((gs @ pi).min() - C))
    return worst


def hoeffding_relation(game, coef, eta, expert_predictions, tie_tol=0.0, opts=None):
    """The Hoeffding potential's best-response relation on a finite game.

    q(pi) is {f(gamma, .) : gamma optimal for pi}, represented by the functions
    of the optimal generators plus, when several generators are within
    ``tie_tol`` of optimal, the face decision minimizing max_omega f. ``coef``
    already includes the one-step -eta^2/2, so the constant of the expectation
    bound is ``sum(exp(coef + eta^2/2))``.
    """
    if game.is_dtol:
        raise ValueError("hoeffding_relation needs a finite convex game")
    coef = np.asarray(coef, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    preds = np.array(expert_predictions, dtype=np.float64, ndmin=2)
    gens = game.generators
    expert_table = np.ascontiguousarray((preds @ gens).T)
    C_log = float(np.log(np.exp(coef + eta**2 / 2).sum()))
    opts = opts or SolveOptions(analytic_start=False, max_iterations=2000)
    face_cache = {}

    def f_at(learner_loss):
        logf, _ = kernels.rows_logf(learner_loss, expert_table, coef, eta)
        return np.exp(logf)

    def face_value(face):
        if face not in face_cache:
            sub = np.ascontiguousarray(gens[list(face)].T)
            problem = StepProblem(coef, eta, learner_table=sub, expert_table=expert_table)
            try:
                gamma = solve(problem, C_log, opts).gamma
            except Infeasible as exc:
                gamma = exc.best.gamma
            face_cache[face] = f_at(sub @ gamma)
        return face_cache[face]

    def q(pi):
        expected = gens @ pi
        face = tuple(int(j) for j in np.flatnonzero(expected <= expected.min() + tie_tol))
        out = [f_at(gens[j]) for j in face]
        if len(face) > 1:
            out.append(face_value(face))
        return np.array(out)

    q.constant = float(np.exp(C_log))
    return q


def random_hoeffding_instance(rng, n_outcomes=2, n_generators=None, n_experts=None, n_nodes=None):
    """A random finite game with a random Hoeffding potential over its experts.

    Returns (game, coef, eta, expert_predictions). The potential is one step of
    a state with random accumulated regrets, so its prefactors are arbitrary.
    """
    from .game import GameSpec

    n_generators = n_generators or int(rng.integers(2, 4))
    n_experts = n_experts or int(rng.integers(2, 5))
    n_nodes = n_nodes or int(rng.integers(1, 4))
    gens = rng.random((n_generators, n_outcomes))
    game = GameSpec.finite_convex(range(n_outcomes), gens)
    preds = rng.dirichlet(np.ones(n_generators), size=n_experts)
    eta = rng.uniform(0.05, 1.0, n_nodes)
    node_w = rng.dirichlet(np.ones(n_nodes))
    p = rng.dirichlet(np.ones(n_experts))
    regret = rng.normal(0.0, 1.0, n_experts)
    t = int(rng.integers(0, 20))
    coef = (np.log(p)[:, None] + np.log(node_w)[None, :] + np.outer(regret, eta)
            - t * eta**2 / 2 - eta**2 / 2)
    return game, coef, eta, preds


def levin_suite(n_outcomes=2, resolution=1000, count=50, seed=0, tol=1e-2):
    """Run levin_search on ``count`` random Hoeffding relations.

    Each entry reports the expectation-precondition violation (should be <= 0)
    and the slack found (or the best slack on failure).
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    out = []
    for _ in range(count):
        game, coef, eta, preds = random_hoeffding_instance(rng, n_outcomes)
        q = hoeffding_relation(game, coef, eta, preds, tie_tol=1.0 / resolution)
        C = q.constant
        pre = check_expectation(q, n_outcomes, min(resolution, 200), C)
        try:
            res = levin_search(q, n_outcomes, resolution, C, tol=tol)
            out.append({"C": C, "precondition": pre, "slack": res.slack, "found": True})
        except LevinNotFound as exc:
            out.append({"C": C, "precondition": pre, "slack": exc.best_slack, "found": False})
    return out
