"""Min-max decision solver for the defensive forecasting step.

Given the potential of the current step, find a decision gamma with

    max_omega log f(gamma, omega) <= log C + log(1 + tol).

log f is convex in omega, so for DTOL the maximum over the cube is attained at a
vertex; for a finite game the outcome set is enumerated. log f is also convex
in gamma (log-sum-exp of affine forms), so the outer problem is a convex
minimization over the simplex.

The first candidate tried is the closed-form decision that cancels the chord
bound exp(eta x) <= cosh(eta) + x sinh(eta) on x in [-1, 1]:

    gamma'_n  proportional to  sum_k sinh(eta_k) * coef_{n,k}

which certifies f <= sum coef * cosh(eta) <= C because cosh(eta) <= exp(eta^2/2).
In a finite game the experts' generator mixtures are blended with gamma'. If that
candidate does not certify (rounding, or ``analytic_start=False``), entropic
mirror descent with Polyak steps toward the level log C runs from the uniform
decision, checking both the iterate and the running average.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

EXACT = "exact"
SAMPLED = "sampled"


class SolverError(RuntimeError):
    pass


class Infeasible(SolverError):
    """No certified decision was found; carries the best attempt."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-9
    max_iterations: int = 10_000
    oracle: str = EXACT
    samples: int = 64
    exact_cap: int = 16
    seed: int = 0
    analytic_start: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.exact_cap < 1:
            raise ValueError("exact_cap must be >= 1")
        if self.oracle not in (EXACT, SAMPLED):
            raise ValueError(f"unknown oracle {self.oracle!r}")


@dataclass
class Certificate:
    gamma: np.ndarray
    worst_value_log: float
    worst_outcome: object
    exact: bool
    iterations: int = 0
    method: str = ""


@dataclass
class StepProblem:
    """Everything the solver needs for one protocol step.

    ``coef[n, k]`` is the log prefactor of expert n at node k with the one-step
    -eta_k^2/2 included. DTOL problems set ``n_actions``; finite games set
    ``learner_table`` (|Omega| x d, loss of each decision coordinate) and
    ``expert_table`` (|Omega| x N). ``expert_predictions`` (N x d) expresses
    the experts in decision coordinates when that is possible.
    """

    coef: np.ndarray
    eta: np.ndarray
    n_actions: int = None
    learner_table: np.ndarray = None
    expert_table: np.ndarray = None
    expert_predictions: np.ndarray = None
    outcomes: tuple = None

    @classmethod
    def from_state(cls, state, game, expert_predictions=None):
        coef = state.log_coef()
        eta = np.asarray(state.step_eta(), dtype=np.float64)
        if game.is_dtol:
            if game.n_actions != state.n:
                raise ValueError("potential and game disagree on the number of experts")
            return cls(coef, eta, n_actions=game.n_actions)
        preds = np.array(expert_predictions, dtype=np.float64, ndmin=2)
        if preds.shape != (state.n, game.decision_dim):
            raise ValueError("need one generator-weight prediction per expert")
        gens = game.generators
        return cls(coef, eta, learner_table=np.ascontiguousarray(gens.T),
                   expert_table=np.ascontiguousarray((preds @ gens).T),
                   expert_predictions=preds, outcomes=game.outcomes)

    @property
    def is_dtol(self):
        return self.learner_table is None

    @property
    def n_experts(self):
        return self.coef.shape[0]

    @property
    def dim(self):
        return self.n_actions if self.is_dtol else self.learner_table.shape[1]

    def evaluate_rows(self, gamma, omegas):
        """log f and its gradient in gamma at explicit DTOL outcome rows."""
        omegas = np.asarray(omegas, dtype=np.float64)
        logf, etabar = kernels.rows_logf(omegas @ gamma, omegas, self.coef, self.eta)
        return logf, etabar[:, None] * omegas

    def evaluate_all(self, gamma):
        """log f and eta-bar at every extreme outcome (vertices or outcome symbols)."""
        if self.is_dtol:
            return kernels.vertex_logf(self.coef, self.eta, gamma)
        return kernels.rows_logf(self.learner_table @ gamma, self.expert_table, self.coef, self.eta)


def best_response(mu, game=None, tie_tol=1e-12):
    """Indices of the face of optimal decisions for mean outcome ``mu``.

    For DTOL ``mu`` is the mean loss vector; for a finite game it is a
    distribution over outcomes and the returned indices are generators.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if game is not None and not game.is_dtol:
        if mu.shape != (len(game.outcomes),) or np.any(mu < 0) or abs(mu.sum() - 1) > 1e-9:
            raise ValueError("mu must be a distribution over the outcomes")
        expected = game.generators @ mu
    else:
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mean outcome must lie in [0, 1]^N")
        expected = mu
    return np.flatnonzero(expected <= expected.min() + tie_tol)


def _exact(problem, opts):
    if not problem.is_dtol:
        return True
    if opts.oracle == EXACT:
        if problem.n_actions > opts.exact_cap:
            raise ValueError(f"exact vertex oracle limited to N <= {opts.exact_cap}, "
                             f"got N = {problem.n_actions}")
        return True
    return False


def _sampled_worst(problem, gamma, opts):
    """Best of M random vertices followed by single-bit-flip hill climbing."""
    n = problem.n_actions
    rng = np.random.default_rng(opts.seed)
    cand = rng.integers(0, 2, size=(opts.samples, n)).astype(np.float64)
    cand = np.vstack([np.zeros(n), np.ones(n), cand])
    vals, _ = problem.evaluate_rows(gamma, cand)
    best = cand[int(np.argmax(vals))].copy()
    best_val = float(vals.max())
    idx = np.arange(n)
    for _ in range(4 * n):
        flips = np.repeat(best[None, :], n, axis=0)
        flips[idx, idx] = 1.0 - flips[idx, idx]
        fv, _ = problem.evaluate_rows(gamma, flips)
        j = int(np.argmax(fv))
        if fv[j] <= best_val:
            break
        best, best_val = flips[j].copy(), float(fv[j])
    return best, best_val


def _outcome_of(problem, index):
    if problem.is_dtol:
        return ((index >> np.arange(problem.n_actions)) & 1).astype(np.float64)
    return problem.outcomes[index] if problem.outcomes is not None else index


def worst_outcome(problem, gamma, opts=SolveOptions()):
    """Outcome maximizing log f(gamma, .) and the achieved value.

    Returns (outcome, log value, exact) where ``exact`` says whether the whole
    extreme-outcome set was enumerated.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if _exact(problem, opts):
        logf, _ = problem.evaluate_all(gamma)
        i = int(np.argmax(logf))
        return _outcome_of(problem, i), float(logf[i]), True
    omega, val = _sampled_worst(problem, gamma, opts)
    return omega, val, False


def _max_and_grad(problem, gamma, opts):
    if _exact(problem, opts):
        logf, etabar = problem.evaluate_all(gamma)
        i = int(np.argmax(logf))
        if problem.is_dtol:
            row = ((i >> np.arange(problem.n_actions)) & 1).astype(np.float64)
        else:
            row = problem.learner_table[i]
        return float(logf[i]), etabar[i] * row, _outcome_of(problem, i), True
    omega, val = _sampled_worst(problem, gamma, opts)
    _, grad = problem.evaluate_rows(gamma, omega[None, :])
    return val, grad[0], omega, False


def analytic_decision(problem):
    """Closed-form chord-cancelling decision (see module docstring)."""
    eta = problem.eta
    with np.errstate(divide="ignore"):
        log_sinh = np.where(eta > 0, eta + np.log1p(-np.exp(-2.0 * eta)) - np.log(2.0), -np.inf)
    lw = np.logaddexp.reduce(problem.coef + log_sinh[None, :], axis=1)
    if not np.isfinite(lw).any():
        weights = np.full(problem.n_experts, 1.0 / problem.n_experts)
    else:
        weights = np.exp(lw - np.logaddexp.reduce(lw))
    if problem.is_dtol:
        return weights
    if problem.expert_predictions is None:
        return None
    gamma = weights @ problem.expert_predictions
    return gamma / gamma.sum()


def solve(problem, C_log, opts=SolveOptions()):
    """Find gamma with certified max_omega log f(gamma, omega) <= C_log + log(1+tol)."""
    if not np.isfinite(C_log):
        raise Infeasible(f"capacity log C = {C_log} admits no decision")
    target = C_log + np.log1p(opts.tol)
    d = problem.dim
    best = None

    def consider(gamma, it, method):
        nonlocal best
        val, grad, omega, exact = _max_and_grad(problem, gamma, opts)
        if best is None or val < best.worst_value_log:
            best = Certificate(gamma.copy(), val, omega, exact, it, method)
        return val, grad

    start = analytic_decision(problem) if opts.analytic_start else None
    if start is not None:
        consider(start, 0, "analytic")
        if best.worst_value_log <= target:
            return best

    gamma = np.full(d, 1.0 / d)
    avg = gamma.copy()
    for it in range(1, opts.max_iterations + 1):
        val, grad = consider(gamma, it, "mirror")
        if best.worst_value_log <= target:
            return best
        if it > 1:
            consider(avg, it, "mirror-avg")
            if best.worst_value_log <= target:
                return best
        gnorm = float(np.max(np.abs(grad - grad.mean())))
        if gnorm == 0.0:
            break
        # Polyak step toward the known feasible level log C
        step = max(val - C_log, 1e-12) / gnorm**2
        logits = np.log(np.maximum(gamma, 1e-300)) - step * grad
        gamma = np.exp(logits - logits.max())
        gamma /= gamma.sum()
        avg += (gamma - avg) / (it + 1)
    raise Infeasible(
        f"no certified decision after {opts.max_iterations} iterations "
        f"(best log f = {best.worst_value_log:.3e}, log C = {C_log:.3e})", best)


def reverify(problem, cert):
    """Re-evaluate a certificate with the direct per-term kernel.

    Returns the maximum of log f over the oracle's outcome set (all vertices or
    all finite outcomes) computed without the subset-sum shortcut.
    """
    if problem.is_dtol:
        if cert.exact:
            rows = kernels.vertex_bits(problem.n_actions)
        else:
            rows = np.asarray(cert.worst_outcome, dtype=np.float64)[None, :]
        logf, _ = problem.evaluate_rows(cert.gamma, rows)
    else:
        logf, _ = kernels.rows_logf(problem.learner_table @ cert.gamma, problem.expert_table,
                                    problem.coef, problem.eta)
    return float(np.max(logf))
