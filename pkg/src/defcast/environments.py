"""Synthetic adversaries producing loss vectors in [0,1]^N.

Randomness comes from a counter-based Philox stream keyed by
(master seed, run index), so every run owns an independent, reproducible stream
and a sweep gives the same results in any execution order.
"""

import math

import numpy as np

KINDS = ("iid_uniform", "iid_bernoulli", "alternating", "duplicated", "many_good", "adaptive")


def run_stream(seed, run_index=0):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(run_index),))
    return np.random.Generator(np.random.Philox(ss))


class Environment:
    kind = None

    def __init__(self, n, seed=0, run_index=0):
        self.n = n
        self.rng = run_stream(seed, run_index)

    def outcome(self, t, gamma=None, learner=None):
        raise NotImplementedError


class IidUniform(Environment):
    kind = "iid_uniform"

    def outcome(self, t, gamma=None, learner=None):
        return self.rng.random(self.n)


class IidBernoulli(Environment):
    kind = "iid_bernoulli"

    def __init__(self, n, q=None, **kw):
        super().__init__(n, **kw)
        self.q = np.linspace(0.3, 0.7, n) if q is None else np.asarray(q, dtype=np.float64)
        if self.q.shape != (n,) or np.any(self.q < 0) or np.any(self.q > 1):
            raise ValueError("q must hold one probability per expert")

    def outcome(self, t, gamma=None, learner=None):
        return (self.rng.random(self.n) < self.q).astype(np.float64)


class Alternating(Environment):
    """Expert n suffers loss 1 on steps where t + n is even."""

    kind = "alternating"

    def outcome(self, t, gamma=None, learner=None):
        return ((t + np.arange(self.n)) % 2 == 0).astype(np.float64)


class ManyGoodExperts(Environment):
    """A fraction of experts has Bernoulli(1/2 - gap) losses, the rest Bernoulli(1/2)."""

    kind = "many_good"

    def __init__(self, n, fraction=0.5, gap=0.2, **kw):
        super().__init__(n, **kw)
        if not 0 < fraction <= 1 or not 0 <= gap <= 0.5:
            raise ValueError("need fraction in (0, 1] and gap in [0, 1/2]")
        good = max(1, math.ceil(fraction * n))
        self.q = np.full(n, 0.5)
        self.q[:good] = 0.5 - gap

    def outcome(self, t, gamma=None, learner=None):
        return (self.rng.random(self.n) < self.q).astype(np.float64)


class AdaptiveWorstCase(Environment):
    """Plays the vertex that maximizes the learner's own potential.

    Learners without a potential get loss 1 on their heaviest action.
    """

    kind = "adaptive"

    def outcome(self, t, gamma=None, learner=None):
        worst = getattr(learner, "worst_outcome", None)
        omega = worst() if worst is not None else None
        if omega is None:
            omega = np.zeros(self.n)
            omega[int(np.argmax(gamma))] = 1.0
        return np.asarray(omega, dtype=np.float64)


class DuplicatedExperts(Environment):
    """k identical blocks of a base environment's loss vector (block j = copy j)."""

    kind = "duplicated"

    def __init__(self, base, copies):
        if copies < 1:
            raise ValueError("copies must be >= 1")
        self.base = base
        self.copies = copies
        self.n = base.n * copies

    def outcome(self, t, gamma=None, learner=None):
        base_gamma = None if gamma is None else aggregate_copies(gamma, self.copies)
        return np.tile(self.base.outcome(t, base_gamma, None), self.copies)


def aggregate_copies(gamma, copies):
    """Sum a decision over the k blocks of a duplicated expert pool."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return gamma.reshape(copies, -1).sum(axis=0)


def make_environment(cfg, n, seed=0, run_index=0):
    kind = cfg["kind"]
    kw = dict(seed=seed, run_index=run_index)
    if kind == "iid_uniform":
        return IidUniform(n, **kw)
    if kind == "iid_bernoulli":
        return IidBernoulli(n, q=cfg.get("q"), **kw)
    if kind == "alternating":
        return Alternating(n, **kw)
    if kind == "many_good":
        return ManyGoodExperts(n, fraction=cfg.get("fraction", 0.5), gap=cfg.get("gap", 0.2), **kw)
    if kind == "adaptive":
        return AdaptiveWorstCase(n, **kw)
    if kind == "duplicated":
        k = int(cfg["copies"])
        if n % k:
            raise ValueError(f"N = {n} is not a multiple of copies = {k}")
        base_cfg = cfg["base"]
        if base_cfg["kind"] in ("duplicated", "adaptive"):
            raise ValueError("duplicated environments need an oblivious base")
        return DuplicatedExperts(make_environment(base_cfg, n // k, seed, run_index), k)
    raise ValueError(f"unknown environment kind {kind!r}")
