"""Pure-numpy versions of the potential evaluation kernels.

Both kernels evaluate

    log f(omega) = log sum_{n,k} exp(coef[n, k] + eta[k] * (learner_loss - expert_loss[n]))

for a batch of outcomes and also return the posterior mean of eta under the
summands, which is the scalar that multiplies the learner-loss gradient.
"""

import numpy as np

_BITS_CACHE = {}


def vertex_bits(n):
    """Rows of the 0/1 cube in bit order: row v has omega_j = (v >> j) & 1."""
    bits = _BITS_CACHE.get(n)
    if bits is None:
        v = np.arange(1 << n, dtype=np.int64)
        bits = ((v[:, None] >> np.arange(n)) & 1).astype(np.float64)
        bits.flags.writeable = False
        _BITS_CACHE[n] = bits
    return bits


def _reduce(log_terms, eta):
    m = log_terms.max(axis=1, keepdims=True)
    w = np.exp(log_terms - m)
    total = w.sum(axis=1)
    logf = m[:, 0] + np.log(total)
    etabar = (w @ eta) / total
    return logf, etabar


def vertex_logf(coef, eta, gamma):
    """Evaluate the DTOL potential at every vertex of [0,1]^N.

    Uses the per-node subset sums S_k(v) = sum_{n in v} c_nk so the cost is
    O(2^N K) instead of O(2^N N K).
    """
    coef = np.asarray(coef, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    n = coef.shape[0]
    bits = vertex_bits(n)
    top = coef.max(axis=0)
    scaled = np.exp(coef - top)
    inside = bits @ scaled
    outside = (1.0 - bits) @ scaled
    s = bits @ gamma
    log_terms = (s[:, None] * eta + top) + np.log(outside + np.exp(-eta) * inside)
    return _reduce(log_terms, eta)


def rows_logf(learner_loss, expert_loss, coef, eta):
    """Evaluate the potential directly at arbitrary outcome rows."""
    learner_loss = np.asarray(learner_loss, dtype=np.float64)
    expert_loss = np.asarray(expert_loss, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    diff = learner_loss[:, None] - expert_loss  # (V, N)
    x = coef[None, :, :] + diff[:, :, None] * eta[None, None, :]
    v = x.shape[0]
    x = x.reshape(v, -1)
    m = x.max(axis=1, keepdims=True)
    w = np.exp(x - m)
    total = w.sum(axis=1)
    logf = m[:, 0] + np.log(total)
    etas = np.broadcast_to(eta, coef.shape).reshape(-1)
    etabar = (w @ etas) / total
    return logf, etabar
