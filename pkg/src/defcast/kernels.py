"""Backend selection for the hot potential kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is used. Set ``DEFCAST_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py
from ._kernels_py import vertex_bits

BACKEND = "numpy"
_impl = _kernels_py

if os.environ.get("DEFCAST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def vertex_logf(coef, eta, gamma):
    """log f and posterior-mean eta at all 2^N cube vertices (bit order)."""
    return _impl.vertex_logf(coef, eta, gamma)


def rows_logf(learner_loss, expert_loss, coef, eta):
    """log f and posterior-mean eta at explicit outcome rows."""
    return _impl.rows_logf(learner_loss, expert_loss, coef, eta)


def available_backends():
    out = {"numpy": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled
    return out


__all__ = ["BACKEND", "vertex_logf", "rows_logf", "vertex_bits", "available_backends"]
