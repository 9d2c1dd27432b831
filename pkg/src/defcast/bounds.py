"""Closed-form regret bounds and empirical-vs-theoretical checks.

The bounds on the regret L_T - L_T^eps (or L_T - min_n L_T^n):

* ``bound_thm1``   sqrt(2 T ln N), known horizon.
* ``bound_eq6``    2 sqrt(T ln(1/eps)) + 7 sqrt(T), time-varying-grid strategy.
* ``bound_eq9``    sqrt(2 T ln N) + sqrt(ln N / 8), best uniform-in-T bound.
* ``bound_eq10``   NormalHedge's quantile bound with free parameter delta.
* ``bound_kv``     (1/c) sqrt(T) ln(1/eps) + c sqrt(T), weighted average.
* ``bound_aa``     c L^eps + (c/eta) ln(1/eps), a bound on L_T itself.
* ``bound_remark2`` 2 sqrt(T KL(u||p)) + 7 sqrt(T), regret to the u-mixture.

``eq4_reference`` and ``eq1_reference`` contain unspecified O-constants and are
for plotting only; nothing asserts against them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

REFERENCE_ONLY = frozenset({"eq4", "eq1"})


def _check_T(T):
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T!r}")


def _check_eps(eps):
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")


def bound_thm1(T, N):
    _check_T(T)
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.sqrt(2 * T * math.log(N))


def bound_eq6(T, eps):
    _check_T(T)
    _check_eps(eps)
    return 2 * math.sqrt(T * math.log(1 / eps)) + 7 * math.sqrt(T)


def bound_eq9(T, N):
    _check_T(T)
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.sqrt(2 * T * math.log(N)) + math.sqrt(math.log(N) / 8)


def bound_eq10(T, N, eps, delta):
    _check_T(T)
    _check_eps(eps)
    if not 0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta!r}")
    if N < 1:
        raise ValueError("N must be >= 1")
    lnN = math.log(N)
    inner = 3 * (1 + 50 * delta) * T + (16 * lnN**2 / delta) * (10.2 / delta**2 + lnN)
    return math.sqrt(1 + math.log(1 / eps)) * math.sqrt(inner)


def default_delta_grid(count=100, lo=1e-3, hi=0.5):
    return np.geomspace(lo, hi, count)


def best_eq10(T, N, eps, delta_grid=None):
    """min over the delta grid of bound_eq10; returns (value, delta)."""
    grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, dtype=np.float64)
    vals = [bound_eq10(T, N, eps, float(d)) for d in grid]
    j = int(np.argmin(vals))
    return vals[j], float(grid[j])


def bound_kv(T, eps, c=1.0):
    _check_T(T)
    _check_eps(eps)
    if not c > 0:
        raise ValueError("c must be positive")
    return math.sqrt(T) * math.log(1 / eps) / c + c * math.sqrt(T)


def bound_aa(L_eps, eps, c, eta):
    """Upper bound on the learner's loss L_T (not on the regret)."""
    _check_eps(eps)
    if c < 1 or not eta > 0:
        raise ValueError("need c >= 1 and eta > 0")
    return c * L_eps + (c / eta) * math.log(1 / eps)


def eq4_reference(T, eps):
    """Explicit part of the mixture strategy's bound, without its O(ln 1/eps) tail."""
    _check_eps(eps)
    if T < 16:
        raise ValueError("defined for T >= 16 only (ln ln T must be positive)")
    return (1 + 1 / math.log(T)) * math.sqrt(2 * T * math.log(1 / eps) + 5 * T * math.log(math.log(T)))


def eq1_reference(T, eps, N):
    """sqrt(T ln 1/eps) + ln^2 N with the unknown O-constant set to 1."""
    _check_T(T)
    _check_eps(eps)
    return math.sqrt(T * math.log(1 / eps)) + math.log(N) ** 2


def kl_divergence(u, p):
    u = np.asarray(u, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    m = u > 0
    return float(np.sum(u[m] * np.log(u[m] / p[m])))


def bound_remark2(T, u, p):
    """Regret to sum_n u_n L_T^n for the time-varying-grid strategy."""
    _check_T(T)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or abs(u.sum() - 1) > 1e-12:
        raise ValueError("u must be a probability vector")
    kl = max(kl_divergence(u, p), 0.0)
    return 2 * math.sqrt(T * kl) + 7 * math.sqrt(T)


@dataclass
class BoundParams:
    T: int = 1
    N: int = 2
    eps: float = 1.0
    delta: float = 0.5
    c_kv: float = 1.0
    c_aa: float = 1.0
    eta_aa: float = 1.0
    L_eps: float = 0.0
    u: np.ndarray = None
    p: np.ndarray = None


_SELECTORS = {
    "thm1": lambda b: bound_thm1(b.T, b.N),
    "eq6": lambda b: bound_eq6(b.T, b.eps),
    "eq9": lambda b: bound_eq9(b.T, b.N),
    "eq10": lambda b: bound_eq10(b.T, b.N, b.eps, b.delta),
    "kv": lambda b: bound_kv(b.T, b.eps, b.c_kv),
    "aa": lambda b: bound_aa(b.L_eps, b.eps, b.c_aa, b.eta_aa),
    "eq4": lambda b: eq4_reference(b.T, b.eps),
    "eq1": lambda b: eq1_reference(b.T, b.eps, b.N),
    "remark2": lambda b: bound_remark2(b.T, b.u, b.p),
}


def reference_bounds(params, which):
    try:
        fn = _SELECTORS[which]
    except KeyError:
        raise ValueError(f"unknown bound {which!r}; choose from {sorted(_SELECTORS)}") from None
    return fn(params)


def eq3_discrete_value(grid, T, regret):
    """sum_j w_j exp(regret * eta_j - T eta_j^2 / 2) for the discretized mixture."""
    x = regret * grid.eta - T * grid.eta**2 / 2 + np.log(grid.weight)
    m = float(np.max(x))
    return math.exp(m) * float(np.sum(np.exp(x - m)))


def eq3_discrete_log_values(grid, T, regret):
    """log eq3_discrete_value over arrays: T has shape (m,), regret (m, e)."""
    T = np.asarray(T, dtype=np.float64)
    regret = np.asarray(regret, dtype=np.float64)
    x = (regret[..., None] * grid.eta - (T[:, None, None] * grid.eta**2) / 2 + np.log(grid.weight))
    return np.logaddexp.reduce(x, axis=-1)


def check_eq3_discrete(grid, T, regret, eps, slack=1.0):
    """The mixture strategy's guarantee at one (T, eps): value <= slack / eps."""
    _check_eps(eps)
    value = eq3_discrete_value(grid, T, regret)
    return value, value <= slack / eps


def crossover(N, eps, delta_grid=None, T_max=10**15):
    """Largest T with bound_eq6(T, eps) <= min_delta bound_eq10(T, N, eps, delta).

    Both sides scale like sqrt(T) times a factor, and the NormalHedge factor
    decreases with T, so the set of such T is an initial segment.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    _check_eps(eps)

    def ok(T):
        return bound_eq6(T, eps) <= best_eq10(T, N, eps, delta_grid)[0]

    if not ok(1):
        raise ValueError(f"no crossover: eq6 exceeds eq10 already at T = 1 (N={N}, eps={eps})")
    if ok(T_max):
        raise ValueError(f"no crossover below T = {T_max}")
    lo, hi = 1, T_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class BoundRow:
    eps: float
    values: dict
    empirical: float = None
    passed: dict = field(default_factory=dict)


@dataclass
class BoundReport:
    T: int
    N: int
    rows: list
    slack: float = 1.0

    def format(self):
        lines = [f"T = {self.T}  N = {self.N}"]
        for row in self.rows:
            parts = [f"eps = {row.eps:g}"]
            for name, val in row.values.items():
                tag = " (reference only)" if name in REFERENCE_ONLY else ""
                if val is None:
                    parts.append(f"{name} = n/a")
                elif name.endswith("_delta"):
                    parts.append(f"{name} = {val:.4g}")
                else:
                    parts.append(f"{name} = {val:.2f}{tag}")
            if row.empirical is not None:
                parts.append(f"empirical = {row.empirical:.2f}")
            lines.append("  ".join(parts))
        return "\n".join(lines)


def bound_report(T, N, eps_list, delta_grid=None, c_kv=1.0):
    rows = []
    for eps in eps_list:
        values = {
            "thm1": bound_thm1(T, N),
            "eq9": bound_eq9(T, N),
            "eq6": bound_eq6(T, eps),
        }
        val, delta = best_eq10(T, N, eps, delta_grid)
        values["eq10"] = val
        values["eq10_delta"] = delta
        values["kv"] = bound_kv(T, eps, c_kv)
        values["eq4"] = eq4_reference(T, eps) if T >= 16 else None
        values["eq1"] = eq1_reference(T, eps, N)
        rows.append(BoundRow(eps, values))
    return BoundReport(T, N, rows)
