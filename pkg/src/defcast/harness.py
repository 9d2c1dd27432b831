"""Experiment runner, bound checks on traces, and trace persistence."""

import copy
import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds
from .environments import KINDS, make_environment
from .game import GameSpec, ProtocolState, default_eps_grid, quantile_losses
from .learners import DefensiveForecaster, LearnerAborted, make_learner
from .potential import theorem2_grid

SEED_ENV = "DEFCAST_SEED"
REVERIFY_TOL = 1e-12

_solver_schema = {
    "type": "object",
    "properties": {
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iterations": {"type": "integer", "minimum": 1},
        "oracle": {"enum": ["exact", "sampled"]},
        "samples": {"type": "integer", "minimum": 1},
        "exact_cap": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "analytic_start": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_env_schema = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "q": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gap": {"type": "number", "minimum": 0, "maximum": 0.5},
        "copies": {"type": "integer", "minimum": 1},
        "base": {"$ref": "#/$defs/environment"},
    },
    "additionalProperties": False,
    "allOf": [{"if": {"properties": {"kind": {"const": "duplicated"}}},
               "then": {"required": ["copies", "base"]}}],
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "defcast run configuration",
    "type": "object",
    "required": ["game", "T", "learner", "environment"],
    "$defs": {"environment": _env_schema},
    "properties": {
        "game": {
            "type": "object",
            "required": ["kind", "N"],
            "properties": {"kind": {"const": "dtol"}, "N": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "T": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "run_index": {"type": "integer", "minimum": 0},
        "learner": {
            "type": "object",
            "required": ["variant"],
            "properties": {
                "variant": {"enum": ["dfa_fixed", "dfa_mixture", "fake_dfa", "hedge", "hedge_anytime"]},
                "eta": {"type": "number", "minimum": 0},
                "horizon": {"type": "integer", "minimum": 1},
                "eta_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": math.exp(-1)},
                "K": {"type": "integer", "minimum": 1},
                "i_max": {"type": "integer", "minimum": 1},
                "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "solver": _solver_schema,
            },
            "additionalProperties": False,
            "allOf": [
                {"if": {"properties": {"variant": {"const": "dfa_fixed"}}},
                 "then": {"anyOf": [{"required": ["eta"]}, {"required": ["horizon"]}]}},
                {"if": {"properties": {"variant": {"const": "hedge"}}},
                 "then": {"required": ["eta"]}},
            ],
        },
        "environment": {"$ref": "#/$defs/environment"},
        "eps_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                     "minItems": 1},
        "history": {"type": ["integer", "null"], "minimum": 0},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from None
    n = cfg["game"]["N"]
    w = cfg["learner"].get("weights")
    if w is not None and (len(w) != n or sum(w) > 1 + 1e-12):
        raise ConfigError("learner weights must have N entries summing to at most 1")
    env = cfg["environment"]
    if env["kind"] == "duplicated" and n % env["copies"]:
        raise ConfigError("N must be a multiple of environment.copies")
    if env["kind"] == "iid_bernoulli" and "q" in env and len(env["q"]) != n:
        raise ConfigError("environment.q must have N entries")
    return cfg


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate_config(cfg)


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def resolve_seed(cfg, override=None):
    if override is not None:
        return int(override)
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    return int(cfg.get("seed", 0))


@dataclass
class Check:
    name: str
    passed: bool
    worst_margin: float
    detail: str = ""

    def as_dict(self):
        return {"check": self.name, "passed": bool(self.passed),
                "worst_margin": _json_float(self.worst_margin), "detail": self.detail}


@dataclass
class Trace:
    config: dict
    seed: int
    learner: str
    N: int
    eps_grid: list
    tau: float
    t: list = field(default_factory=list)
    step_loss: list = field(default_factory=list)
    cum_loss: list = field(default_factory=list)
    L_eps: list = field(default_factory=list)
    R_eps: list = field(default_factory=list)
    best_loss: list = field(default_factory=list)
    log_f: list = field(default_factory=list)
    log_cap: list = field(default_factory=list)
    cert_exact: list = field(default_factory=list)
    reverify_gap: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    log_f0: float = math.nan
    status: str = "completed"
    abort_reason: str = ""
    violations: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def T(self):
        return len(self.t)

    @property
    def config_hash(self):
        return config_hash(self.config)

    @property
    def passed(self):
        return self.status == "completed" and all(c.passed for c in self.checks)

    def slack_log(self, t):
        return t * math.log1p(self.tau)

    def exit_code(self):
        if self.status == "aborted":
            return 3
        return 0 if all(c.passed for c in self.checks) else 1


def _json_float(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return float(x)


def run(cfg, seed=None, verify=False):
    """Execute one configured run and return its trace (checks included)."""
    cfg = validate_config(copy.deepcopy(cfg))
    seed = resolve_seed(cfg, seed)
    cfg["seed"] = seed
    n, T = cfg["game"]["N"], cfg["T"]
    game = GameSpec.dtol(n)
    learner = make_learner(cfg["learner"], game, verify=verify)
    env = make_environment(cfg["environment"], n, seed=seed, run_index=cfg.get("run_index", 0))
    weights = learner.weights if learner.weights is not None else np.full(n, 1.0 / n)
    eps_grid = cfg.get("eps_grid") or default_eps_grid(n, float(np.sum(weights)))
    tau = learner.solver.tol if isinstance(learner, DefensiveForecaster) else 0.0
    state = ProtocolState(n, np.asarray(weights, dtype=np.float64), history=cfg.get("history", 0))
    trace = Trace(cfg, seed, learner.name, n, list(eps_grid), tau)

    for t in range(1, T + 1):
        try:
            gamma = learner.predict()
        except LearnerAborted as exc:
            trace.status = "aborted"
            trace.abort_reason = str(exc)
            break
        if t == 1 and isinstance(learner, DefensiveForecaster):
            trace.log_f0 = learner.state.last_log_f if learner.mode != "theorem3" else math.nan
        omega = env.outcome(t, gamma, learner)
        if verify:
            _verify_step(trace, t, gamma, omega)
        rec = learner.observe(omega)
        state.advance(gamma, omega)
        trace.t.append(t)
        trace.step_loss.append(rec.learner_loss)
        trace.cum_loss.append(state.L)
        q = quantile_losses(state.Ln, state.weights, eps_grid)
        trace.L_eps.append(q.tolist())
        trace.R_eps.append((state.L - q).tolist())
        trace.best_loss.append(float(state.Ln.min()))
        trace.log_f.append(rec.log_f)
        trace.log_cap.append(rec.log_capacity)
        trace.cert_exact.append(rec.exact)
        trace.reverify_gap.append(rec.reverify_gap)
        trace.decisions.append(np.array(gamma))
    trace.checks = evaluate_checks(trace, learner)
    return trace


def _verify_step(trace, t, gamma, omega):
    if np.any(omega < 0) or np.any(omega > 1) or not np.all(np.isfinite(omega)):
        trace.violations.append(f"step {t}: outcome outside [0,1]^N")
    if np.any(gamma < 0) or abs(float(np.sum(gamma)) - 1) > 1e-12:
        trace.violations.append(f"step {t}: decision off the simplex")


def evaluate_checks(trace, learner=None):
    """Assertions appropriate for the learner that produced the trace."""
    checks = []
    name = trace.learner
    lt = math.log1p(trace.tau)
    T = trace.T
    if T == 0:
        return checks
    t = np.asarray(trace.t, dtype=np.float64)
    R = np.asarray(trace.R_eps, dtype=np.float64)
    eps = np.asarray(trace.eps_grid, dtype=np.float64)
    log_f = np.asarray(trace.log_f, dtype=np.float64)
    log_cap = np.asarray(trace.log_cap, dtype=np.float64)

    if name in ("dfa_fixed", "dfa_mixture"):
        prev = np.concatenate([[trace.log_f0], log_f[:-1]])
        margin = log_f - prev - lt
        checks.append(Check("supermartingale", bool(np.all(margin <= 0)), float(margin.max()),
                            "log f_t - log f_(t-1) - log(1+tau)"))

    if name == "dfa_fixed" and learner is not None and learner.horizon == T:
        uniform = np.allclose(learner.weights, 1.0 / trace.N)
        regret = trace.cum_loss[-1] - trace.best_loss[-1]
        limit = bounds.bound_thm1(T, trace.N) * math.exp(T * lt)
        checks.append(Check("thm1", bool(regret <= limit) and uniform, regret - limit,
                            "final regret to best expert vs sqrt(2 T ln N)(1+tau)^T"))

    if name == "dfa_mixture":
        grid = theorem2_grid(learner.eta_min, learner.K) if learner is not None else theorem2_grid()
        logv = bounds.eq3_discrete_log_values(grid, t, R)
        margin = logv - (np.log(1 / eps)[None, :] + (t * lt)[:, None])
        checks.append(Check("eq3_discrete", bool(np.all(margin <= 0)), float(margin.max()),
                            "log(sum_j w_j e^(R eta_j - t eta_j^2/2)) - log((1+tau)^t / eps)"))

    if name == "fake_dfa":
        cap_margin = log_cap - t * lt
        checks.append(Check("capacity", bool(np.all(cap_margin <= 0)), float(cap_margin.max()),
                            "log C_t - t log(1+tau)"))
        if T > 1:
            alpha = np.sqrt(t[:-1] / t[1:])
            conc = log_cap[1:] - alpha * log_f[:-1] - lt
            checks.append(Check("concavity_step", bool(np.all(conc <= 0)), float(conc.max()),
                                "log C_(t+1) - sqrt(t/(t+1)) log f_t - log(1+tau)"))
        b6 = np.array([[bounds.bound_eq6(ti, e) for e in eps] for ti in t]) if np.all(eps <= 1) else None
        margin = R - b6 * np.exp(t * lt)[:, None]
        checks.append(Check("eq6", bool(np.all(margin <= 0)), float(margin.max()),
                            "R^eps_t - (2 sqrt(t ln 1/eps) + 7 sqrt(t))(1+tau)^t"))

    gaps = np.asarray(trace.reverify_gap, dtype=np.float64)
    if np.any(np.isfinite(gaps)):
        g = float(np.nanmax(gaps))
        checks.append(Check("certificate_reverify", g <= REVERIFY_TOL, g,
                            "direct re-evaluation minus certified worst log f"))
    if trace.violations:
        checks.append(Check("ranges", False, math.nan, "; ".join(trace.violations[:5])))
    return checks


def eps_label(eps):
    return repr(float(eps))


def csv_columns(eps_grid):
    cols = ["t", "step_loss", "cum_loss"]
    for e in eps_grid:
        lab = eps_label(e)
        cols += [f"L_eps_{lab}", f"R_eps_{lab}", f"bound_eq6_{lab}"]
    return cols + ["log_f", "C_t", "cert_exact"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def trace_rows(trace):
    for i in range(trace.T):
        t = trace.t[i]
        row = [str(t), _fmt(trace.step_loss[i]), _fmt(trace.cum_loss[i])]
        for j, e in enumerate(trace.eps_grid):
            row += [_fmt(trace.L_eps[i][j]), _fmt(trace.R_eps[i][j]), _fmt(bounds.bound_eq6(t, e))]
        lc = trace.log_cap[i]
        row += [_fmt(trace.log_f[i]), _fmt(math.exp(lc) if math.isfinite(lc) else None),
                _fmt(trace.cert_exact[i])]
        yield row


def metadata(trace):
    return {
        "config": trace.config,
        "config_hash": trace.config_hash,
        "seed": trace.seed,
        "learner": trace.learner,
        "N": trace.N,
        "T_completed": trace.T,
        "status": trace.status,
        "abort_reason": trace.abort_reason,
        "eps_grid": trace.eps_grid,
        "slack": {"tau": trace.tau, "factor": math.exp(trace.slack_log(trace.T))},
        "summary": [c.as_dict() for c in trace.checks],
        "passed": trace.passed,
    }


def emit(trace, out_dir, stem=None):
    """Write <stem>.csv and <stem>.json; returns the two paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if stem is None:
        env = trace.config["environment"]["kind"]
        stem = f"{trace.learner}_{env}_N{trace.N}_T{trace.config['T']}_s{trace.seed}"
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_columns(trace.eps_grid))
        w.writerows(trace_rows(trace))
    with open(json_path, "w") as fh:
        json.dump(metadata(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def read_trace_csv(path):
    """Parse an emitted CSV back into float columns (empty cells become NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        cols[name] = np.array([float(r[j]) if r[j] != "" else math.nan for r in body])
    return cols


def _run_one(args):
    cfg, verify = args
    return run(cfg, verify=verify)


def run_many(configs, verify=False, jobs=1):
    """Run several configs; results are in input order whatever the scheduling."""
    work = [(c, verify) for c in configs]
    if jobs <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))
