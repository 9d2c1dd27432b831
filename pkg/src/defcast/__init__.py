"""Defensive forecasting learners with quantile-regret guarantees."""

from .bounds import (bound_eq6, bound_eq9, bound_eq10, bound_kv, bound_report, bound_thm1,
                     check_eq3_discrete, crossover)
from .game import GameSpec, ProtocolState, quantile_loss, quantile_regret
from .harness import RUN_CONFIG_SCHEMA, Trace, emit, read_trace_csv, run
from .kernels import BACKEND
from .learners import DfaFixed, DfaMixture, FakeDfa, Hedge, HedgeAnytime, LearnerAborted, make_learner
from .levin import levin_search
from .potential import PotentialState, fixed_grid, theorem2_grid, theorem3_grid
from .solver import Certificate, Infeasible, SolveOptions, StepProblem, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Certificate", "DfaFixed", "DfaMixture", "FakeDfa", "GameSpec", "Hedge",
    "HedgeAnytime", "Infeasible", "LearnerAborted", "PotentialState", "ProtocolState",
    "RUN_CONFIG_SCHEMA", "SolveOptions", "StepProblem", "Trace", "bound_eq6", "bound_eq9",
    "bound_eq10", "bound_kv", "bound_report", "bound_thm1", "check_eq3_discrete", "crossover",
    "emit", "fixed_grid", "levin_search", "make_learner", "quantile_loss", "quantile_regret",
    "read_trace_csv", "run", "solve", "theorem2_grid", "theorem3_grid",
]
