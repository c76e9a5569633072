"""Globally optimal EV charging-facility siting, sizing and time-varying
pricing under user-equilibrium traffic response."""

from .bilevel import (DesignDecision, EvaluationResult, evaluate_bilevel_point,
                      roll_occupancy, site_price_grids, upper_objective,
                      validate_design)
from .errors import (ChargenetError, ConfigError, EnumerationCapError,
                     EquilibriumError, InfeasibleError, InstanceFormatError)
from .network import (Arc, CandidateSite, GeneratorConfig, NetworkInstance,
                      OdPair, Params, generate_instance, load_instance,
                      save_instance)
from .oracle import OracleResult, solve_oracle
from .paths import ChargingPath, PathTable, enumerate_feasible_paths
from .queueing import (QueueParams, calibrate_slope, erlang_c_wait_prob,
                       simulate_wait_prob)
from .solver import ResultBundle, Tolerances, run

__version__ = "0.1.0"

__all__ = [
    "Arc", "CandidateSite", "ChargenetError", "ChargingPath", "ConfigError",
    "DesignDecision", "EnumerationCapError", "EquilibriumError",
    "EvaluationResult", "GeneratorConfig", "InfeasibleError",
    "InstanceFormatError", "NetworkInstance", "OdPair", "OracleResult",
    "Params", "PathTable", "QueueParams", "ResultBundle", "Tolerances",
    "calibrate_slope", "enumerate_feasible_paths", "erlang_c_wait_prob",
    "evaluate_bilevel_point", "generate_instance", "load_instance",
    "roll_occupancy", "run", "save_instance", "simulate_wait_prob",
    "site_price_grids", "solve_oracle", "upper_objective", "validate_design",
    "__version__",
]
