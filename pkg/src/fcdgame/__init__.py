"""Privacy-aware floating-car-data subscriptions.

Vehicles obfuscate their reported location, play a non-cooperative game for
probabilistic impact-level subscriptions under a cellular budget, and share
received messages with neighbors over V2V.
"""

from .model import (
    ConfigError,
    GuardError,
    ImpactLevel,
    ImpactLevelTable,
    Message,
    PrivacyProfile,
    ScenarioConfig,
    Strategy,
    classify_message,
    default_scenario,
    load_scenario,
    save_scenario,
)
from .obfuscation import (
    ReportedRegion,
    adaptation_factor,
    build_adaptation_table,
    obfuscated_impact,
    obfuscated_load,
    sample_reported_region,
    server_relevant,
    vehicle_relevant,
)
from .solver import (
    SolverReport,
    StrategyProfile,
    SupportPartition,
    check_concavity,
    complement_ratio,
    expected_utility,
    max_deviation_gain,
    receive_probability,
    robust_score,
    solve_fixed_support,
    solve_optimal,
)

__all__ = [
    "ConfigError",
    "GuardError",
    "ImpactLevel",
    "ImpactLevelTable",
    "Message",
    "PrivacyProfile",
    "ReportedRegion",
    "ScenarioConfig",
    "SolverReport",
    "Strategy",
    "StrategyProfile",
    "SupportPartition",
    "adaptation_factor",
    "build_adaptation_table",
    "check_concavity",
    "classify_message",
    "complement_ratio",
    "default_scenario",
    "expected_utility",
    "load_scenario",
    "max_deviation_gain",
    "obfuscated_impact",
    "obfuscated_load",
    "receive_probability",
    "robust_score",
    "sample_reported_region",
    "save_scenario",
    "server_relevant",
    "solve_fixed_support",
    "solve_optimal",
    "vehicle_relevant",
]

__version__ = "0.1.0"
