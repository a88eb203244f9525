"""Thompson sampling for contextual bandits with nonparametric
Gaussian-mixture reward models, plus baselines, synthetic scenarios, a
logged-data replayer, and a regret-evaluation harness."""

__version__ = "0.1.0"

from .conjugate import (ComponentStats, GaussianLinearParams, NIGHyper,
                        accumulate, log_marginal_block, log_predictive,
                        posterior_update, sample_params)
from .environments import (LoggedEvent, MixtureArmSpec, ReplayResult,
                           ScenarioSpec, StepSample, builtin_scenario,
                           load_logged_events, load_scenario, replay,
                           sample_step, save_logged_events, save_scenario,
                           true_expected_reward, true_expected_rewards)
from .harness import (AggregateTable, ExperimentConfig, ExperimentResult,
                      RegretTrace, aggregate_traces, read_aggregate_csv,
                      read_traces_csv, run_experiment, run_replication,
                      write_aggregate_csv, write_traces_csv)
from .npmix import (ArmState, FiniteMixtureArmState, GibbsConfig,
                    ObserveDiagnostics, PYConfig)
from .policies import (BanditPolicy, Decision, LinearGaussianTS,
                       NonparametricTS, OracleMixtureTS, PolicyKind,
                       UniformRandom, oracle_assignment_log_weights)

__all__ = [
    "__version__",
    # conjugate
    "NIGHyper", "ComponentStats", "GaussianLinearParams", "posterior_update",
    "accumulate", "sample_params", "log_predictive", "log_marginal_block",
    # npmix
    "PYConfig", "GibbsConfig", "ObserveDiagnostics", "ArmState",
    "FiniteMixtureArmState",
    # policies
    "BanditPolicy", "Decision", "NonparametricTS", "OracleMixtureTS",
    "LinearGaussianTS", "UniformRandom", "oracle_assignment_log_weights",
    "PolicyKind",
    # environments
    "MixtureArmSpec", "ScenarioSpec", "StepSample", "LoggedEvent",
    "ReplayResult", "builtin_scenario", "true_expected_reward",
    "true_expected_rewards", "sample_step", "replay", "save_scenario",
    "load_scenario", "save_logged_events", "load_logged_events",
    # harness
    "ExperimentConfig", "RegretTrace", "AggregateTable", "ExperimentResult",
    "run_replication", "run_experiment", "aggregate_traces",
    "write_traces_csv", "write_aggregate_csv", "read_traces_csv",
    "read_aggregate_csv",
]
