"""Stratified mean estimation under a label budget: WarmStart-UCB, PartiBandits and baselines."""
from .baselines import ThompsonConfig, proportional_allocation, run_srs, run_strs, run_thompson
from .core import (
    DomainError,
    IncompleteCoverageError,
    InfeasibleCoverageError,
    MeanEstimate,
    PartiBanditsError,
    SamplerTrace,
    SchemeError,
    StratificationScheme,
    Stratum,
    TrueModel,
    UndefinedEstimateError,
    aggregate_mean,
    sigma1,
    weighted_group_mean,
)
from .envs import (
    BernoulliArms,
    DgpSpec,
    LabeledPool,
    LabelOracle,
    gen_logit_pool,
    gen_probit_pool,
    gen_threshold_pool,
    load_csv_pool,
)
from .harness import AlgorithmSpec, ConfigError, ExperimentConfig, ScenarioSpec, run_experiment
from .stage1 import available_subroutines, induced_partition, learn_threshold_a2, plugin_subroutine, register_subroutine
from .two_stage import PartiBanditsConfig, run_partibandits
from .ws_ucb import compute_cn, run_warmstart_ucb

__version__ = "0.1.0"
