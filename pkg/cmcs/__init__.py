from .config import (
    Budget,
    BudgetMode,
    CmcsConfig,
    Component,
    ComponentKind,
    Strategy,
    TwoStageConfig,
)
from .configurator import (
    ComponentPool,
    ConfiguratorResult,
    Scoring,
    TrainingProtocol,
    configure_single_stage,
    configure_strategy_c,
    enumerate_meaningful_subsets,
    evaluate_configuration,
    optimize_matrices,
)
from .engine import (
    RunResult,
    run_strategy,
    run_strategy_a,
    run_strategy_b,
    run_strategy_c,
    run_vnd,
)
from .errors import CmcsError, ContractViolation, InstanceFormatError, SerializeError
from .matrix import MatrixMutation, TransitionMatrix, mutate_matrix, roulette_wheel
from .serialize import TOOL_VERSION as __version__

__all__ = [
    "Budget",
    "BudgetMode",
    "CmcsConfig",
    "CmcsError",
    "Component",
    "ComponentKind",
    "ComponentPool",
    "ConfiguratorResult",
    "ContractViolation",
    "InstanceFormatError",
    "MatrixMutation",
    "RunResult",
    "Scoring",
    "SerializeError",
    "Strategy",
    "TrainingProtocol",
    "TransitionMatrix",
    "TwoStageConfig",
    "configure_single_stage",
    "configure_strategy_c",
    "enumerate_meaningful_subsets",
    "evaluate_configuration",
    "mutate_matrix",
    "optimize_matrices",
    "roulette_wheel",
    "run_strategy",
    "run_strategy_a",
    "run_strategy_b",
    "run_strategy_c",
    "run_vnd",
]
