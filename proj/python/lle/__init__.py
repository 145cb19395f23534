"""Grid world with colored blocking lasers plus its cooperative training stack.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from lle._core import (
    Action,
    ContractViolation,
    EvalSummary,
    GenerationExhausted,
    InsufficientData,
    Map,
    MapParseError,
    MapValidationError,
    MetricRow,
    Position,
    StateSpaceTooLarge,
    StepOutcome,
    TrainResult,
    World,
    aggregate,
    checkpoint_meta,
    coordination_depth,
    encoding_shape,
    evaluate_checkpoint,
    generate,
    load_level,
    parse_map,
    read_metrics,
    solvable,
    toy_map,
    train,
)

__all__ = [
    "Action",
    "ContractViolation",
    "EvalSummary",
    "GenerationExhausted",
    "InsufficientData",
    "Map",
    "MapParseError",
    "MapValidationError",
    "MetricRow",
    "Position",
    "StateSpaceTooLarge",
    "StepOutcome",
    "TrainResult",
    "World",
    "aggregate",
    "checkpoint_meta",
    "coordination_depth",
    "encoding_shape",
    "evaluate_checkpoint",
    "generate",
    "load_level",
    "parse_map",
    "read_metrics",
    "solvable",
    "toy_map",
    "train",
]
