"""Differential fuzzing engine for tensor-compute runtimes.

Generates computation-graph test models under fused heuristic guidance
(bug-detection performance, operator-combination variety, execution time)
and detects crashes, NaN bugs, and numerical inconsistencies by cross-backend
voting.
"""

from .backends import (
    BackendId,
    ExecutionOutcome,
    FaultSpec,
    Tensor,
    alternate_backend,
    reference_backend,
    spawn_adapter,
)
from .campaign import CampaignConfig, replay_bug, run_campaign
from .errors import ModelFuzzError
from .fusion import (
    JudgeMatrix,
    MeasurementRecord,
    OperatorWeightTable,
    critic_weights,
    delta_fitness,
    fitness,
    pearson,
    update_operator_weights,
)
from .graph import (
    GraphModel,
    OperatorKind,
    TensorShape,
    ValidationResult,
    canonical_hash,
    decode_model,
    encode_model,
    validate,
)
from .harness import BugReport, DifferentialRecord, pairwise_inconsistency, run_differential
from .motifs import Motif, MotifCode, canonical_motif_code, enumerate_motifs, variety_degree
from .mutation import (
    MutationConfig,
    SeedPool,
    build_seed_pool,
    mutate,
    tournament_select,
    trivial_model,
)

__version__ = "0.1.0"

__all__ = [
    "BackendId",
    "BugReport",
    "CampaignConfig",
    "DifferentialRecord",
    "ExecutionOutcome",
    "FaultSpec",
    "GraphModel",
    "JudgeMatrix",
    "MeasurementRecord",
    "Motif",
    "MotifCode",
    "MutationConfig",
    "ModelFuzzError",
    "OperatorKind",
    "OperatorWeightTable",
    "SeedPool",
    "Tensor",
    "TensorShape",
    "ValidationResult",
    "alternate_backend",
    "build_seed_pool",
    "canonical_hash",
    "canonical_motif_code",
    "critic_weights",
    "decode_model",
    "delta_fitness",
    "encode_model",
    "enumerate_motifs",
    "fitness",
    "mutate",
    "pairwise_inconsistency",
    "pearson",
    "reference_backend",
    "replay_bug",
    "run_campaign",
    "run_differential",
    "spawn_adapter",
    "tournament_select",
    "trivial_model",
    "update_operator_weights",
    "validate",
    "variety_degree",
]
