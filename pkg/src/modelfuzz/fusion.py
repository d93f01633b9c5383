"""Measurement fusion: the judge matrix, CRITIC weighting, and fitness.

Each executed model contributes one (performance, variety, time) row. Column
weights come from CRITIC: contrast intensity (standard deviation of the
normalized column) times conflict (sum of one-minus-correlation against the
other columns), normalized to sum to one. Fitness is the weighted sum of a
row's transformed values; the time column is replaced by its reciprocal first
so cheaper models score higher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError
from .operators import OPERATOR_ORDER

WEIGHT_FLOOR = 0.01

COL_PERFORMANCE = 0
COL_VARIETY = 1
COL_TIME = 2


@dataclass(frozen=True)
class MeasurementRecord:
    """One model's measurement row."""

    model_digest: str
    performance: float
    variety: int
    time_seconds: float

    def __post_init__(self):
        if not (math.isfinite(self.performance) and self.performance >= 0):
            raise ValueError(f"performance must be finite and >= 0, got {self.performance}")
        if self.variety < 0:
            raise ValueError(f"variety must be >= 0, got {self.variety}")
        if not (math.isfinite(self.time_seconds) and self.time_seconds > 0):
            raise ValueError(f"time_seconds must be finite and > 0, got {self.time_seconds}")


class JudgeMatrix:
    """Append-only matrix of measurement rows, in generation order."""

    def __init__(self, rows=()):
        self.rows: list[MeasurementRecord] = list(rows)

    def append(self, record: MeasurementRecord) -> int:
        """Add a row; returns its index."""
        self.rows.append(record)
        return len(self.rows) - 1

    def __len__(self):
        return len(self.rows)

    def to_array(self) -> np.ndarray:
        return np.array(
            [[r.performance, float(r.variety), r.time_seconds] for r in self.rows],
            dtype=np.float64,
        ).reshape(len(self.rows), 3)


@dataclass(frozen=True)
class FusionReport:
    """Full trace of one fusion evaluation."""

    column_weights: tuple  # (w_performance, w_variety, w_time)
    contrast: tuple  # sigma per column
    conflict: tuple  # f per column
    fitness_new: float
    fitness_seed: float
    delta_fitness: float


def pearson(x, y) -> float:
    """Pearson correlation coefficient; 0 when either input is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need equal-length 1-d sequences, got shapes {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise ValueError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float((dx * dx).sum()) * float((dy * dy).sum()))
    if denom == 0.0:
        return 0.0
    return float((dx * dy).sum()) / denom


def _transformed(matrix: JudgeMatrix, normalize: bool = True) -> np.ndarray:
    """Reciprocal time column, then optional per-column L2 normalization."""
    data = matrix.to_array()
    data[:, COL_TIME] = 1.0 / data[:, COL_TIME]
    if not normalize:
        return data
    norms = np.sqrt((data * data).sum(axis=0))
    out = np.zeros_like(data)
    nonzero = norms > 0.0
    out[:, nonzero] = data[:, nonzero] / norms[nonzero]
    return out


def critic_weights(matrix: JudgeMatrix) -> tuple:
    """Column weights (performance, variety, time) from contrast and conflict."""
    weights, _, _ = _critic_details(matrix)
    return weights


def _critic_details(matrix: JudgeMatrix):
    if len(matrix) < 2:
        raise InsufficientDataError(f"CRITIC needs at least 2 rows, got {len(matrix)}")
    z = _transformed(matrix)
    sigma = z.std(axis=0, ddof=1)
    conflict = np.zeros(3)
    for q in range(3):
        for other in range(3):
            if other != q:
                conflict[q] += 1.0 - pearson(z[:, q], z[:, other])
    capacity = sigma * conflict
    total = float(capacity.sum())
    if total == 0.0:
        weights = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    else:
        weights = tuple(float(c) / total for c in capacity)
    return weights, tuple(float(s) for s in sigma), tuple(float(f) for f in conflict)


def fitness(matrix: JudgeMatrix, row_index: int, raw_x: bool = False) -> float:
    """Weighted sum of a row's transformed measurements.

    ``raw_x`` skips the normalization step, reading the fused sum over the
    reciprocal-time row as literally as possible; the default uses the
    normalized values so the three columns stay dimensionless.
    """
    if not 0 <= row_index < len(matrix):
        raise ValueError(f"row index {row_index} out of range for {len(matrix)} rows")
    if len(matrix) < 2:
        return 0.0
    weights = critic_weights(matrix)
    values = _transformed(matrix, normalize=not raw_x)[row_index]
    return float(np.dot(weights, values))


def delta_fitness(matrix: JudgeMatrix, new_index: int, seed_index: int, raw_x: bool = False) -> float:
    """fitness(new) - fitness(seed), both under the same post-insertion matrix."""
    return fitness(matrix, new_index, raw_x) - fitness(matrix, seed_index, raw_x)


def fusion_report(matrix: JudgeMatrix, new_index: int, seed_index: int, raw_x: bool = False) -> FusionReport:
    weights, sigma, conflict = _critic_details(matrix)
    f_new = fitness(matrix, new_index, raw_x)
    f_seed = fitness(matrix, seed_index, raw_x)
    return FusionReport(weights, sigma, conflict, f_new, f_seed, f_new - f_seed)


@dataclass(frozen=True)
class OperatorWeightTable:
    """Per-operator sampling weights, floored so no operator ever starves."""

    weights: tuple = field(
        default_factory=lambda: tuple((tag, 1.0) for tag in OPERATOR_ORDER)
    )

    def __post_init__(self):
        for tag, value in self.weights:
            if value < WEIGHT_FLOOR:
                raise ValueError(f"weight for {tag} below floor: {value}")

    @classmethod
    def uniform(cls, value: float = 1.0) -> "OperatorWeightTable":
        return cls(tuple((tag, value) for tag in OPERATOR_ORDER))

    @property
    def as_dict(self) -> dict:
        return dict(self.weights)

    def probabilities(self):
        tags = tuple(tag for tag, _ in self.weights)
        raw = np.array([w for _, w in self.weights], dtype=np.float64)
        return tags, raw / raw.sum()

    def sample(self, rng) -> str:
        """Draw one tag with probability weight / sum(weights)."""
        tags, probs = self.probabilities()
        return tags[int(rng.choice(len(tags), p=probs))]


def update_operator_weights(table: OperatorWeightTable, op: str, delta: float) -> OperatorWeightTable:
    """New table with ``op``'s weight moved by ``delta``, floored at 0.01."""
    if op not in table.as_dict:
        raise ValueError(f"unknown operator tag {op!r}")
    updated = tuple(
        (tag, max(WEIGHT_FLOOR, value + delta) if tag == op else value)
        for tag, value in table.weights
    )
    return OperatorWeightTable(updated)
