"""Seed-pool construction, heuristic edge-relabel mutation, tournament selection.

A mutation relabels one edge of the DAG: both vertices are drawn uniformly
(the target from the higher indices), the operator comes from the weighted
sampler (including the ``None`` pseudo-operator, which realizes removal), and
invalid results are retried with fresh draws. With small probability the
model first grows one vertex, placed just before the sink, so structures can
outgrow the trivial chain's budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MutationFailedError, PoolConstructionError
from .fusion import OperatorWeightTable
from .graph import GraphModel, OperatorKind, TensorShape, model_digest_hex, validate
from .operators import NONE_TAG, PARAM_PALETTES

GROWTH_PROBABILITY = 0.1


@dataclass(frozen=True)
class MutationConfig:
    operator_count: int
    pool_size: int
    tournament_k: int = 1
    max_retries: int = 25
    rng_seed: int = 0

    def __post_init__(self):
        if self.operator_count < 1:
            raise ValueError("operator_count must be >= 1")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if not 1 <= self.tournament_k <= self.pool_size:
            raise ValueError("tournament_k must be in 1..pool_size")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


@dataclass
class PoolEntry:
    model: GraphModel
    fitness: float
    digest: str
    order: int
    row_index: int | None = None


@dataclass
class SeedPool:
    capacity: int
    entries: list = field(default_factory=list)

    def digests(self) -> set:
        return {e.digest for e in self.entries}

    def add(self, entry: PoolEntry) -> None:
        if entry.digest in self.digests():
            raise ValueError(f"duplicate digest {entry.digest[:12]}")
        if len(self.entries) >= self.capacity:
            raise ValueError("pool at capacity")
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)


def trivial_model(operator_count: int, input_shape: TensorShape) -> GraphModel:
    """Identity chain 0 -> 1 -> ... -> operator_count."""
    if operator_count < 1:
        raise ValueError("operator_count must be >= 1")
    edges = tuple((i, i + 1, OperatorKind("Identity", ())) for i in range(operator_count))
    return GraphModel(operator_count + 1, edges, input_shape)


def _sample_operator(tag: str, rng) -> OperatorKind | None:
    """Draw palette parameters for a freshly created edge."""
    if tag == NONE_TAG:
        return None
    palette = PARAM_PALETTES[tag]
    chosen = {}
    for name in sorted(palette):
        values = palette[name]
        chosen[name] = values[int(rng.integers(len(values)))]
    return OperatorKind(tag, tuple(sorted(chosen.items())))


def mutate(
    model: GraphModel,
    weights: OperatorWeightTable,
    rng,
    max_retries: int = 25,
    growth_probability: float = GROWTH_PROBABILITY,
):
    """One heuristic mutation; returns (new model, sampled operator tag).

    The relabel must change the edge (resampling an identical label counts
    as a failed attempt) and the result must validate; each failure burns one
    retry. The input model is never modified.
    """
    base = model
    if growth_probability > 0 and rng.random() < growth_probability:
        base = base.with_grown_sink()
    edge_map = base.edge_map
    for _ in range(max_retries):
        i = int(rng.integers(0, base.vertex_count - 1))
        j = int(rng.integers(i + 1, base.vertex_count))
        tag = weights.sample(rng)
        op = _sample_operator(tag, rng)
        old = edge_map.get((i, j))
        if op is None and old is None:
            continue
        if op is not None and old is not None and op == old:
            continue
        candidate = base.with_edge(i, j, op)
        if validate(candidate).valid:
            return candidate, tag
    raise MutationFailedError(f"no valid mutation within {max_retries} retries")


def build_seed_pool(
    config: MutationConfig,
    weights: OperatorWeightTable,
    rng,
    input_shape: TensorShape,
    growth_probability: float = GROWTH_PROBABILITY,
) -> SeedPool:
    """Trivial model plus mutated descendants until the pool is full.

    Entries start at fitness 0; they have not been executed yet. Digest
    duplicates are discarded and retried within a total attempt budget of
    pool_size * max_retries.
    """
    pool = SeedPool(capacity=config.pool_size)
    root = trivial_model(config.operator_count, input_shape)
    pool.add(PoolEntry(root, 0.0, model_digest_hex(root), order=0))
    attempts = 0
    budget = config.pool_size * config.max_retries
    while len(pool) < config.pool_size:
        if attempts >= budget:
            raise PoolConstructionError(
                f"seed pool stuck at {len(pool)}/{config.pool_size} after {attempts} attempts"
            )
        attempts += 1
        seed = pool.entries[int(rng.integers(len(pool)))]
        try:
            child, _ = mutate(seed.model, weights, rng, config.max_retries, growth_probability)
        except MutationFailedError:
            continue
        digest = model_digest_hex(child)
        if digest in pool.digests():
            continue
        pool.add(PoolEntry(child, 0.0, digest, order=len(pool)))
    return pool


def tournament_select_entries(pool: SeedPool, k: int, rng) -> list:
    """Winner pool entries via k tournament rounds without reselection.

    Each round samples up to k remaining entries uniformly without
    replacement and promotes the max-fitness entry, ties broken by earlier
    pool insertion.
    """
    if k < 1 or k > len(pool):
        raise ValueError(f"k must be in 1..{len(pool)}, got {k}")
    remaining = list(pool.entries)
    winners = []
    for _ in range(k):
        sample_size = min(k, len(remaining))
        picks = rng.choice(len(remaining), size=sample_size, replace=False)
        contenders = [remaining[int(p)] for p in picks]
        best = max(contenders, key=lambda e: (e.fitness, -e.order))
        winners.append(best)
        remaining.remove(best)
    return winners


def tournament_select(pool: SeedPool, k: int, rng) -> list:
    """Winner models of k tournament rounds (see tournament_select_entries)."""
    return [entry.model for entry in tournament_select_entries(pool, k, rng)]
