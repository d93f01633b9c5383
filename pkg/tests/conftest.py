"""Shared test helpers: constructive random model generation."""

from __future__ import annotations

import numpy as np
import pytest

from modelfuzz.graph import GraphModel, OperatorKind, TensorShape
from modelfuzz.operators import NONE_TAG, OPERATOR_ORDER, PARAM_PALETTES

SMALL_SHAPE = TensorShape(1, 2, 6, 6)

ACTIVE_TAGS = tuple(t for t in OPERATOR_ORDER if t != NONE_TAG)


def random_operator(rng, tags=ACTIVE_TAGS) -> OperatorKind:
    tag = tags[int(rng.integers(len(tags)))]
    palette = PARAM_PALETTES[tag]
    params = {
        name: palette[name][int(rng.integers(len(palette[name])))]
        for name in sorted(palette)
    }
    return OperatorKind(tag, tuple(sorted(params.items())))


def random_valid_model(rng, max_vertices=6, max_extra_edges=2, shape=SMALL_SHAPE) -> GraphModel:
    """Valid by construction: a source-to-sink chain plus optional chords.

    The chain may skip vertices (left inactive); extra edges connect chain
    vertices, which preserves the every-vertex-on-a-source-sink-path rule.
    """
    n = int(rng.integers(2, max_vertices + 1))
    middle = [v for v in range(1, n - 1) if rng.random() < 0.7]
    chain = [0] + middle + [n - 1]
    edges = {}
    for a, b in zip(chain, chain[1:]):
        edges[(a, b)] = random_operator(rng)
    for _ in range(int(rng.integers(0, max_extra_edges + 1))):
        if len(chain) < 2:
            break
        ai = int(rng.integers(0, len(chain) - 1))
        bi = int(rng.integers(ai + 1, len(chain)))
        key = (chain[ai], chain[bi])
        if key not in edges:
            edges[key] = random_operator(rng)
    return GraphModel(n, tuple(sorted((i, j, op) for (i, j), op in edges.items())), shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
