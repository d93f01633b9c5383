"""Operator-combination variety: connected motif enumeration and counting.

A motif is a weakly connected, edge-induced subgraph of a model's active DAG
with exactly ``depth`` operator edges. The variety degree of a model is the
number of motifs that remain after collapsing label-preserving directed
isomorphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .graph import GraphModel, require_valid


@dataclass(frozen=True)
class Motif:
    """Edge-labeled directed subgraph carrying original vertex ids."""

    edges: tuple  # tuple of (from, to, OperatorKind), exactly `depth` entries

    @property
    def depth(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class MotifCode:
    """Canonical byte string; equal iff the motifs are label-isomorphic."""

    code: bytes


def _edge_adjacency(edges) -> list:
    """Line-graph adjacency: edge indices sharing at least one endpoint."""
    by_vertex: dict[int, list[int]] = {}
    for idx, (i, j, _) in enumerate(edges):
        by_vertex.setdefault(i, []).append(idx)
        by_vertex.setdefault(j, []).append(idx)
    adj = [set() for _ in edges]
    for incident in by_vertex.values():
        for a in incident:
            for b in incident:
                if a != b:
                    adj[a].add(b)
    return [sorted(s) for s in adj]


def _iter_connected_edge_sets(edges, depth: int):
    """Yield every weakly connected edge subset of size ``depth`` exactly once.

    ESU-style enumeration on the line graph: each subset is grown from its
    smallest edge index, extending only to higher-indexed adjacent edges, so
    no subset is produced twice. At depth 2 this degenerates to walking each
    edge's higher-indexed neighbors, which stays linear in adjacency size for
    large models.
    """
    adj = _edge_adjacency(edges)
    n = len(edges)

    def extend(chosen: list, ext: list, seen: frozenset, root: int):
        if len(chosen) == depth:
            yield tuple(chosen)
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            # A candidate may enter the extension set only once on any path,
            # the first time a chosen edge touches it; `seen` carries every
            # candidate ever offered so sibling branches cannot rebuild the
            # same subset in a different order.
            fresh = [u for u in adj[w] if u > root and u not in seen]
            yield from extend(chosen + [w], ext + fresh, seen | frozenset(fresh), root)

    for root in range(n):
        initial = [u for u in adj[root] if u > root]
        yield from extend([root], initial, frozenset(initial) | {root}, root)


def enumerate_motifs(model: GraphModel, depth: int) -> list:
    """All depth-edge connected motifs of the active DAG, one per edge subset."""
    require_valid(model)
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    edges = model.sorted_edges
    if depth > len(edges):
        return []
    return [
        Motif(tuple(edges[i] for i in sorted(subset)))
        for subset in _iter_connected_edge_sets(edges, depth)
    ]


def canonical_motif_code(motif: Motif) -> MotifCode:
    """Canonical form by exhaustive vertex-permutation minimization.

    Invariant under vertex renaming; distinct for non-isomorphic labeled
    motifs. A connected depth-d motif touches at most d+1 vertices, so depth
    3 costs at most 4! relabelings.
    """
    verts = sorted({v for i, j, _ in motif.edges for v in (i, j)})
    best = None
    for perm in permutations(range(len(verts))):
        mapping = {v: perm[k] for k, v in enumerate(verts)}
        relabeled = sorted(
            (mapping[i], mapping[j], op.tag, op.params) for i, j, op in motif.edges
        )
        key = repr(relabeled)
        if best is None or key < best:
            best = key
    return MotifCode(best.encode())


def variety_degree(model: GraphModel, depth: int) -> int:
    """Count of non-isomorphic depth-edge motifs in the model's active DAG."""
    require_valid(model)
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    edges = model.sorted_edges
    if depth > len(edges):
        return 0
    codes = set()
    for subset in _iter_connected_edge_sets(edges, depth):
        motif = Motif(tuple(edges[i] for i in sorted(subset)))
        codes.add(canonical_motif_code(motif).code)
    return len(codes)
