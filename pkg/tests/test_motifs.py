from itertools import combinations, permutations

import pytest

from modelfuzz.graph import GraphModel, OperatorKind
from modelfuzz.motifs import Motif, canonical_motif_code, enumerate_motifs, variety_degree

from conftest import SMALL_SHAPE, random_valid_model


def op(tag, **params):
    return OperatorKind.make(tag, **params)


def chain(*tags):
    edges = tuple((i, i + 1, op(t)) for i, t in enumerate(tags))
    return GraphModel(len(tags) + 1, edges, SMALL_SHAPE)


# --- independent oracle: brute-force subsets + permutation isomorphism -----


def oracle_connected(edge_subset) -> bool:
    verts = {v for i, j, _ in edge_subset for v in (i, j)}
    if not verts:
        return False
    adj = {v: set() for v in verts}
    for i, j, _ in edge_subset:
        adj[i].add(j)
        adj[j].add(i)
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == verts


def oracle_canonical(edge_subset) -> str:
    verts = sorted({v for i, j, _ in edge_subset for v in (i, j)})
    best = None
    for perm in permutations(range(len(verts))):
        mapping = dict(zip(verts, perm))
        key = repr(sorted((mapping[i], mapping[j], o.tag, o.params) for i, j, o in edge_subset))
        if best is None or key < best:
            best = key
    return best


def oracle_variety(model, depth) -> int:
    edges = model.sorted_edges
    codes = set()
    for subset in combinations(edges, depth):
        if oracle_connected(subset):
            codes.add(oracle_canonical(subset))
    return len(codes)


def oracle_motif_count(model, depth) -> int:
    return sum(1 for s in combinations(model.sorted_edges, depth) if oracle_connected(s))


# ---------------------------------------------------------------------------


class TestEnumerateMotifs:
    def test_chain_depth_1(self):
        model = chain("Identity", "Identity")
        assert len(enumerate_motifs(model, 1)) == 2

    def test_chain_depth_2(self):
        model = chain("Identity", "Identity")
        motifs = enumerate_motifs(model, 2)
        assert len(motifs) == 1
        assert motifs[0].depth == 2

    def test_diamond_depth_2_has_four_connected_pairs(self):
        # brute force over C(4,2)=6 subsets: the two "parallel" pairs are
        # disconnected, the other four share a vertex
        model = GraphModel(
            4,
            (
                (0, 1, op("Identity")),
                (0, 2, op("Identity")),
                (1, 3, op("Identity")),
                (2, 3, op("Identity")),
            ),
            SMALL_SHAPE,
        )
        motifs = enumerate_motifs(model, 2)
        assert len(motifs) == 4
        subsets = {tuple((i, j) for i, j, _ in m.edges) for m in motifs}
        assert subsets == {
            ((0, 1), (0, 2)),
            ((1, 3), (2, 3)),
            ((0, 1), (1, 3)),
            ((0, 2), (2, 3)),
        }

    def test_depth_larger_than_edges_is_empty(self):
        assert enumerate_motifs(chain("ReLU"), 3) == []

    def test_each_subset_exactly_once(self, rng):
        for _ in range(200):
            model = random_valid_model(rng, max_vertices=6, max_extra_edges=3)
            for depth in (1, 2, 3):
                motifs = enumerate_motifs(model, depth)
                subsets = [frozenset((i, j) for i, j, _ in m.edges) for m in motifs]
                assert len(subsets) == len(set(subsets))
                assert len(motifs) == oracle_motif_count(model, depth)


class TestCanonicalCode:
    def test_renaming_invariance(self):
        a = Motif(((0, 1, op("Conv2D", kernel=3, dilation=1)),))
        b = Motif(((5, 9, op("Conv2D", kernel=3, dilation=1)),))
        assert canonical_motif_code(a) == canonical_motif_code(b)

    def test_fan_out_vs_chain_differ(self):
        fan = Motif(((0, 1, op("Conv2D", kernel=3, dilation=1)), (0, 2, op("ReLU"))))
        chn = Motif(((0, 1, op("Conv2D", kernel=3, dilation=1)), (1, 2, op("ReLU"))))
        assert canonical_motif_code(fan) != canonical_motif_code(chn)

    def test_fan_in_edge_order_irrelevant(self):
        a = Motif(((0, 2, op("Conv2D", kernel=3, dilation=1)), (1, 2, op("ReLU"))))
        b = Motif(((1, 2, op("ReLU")), (0, 2, op("Conv2D", kernel=3, dilation=1))))
        assert canonical_motif_code(a) == canonical_motif_code(b)

    def test_direction_matters(self):
        down = Motif(((0, 1, op("Conv2D", kernel=3, dilation=1)), (1, 2, op("ReLU"))))
        up = Motif(((0, 1, op("ReLU")), (1, 2, op("Conv2D", kernel=3, dilation=1))))
        assert canonical_motif_code(down) != canonical_motif_code(up)

    def test_params_distinguish_labels(self):
        a = Motif(((0, 1, op("Conv2D", kernel=3, dilation=1)),))
        b = Motif(((0, 1, op("Conv2D", kernel=5, dilation=1)),))
        assert canonical_motif_code(a) != canonical_motif_code(b)


class TestVarietyDegree:
    def test_uniform_chain_depth_1(self):
        assert variety_degree(chain(*["Identity"] * 5), 1) == 1

    def test_uniform_chain_depth_2(self):
        assert variety_degree(chain(*["Identity"] * 5), 2) == 1

    def test_conv_relu_conv_depth_2(self):
        # two non-isomorphic 2-chains: Conv->ReLU and ReLU->Conv
        fixed = GraphModel(
            4,
            (
                (0, 1, op("Conv2D", kernel=3, dilation=1)),
                (1, 2, op("ReLU")),
                (2, 3, op("Conv2D", kernel=3, dilation=1)),
            ),
            SMALL_SHAPE,
        )
        assert variety_degree(fixed, 2) == 2

    def test_depth_1_counts_distinct_labels(self, rng):
        for _ in range(100):
            model = random_valid_model(rng)
            labels = {op_.label_key() for _, _, op_ in model.edges}
            assert variety_degree(model, 1) == len(labels)

    def test_monotone_under_label_diversification(self):
        base = chain(*["Identity"] * 4)
        relabeled = base.with_edge(1, 2, op("Sigmoid"))
        assert variety_degree(relabeled, 1) == variety_degree(base, 1) + 1

    def test_bounded_by_subset_count(self, rng):
        from math import comb

        for _ in range(100):
            model = random_valid_model(rng)
            e = len(model.edges)
            for depth in (1, 2, 3):
                assert variety_degree(model, depth) <= comb(e, depth)

    def test_matches_bruteforce_oracle(self, rng):
        for _ in range(300):
            model = random_valid_model(rng, max_vertices=5, max_extra_edges=2)
            for depth in (1, 2, 3):
                assert variety_degree(model, depth) == oracle_variety(model, depth)

    def test_depth_zero_rejected(self):
        with pytest.raises(ValueError):
            variety_degree(chain("ReLU"), 0)
