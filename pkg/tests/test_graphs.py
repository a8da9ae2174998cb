import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from rggent.geometry import Domain, UnsupportedRange
from rggent.graphs import (
    CapacityError,
    EmpiricalDistribution,
    LabeledGraph,
    build_graph,
    canonical_code,
    canonical_form,
    edge_profile,
    graph_codes,
    n_pairs,
    pair_edge_probability_exact,
    sample_graph_distribution,
    structure_distribution,
)


def graphs(max_m=8):
    return st.integers(1, max_m).flatmap(
        lambda m: st.integers(0, 2 ** n_pairs(m) - 1).map(lambda c: LabeledGraph(m, c)))


def test_pair_order_and_bytes():
    g = LabeledGraph.from_edges(4, [(0, 1), (1, 2)])
    # pairs: (0,1)=0 (0,2)=1 (0,3)=2 (1,2)=3 (1,3)=4 (2,3)=5
    assert g.code == 0b1001
    assert g.to_bytes() == b"\x09"
    assert g.hex() == "09"
    big = LabeledGraph.from_edges(5, [(2, 4)])
    # pair (2,4) is index 8, i.e. byte 1 bit 0
    assert big.to_bytes() == b"\x00\x01"


@given(graphs(11))
def test_hex_roundtrip(g):
    assert LabeledGraph.from_hex(g.m, g.hex()) == g
    assert LabeledGraph.from_adjacency(g.adjacency()) == g
    assert LabeledGraph.from_edges(g.m, g.edges()) == g
    assert g.n_edges() == len(g.edges())


@given(graphs(6), st.data())
def test_permute_preserves_isomorphism_class(g, data):
    perm = data.draw(st.permutations(range(g.m)))
    h = g.permute(perm)
    assert h.n_edges() == g.n_edges()
    assert canonical_form(h) == canonical_form(g)


def test_adjacency_is_symmetric():
    a = LabeledGraph(5, 0b1011001101).adjacency()
    assert np.array_equal(a, a.T)
    assert not a.diagonal().any()


def test_build_graph_edges():
    dom = Domain.cube(1)
    g = build_graph([0.0, 0.3, 0.9], 0.3, dom)
    # distance exactly r counts as an edge
    assert g.edges() == [(0, 1)]
    assert build_graph([0.0, 0.4, 1.0], 1.0, dom).n_edges() == 3
    assert build_graph([0.125, 0.875], 0.25, Domain.torus(1)).edges() == [(0, 1)]


def test_build_graph_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_graph([0.1, 0.2], 1.5, Domain.cube(1))


@given(st.integers(2, 6), st.floats(0.05, 0.7), st.booleans(), st.integers(0, 2**32))
def test_vectorised_codes_match_scalar(m, r, torus, seed):
    dom = Domain.torus(2) if torus else Domain.cube(2)
    pts = np.random.default_rng(seed).random((5, m, 2))
    codes = graph_codes(pts, r, dom)
    for p, c in zip(pts, codes):
        assert build_graph(p, r, dom).code == c


def test_edge_profile():
    prof = edge_profile([0.5], [[0.4], [0.9], [0.6]], 0.1, Domain.cube(1))
    assert prof.bits == (True, False, True)
    assert prof.in_set == (0, 2)


# numbers of unlabeled graphs on 1..6 vertices
@pytest.mark.parametrize("m,count", [(1, 1), (2, 2), (3, 4), (4, 11), (5, 34), (6, 156)])
def test_canonical_classes_count(m, count):
    classes = {canonical_code(m, c) for c in range(2 ** n_pairs(m))}
    assert len(classes) == count


def test_canonical_is_lexicographic_minimum():
    g = LabeledGraph.from_edges(3, [(0, 1)])
    # bit sequences over pairs (0,1),(0,2),(1,2); the minimum puts the edge last
    assert canonical_form(g).code == 0b100


@pytest.mark.parametrize("m", [9, 10])
def test_canonical_large_matches_networkx(m):
    gen = np.random.default_rng(m)
    base = LabeledGraph(m, int(gen.integers(0, 2 ** n_pairs(m))))
    perm = gen.permutation(m)
    other = LabeledGraph(m, int(gen.integers(0, 2 ** n_pairs(m))))
    assert canonical_form(base.permute(perm)) == canonical_form(base)
    iso = nx.is_isomorphic(nx.from_numpy_array(base.adjacency()), nx.from_numpy_array(other.adjacency()))
    assert (canonical_form(base) == canonical_form(other)) == iso


@given(graphs(6), graphs(6))
def test_canonical_agrees_with_networkx(g, h):
    if g.m != h.m:
        return
    iso = nx.is_isomorphic(nx.from_numpy_array(g.adjacency()), nx.from_numpy_array(h.adjacency()))
    assert (canonical_form(g) == canonical_form(h)) == iso


def test_canonical_capacity():
    with pytest.raises(CapacityError):
        canonical_form(LabeledGraph(11, 0))


counts = st.dictionaries(st.integers(0, 20), st.integers(1, 50), max_size=10)


@given(counts, counts, counts)
def test_merge_is_commutative_and_associative(a, b, c):
    A, B, C = (EmpiricalDistribution(x) for x in (a, b, c))
    assert A.merge(B) == B.merge(A)
    assert (A + B) + C == A + (B + C)
    assert (A + B).total == A.total + B.total


def test_distribution_rejects_negative_counts():
    with pytest.raises(ValueError):
        EmpiricalDistribution({1: -1})


def test_sampling_independent_of_workers_and_shards():
    dom = Domain.cube(1)
    a = sample_graph_distribution(4, dom, 0.3, 50_000, 11, workers=1, shard_size=8192)
    b = sample_graph_distribution(4, dom, 0.3, 50_000, 11, workers=2, shard_size=8192)
    assert a.dist == b.dist
    assert a.edge_sum == b.edge_sum
    c = sample_graph_distribution(4, dom, 0.3, 50_000, 12, shard_size=8192)
    assert c.dist != a.dist


def test_edge_probability_matches_closed_form():
    dom = Domain.cube(1)
    s = sample_graph_distribution(3, dom, 0.3, 400_000, 5)
    p = pair_edge_probability_exact(dom, 0.3)
    assert p == pytest.approx(0.51)
    assert abs(s.edge_probability - p) <= 4 * s.edge_probability_se


def test_torus_edge_probability():
    assert pair_edge_probability_exact(Domain.torus(2), 0.25) == pytest.approx(math.pi / 16)
    with pytest.raises(UnsupportedRange):
        pair_edge_probability_exact(Domain.cube(2), 0.3)


def test_three_vertex_census_is_eight():
    s = sample_graph_distribution(3, Domain.cube(1), 0.3, 100_000, 1)
    assert s.dist.support == 8
    assert structure_distribution(s.dist, 3).support == 4


def test_small_and_degenerate_inputs():
    assert LabeledGraph(1, 0).edges() == []
    assert build_graph([[0.5]], 0.1, Domain.cube(1)).m == 1
    assert canonical_code(2, 1) == 1
