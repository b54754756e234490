import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermix.errors import CapacityError, DomainError
from hypermix.hypercore import (
    RGraph,
    canonical_form,
    complement,
    complete,
    degrees,
    densities,
    double_vertex,
    edit_distance,
    embeds,
    empty,
    from_canonical,
    induced_subgraph,
    isomorphic,
    link,
    max_degree,
    min_degree,
    shadow,
)


def g3(n, edges):
    return RGraph.from_edges(3, n, edges)


@st.composite
def graphs(draw, r=3, max_n=6):
    n = draw(st.integers(r, max_n))
    all_sets = list(itertools.combinations(range(n), r))
    picked = draw(st.lists(st.sampled_from(all_sets), unique=True, max_size=len(all_sets)))
    return RGraph.from_edges(r, n, picked)


def relabel(G, perm):
    return RGraph.from_edges(G.r, G.n, ([perm[v] for v in e] for e in G.edges))


class TestRGraph:
    def test_rejects_bad_edges(self):
        with pytest.raises(DomainError):
            RGraph(3, 4, frozenset({(0, 1)}))
        with pytest.raises(DomainError):
            RGraph(3, 3, frozenset({(0, 1, 3)}))
        with pytest.raises(DomainError):
            RGraph(3, 4, frozenset({(2, 1, 0)}))
        with pytest.raises(DomainError):
            RGraph.from_edges(3, 4, [(0, 0, 1)])

    def test_duplicate_edges_collapse(self):
        G = RGraph.from_edges(3, 4, [(0, 1, 2), (2, 1, 0)])
        assert len(G) == 1

    def test_json_and_text_round_trip(self):
        G = g3(6, [(0, 1, 2), (3, 4, 5), (0, 2, 4)])
        assert RGraph.from_json(G.to_json()) == G
        assert RGraph.from_text(G.to_text()) == G
        assert G.to_json()["edges"] == sorted(G.to_json()["edges"])
        assert G.to_text().splitlines()[0] == "3 6"


class TestShadow:
    def test_single_edge(self):
        assert shadow(g3(3, [(0, 1, 2)])).edges == {(0, 1), (0, 2), (1, 2)}

    def test_complete(self):
        assert len(shadow(complete(3, 4))) == 6

    def test_vertices(self):
        S = shadow(RGraph.from_edges(3, 4, [(0, 1, 2), (0, 1, 3)]), 2)
        assert S.edges == {(0,), (1,), (2,), (3,)}

    def test_order_out_of_range(self):
        with pytest.raises(DomainError):
            shadow(complete(3, 4), 3)
        with pytest.raises(DomainError):
            shadow(complete(3, 4), 0)

    @given(graphs(r=4, max_n=7))
    @settings(max_examples=40, deadline=None)
    def test_shadow_composes(self, G):
        for s, s2 in [(1, 2), (1, 3), (2, 3)]:
            assert shadow(shadow(G, s), s2 - s) == shadow(G, s2)

    @given(graphs())
    @settings(max_examples=60, deadline=None)
    def test_nonempty_shadow_has_at_least_r_sets(self, G):
        if len(G):
            assert len(shadow(G)) >= G.r


class TestDensities:
    def test_examples(self):
        assert densities(complete(3, 4)) == (1.0, 1.0)
        assert densities(g3(4, [(0, 1, 2)])) == (0.25, 0.5)
        assert densities(empty(3, 5)) == (0.0, 0.0)

    def test_small_n(self):
        with pytest.raises(DomainError):
            densities(empty(3, 2))


class TestEmbeds:
    def test_single_edge(self):
        ok, w = embeds(g3(3, [(0, 1, 2)]), g3(5, [(1, 3, 4)]))
        assert ok and sorted(w.values()) == [1, 3, 4]

    def test_complete(self):
        assert embeds(complete(3, 4), complete(3, 5))[0]
        assert embeds(complete(3, 5), complete(3, 4)) == (False, None)

    def test_uniformity_mismatch(self):
        with pytest.raises(DomainError):
            embeds(complete(2, 3), complete(3, 3))

    def test_witness_is_valid(self):
        F = g3(4, [(0, 1, 2), (0, 1, 3)])
        G = g3(6, [(0, 4, 5), (2, 4, 5), (1, 2, 3)])
        ok, w = embeds(F, G)
        assert ok
        assert len(set(w.values())) == F.n
        assert all(tuple(sorted(w[v] for v in e)) in G.edges for e in F.edges)

    @given(graphs(max_n=5))
    @settings(max_examples=40, deadline=None)
    def test_reflexive_and_monotone(self, G):
        assert embeds(G, G)[0]
        if len(G):
            smaller = RGraph(G.r, G.n, frozenset(sorted(G.edges)[1:]))
            assert embeds(smaller, G)[0]


class TestCanonicalForm:
    def test_examples(self):
        assert canonical_form(g3(4, [(0, 1, 2)])) == canonical_form(g3(4, [(1, 2, 3)]))
        forms = {canonical_form(g3(4, [e])) for e in itertools.combinations(range(4), 3)}
        assert len(forms) == 1
        minus = RGraph(3, 4, complete(3, 4).edges - {(0, 1, 2)})
        assert canonical_form(complete(3, 4)) != canonical_form(minus)

    def test_limit(self):
        with pytest.raises(CapacityError):
            canonical_form(empty(3, 11))

    def test_from_canonical_round_trip(self):
        G = g3(5, [(0, 1, 2), (2, 3, 4)])
        H = from_canonical(canonical_form(G))
        assert isomorphic(G, H)

    def test_invariant_under_100_relabelings(self):
        rng = random.Random(7)
        G = g3(7, [(0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 6), (0, 5, 6), (1, 2, 6)])
        key = canonical_form(G)
        for _ in range(100):
            perm = list(range(7))
            rng.shuffle(perm)
            assert canonical_form(relabel(G, perm)) == key

    def test_separates_nonisomorphic_pairs_exhaustively(self):
        # every 3-graph on 5 vertices with 3 edges: classes agree with brute-force isomorphism
        all_sets = list(itertools.combinations(range(5), 3))
        gs = [g3(5, es) for es in itertools.combinations(all_sets, 3)]
        perms = list(itertools.permutations(range(5)))

        def brute_key(G):
            return min(tuple(sorted(tuple(sorted(p[v] for v in e)) for e in G.edges)) for p in perms)

        by_canon = {}
        for G in gs:
            by_canon.setdefault(canonical_form(G), set()).add(brute_key(G))
        assert all(len(v) == 1 for v in by_canon.values())
        assert len(by_canon) == len({brute_key(G) for G in gs})


    @given(graphs(max_n=6), st.data())
    @settings(max_examples=80, deadline=None)
    def test_equal_forms_iff_isomorphic(self, G, data):
        all_sets = list(itertools.combinations(range(G.n), 3))
        es = data.draw(st.lists(st.sampled_from(all_sets), unique=True, min_size=len(G), max_size=len(G)))
        H = RGraph.from_edges(3, G.n, es)
        # same size, so an embedding is an isomorphism
        assert (canonical_form(G) == canonical_form(H)) == embeds(G, H)[0]

    def test_symmetric_graphs_at_the_limit(self):
        for G in (complete(3, 10), empty(3, 10), complete(2, 10)):
            assert from_canonical(canonical_form(G)) == G


class TestEditDistance:
    def test_examples(self):
        G = g3(5, [(0, 1, 2), (1, 2, 3)])
        assert edit_distance(G, G) == 0
        assert edit_distance(g3(3, [(0, 1, 2)]), empty(3, 3)) == 1
        minus = RGraph(3, 4, complete(3, 4).edges - {(1, 2, 3)})
        assert edit_distance(complete(3, 4), minus) == 1

    def test_isomorphic_graphs_have_distance_zero(self):
        assert edit_distance(g3(4, [(0, 1, 2)]), g3(4, [(1, 2, 3)])) == 0

    def test_errors(self):
        with pytest.raises(DomainError):
            edit_distance(empty(3, 4), empty(3, 5))
        with pytest.raises(CapacityError):
            edit_distance(empty(3, 9), empty(3, 9))

    @given(graphs(max_n=5), st.data())
    @settings(max_examples=30, deadline=None)
    def test_metric_properties(self, G, data):
        all_sets = list(itertools.combinations(range(G.n), 3))

        def other():
            es = data.draw(st.lists(st.sampled_from(all_sets), unique=True))
            return RGraph.from_edges(3, G.n, es)

        H, K = other(), other()
        assert edit_distance(G, G) == 0
        assert edit_distance(G, H) == edit_distance(H, G)
        assert edit_distance(G, K) <= edit_distance(G, H) + edit_distance(H, K)
        assert edit_distance(G, H) <= len(G.edges ^ H.edges)


class TestGraphUtils:
    def test_link(self):
        assert link(g3(3, [(0, 1, 2)]), 0).edges == {(1, 2)}

    def test_complement(self):
        assert len(complement(complete(3, 5))) == 0
        assert complement(complement(g3(5, [(0, 1, 2)]))) == g3(5, [(0, 1, 2)])

    def test_double_vertex(self):
        D = double_vertex(g3(3, [(0, 1, 2)]), 0)
        assert D.n == 4 and len(D) == 2
        assert link(D, 3).edges == link(D, 0).edges

    def test_degrees(self):
        G = g3(5, [(0, 1, 2), (0, 1, 3)])
        assert degrees(G) == [2, 2, 1, 1, 0]
        assert min_degree(G) == 0 and max_degree(G) == 2

    def test_induced_subgraph(self):
        G = complete(3, 5)
        H = induced_subgraph(G, [4, 2, 0])
        assert H == complete(3, 3)

    def test_invalid_vertex(self):
        with pytest.raises(DomainError):
            link(complete(3, 4), 4)
        with pytest.raises(DomainError):
            double_vertex(complete(3, 4), -1)
