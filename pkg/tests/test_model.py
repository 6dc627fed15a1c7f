import pickle
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgm import (
    Context,
    ContextKeysMismatch,
    EdgeAbsent,
    EmptyConditioningSet,
    NotChordal,
    StratifiedGraph,
    Stratum,
    UndirectedGraph,
    all_instances,
    derive_restrictions,
    dimension,
    graph_dimension,
    is_chordal,
    is_hierarchical,
    validate,
)
from sgm.distribution import mask_of
from sgm.model import context_restriction, forced_zero, integer_rank

from conftest import graph, model
from oracles import model_dimension_numeric


def masks(*subsets_1based):
    return {mask_of(v - 1 for v in s) for s in subsets_1based}


def oracle_instances(sg):
    return [(e, c.as_dict()) for e, c in sg.instances()]


def chordal_graphs(d):
    pairs = list(combinations(range(d), 2))
    for bits in range(1 << len(pairs)):
        g = UndirectedGraph(d, frozenset(p for i, p in enumerate(pairs) if bits >> i & 1))
        if is_chordal(g):
            yield g


class TestContext:
    def test_sorted_and_hashable(self):
        assert Context({2: 1, 0: 0}) == Context([(0, 0), (2, 1)])
        assert len({Context({1: 1}), Context({1: 1})}) == 1

    def test_immutable(self):
        with pytest.raises(AttributeError):
            Context({0: 1}).items = ()

    def test_bad_value(self):
        with pytest.raises(ValueError):
            Context({0: 2})

    def test_pickle(self):
        c = Context({3: 1, 1: 0})
        assert pickle.loads(pickle.dumps(c)) == c

    def test_values_in_label_order(self):
        assert Context({4: 0, 1: 1}).values() == (1, 0)


class TestStratifiedGraph:
    def test_strata_merged_per_edge(self, complete3):
        sg = StratifiedGraph(complete3, (
            Stratum((1, 2), frozenset([Context({0: 1})])),
            Stratum((2, 1), frozenset([Context({0: 0})])),
        ))
        assert len(sg.strata) == 1
        assert len(sg.instances()) == 2

    def test_empty_stratum_rejected(self):
        with pytest.raises(ValueError):
            Stratum((0, 1), frozenset())

    def test_key_is_canonical(self, complete3):
        a = model(complete3, ((2, 3), {1: 1}), ((1, 3), {2: 1}))
        b = model(complete3, ((1, 3), {2: 1}), ((2, 3), {1: 1}))
        assert a.key() == b.key()
        assert a == b

    def test_all_instances_complete3(self, complete3):
        assert len(all_instances(complete3)) == 6

    def test_all_instances_without_common_neighbours(self, edge_and_isolated):
        assert all_instances(edge_and_isolated) == []


class TestValidate:
    def test_one_csi(self, one_csi):
        validate(one_csi)

    def test_context_on_non_neighbour_zero(self):
        g = graph(3, (1, 2), (1, 3))
        with pytest.raises(ContextKeysMismatch):
            validate(model(g, ((1, 2), {3: 0})))

    def test_context_on_non_neighbour_one(self):
        g = graph(3, (1, 2), (1, 3))
        with pytest.raises(ContextKeysMismatch):
            validate(model(g, ((1, 2), {3: 1})))

    def test_chordless_cycle_rejected(self, chordless_graph):
        with pytest.raises(NotChordal):
            validate(model(chordless_graph, ((3, 4), {5: 1})))

    def test_missing_edge(self, edge_and_isolated):
        with pytest.raises(EdgeAbsent):
            validate(model(edge_and_isolated, ((1, 3), {2: 1})))

    def test_empty_conditioning_set(self, edge_and_isolated):
        with pytest.raises(EmptyConditioningSet):
            validate(model(edge_and_isolated, ((1, 2), {})))

    def test_partial_context_keys(self):
        g = UndirectedGraph.complete(4)
        with pytest.raises(ContextKeysMismatch):
            validate(model(g, ((1, 2), {3: 1})))


class TestDeriveRestrictions:
    def test_one_csi_context_one(self, one_csi):
        rs = derive_restrictions(one_csi)
        assert rs.zeroed == frozenset()
        assert len(rs.linear) == 1
        assert set(rs.linear[0].terms) == masks((2, 3), (1, 2, 3))

    def test_one_csi_context_zero(self, complete3):
        rs = derive_restrictions(model(complete3, ((2, 3), {1: 0})))
        assert set(rs.linear[0].terms) == masks((2, 3))

    def test_edge_and_isolated_zeroed(self, edge_and_isolated):
        rs = derive_restrictions(StratifiedGraph(edge_and_isolated))
        assert rs.zeroed == frozenset(masks((1, 3), (2, 3), (1, 2, 3)))
        assert rs.linear == ()

    def test_two_ones_context(self):
        # Z = {3, 4}: four terms between {1,2} and {1,2,3,4}
        r = context_restriction((0, 1), Context({2: 1, 3: 1}))
        assert set(r.terms) == masks((1, 2), (1, 2, 3), (1, 2, 4), (1, 2, 3, 4))

    @given(st.integers(2, 5), st.data())
    @settings(max_examples=60, deadline=None)
    def test_terms_contain_edge(self, d, data):
        g = UndirectedGraph.complete(d)
        avail = all_instances(g)
        chosen = data.draw(st.lists(st.sampled_from(avail), max_size=4, unique=True)) if avail else []
        sg = StratifiedGraph.from_instances(g, chosen)
        for (edge, ctx), r in zip(sg.instances(), derive_restrictions(sg).linear):
            pair = mask_of(edge)
            allowed = pair | mask_of(ctx.nodes)
            assert all(t & pair == pair and t & ~allowed == 0 for t in r.terms)

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_all_zero_context_is_single_pair_term(self, d):
        g = UndirectedGraph.complete(d)
        ctx = Context({v: 0 for v in range(2, d)})
        rs = derive_restrictions(StratifiedGraph.from_instances(g, [((0, 1), ctx)]))
        assert set(rs.linear[0].terms) == {mask_of((0, 1))}


class TestDimension:
    def test_saturated3(self, complete3):
        assert dimension(StratifiedGraph(complete3)) == 7

    def test_one_csi(self, one_csi):
        assert dimension(one_csi) == 6
        assert model_dimension_numeric(3, one_csi.graph.edges, oracle_instances(one_csi)) == 6

    def test_edge_and_isolated(self, edge_and_isolated):
        assert dimension(StratifiedGraph(edge_and_isolated)) == 4
        assert graph_dimension(edge_and_isolated) == 4

    @pytest.mark.parametrize("d", range(1, 7))
    def test_saturated(self, d):
        assert dimension(StratifiedGraph(UndirectedGraph.complete(d))) == 2**d - 1

    def test_full_stratum_equals_edge_removal(self, complete3):
        full = model(complete3, ((2, 3), {1: 0}), ((2, 3), {1: 1}))
        assert dimension(full) == dimension(StratifiedGraph(complete3.without_edge(1, 2)))

    @given(st.integers(3, 4), st.data())
    @settings(max_examples=40, deadline=None)
    def test_matches_numeric_jacobian(self, d, data):
        graphs = list(chordal_graphs(d))
        g = data.draw(st.sampled_from(graphs))
        avail = all_instances(g)
        chosen = data.draw(st.lists(st.sampled_from(avail), max_size=5, unique=True)) if avail else []
        sg = StratifiedGraph.from_instances(g, chosen)
        assert dimension(sg) == model_dimension_numeric(d, g.edges, oracle_instances(sg))
        assert dimension(sg) <= graph_dimension(g)

    @given(st.integers(3, 5), st.data())
    @settings(max_examples=40, deadline=None)
    def test_adding_context_never_increases(self, d, data):
        g = UndirectedGraph.complete(d)
        avail = all_instances(g)
        chosen = data.draw(st.lists(st.sampled_from(avail), min_size=1, max_size=6, unique=True))
        smaller = StratifiedGraph.from_instances(g, chosen[:-1])
        larger = StratifiedGraph.from_instances(g, chosen)
        assert dimension(larger) <= dimension(smaller)


class TestIntegerRank:
    @given(st.integers(1, 8), st.integers(1, 8), st.data())
    @settings(max_examples=200, deadline=None)
    def test_matches_numpy(self, r, c, data):
        rows = [data.draw(st.lists(st.integers(0, 1), min_size=c, max_size=c)) for _ in range(r)]
        assert integer_rank(rows) == np.linalg.matrix_rank(np.array(rows, dtype=float))

    def test_empty(self):
        assert integer_rank([]) == 0
        assert integer_rank([[0, 0]]) == 0


class TestHierarchy:
    def test_no_strata(self, complete3, edge_and_isolated):
        assert is_hierarchical(StratifiedGraph(complete3))
        assert is_hierarchical(StratifiedGraph(edge_and_isolated))

    def test_context_zero_is_not_hierarchical(self, complete3):
        sg = model(complete3, ((2, 3), {1: 0}))
        assert not is_hierarchical(sg)
        assert mask_of((1, 2)) in forced_zero(derive_restrictions(sg))

    def test_one_csi_is_hierarchical(self, one_csi):
        assert is_hierarchical(one_csi)
        # the sum constraint leaves both coordinates free individually
        assert not forced_zero(derive_restrictions(one_csi))

    def test_both_contexts_forces_pair_and_triple(self, complete3):
        sg = model(complete3, ((2, 3), {1: 0}), ((2, 3), {1: 1}))
        assert forced_zero(derive_restrictions(sg)) == masks((2, 3), (1, 2, 3))
        assert is_hierarchical(sg)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_every_graph_without_strata(self, d):
        assert all(is_hierarchical(StratifiedGraph(g)) for g in chordal_graphs(d))
