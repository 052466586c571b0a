from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temprel.algebra import (
    BASE_RELATIONS,
    EMPTY,
    FULL,
    Allen,
    TemporalGraph,
    TooManyNodesError,
    UnsupportedSchemeError,
    allen_compose,
    allen_to_label,
    check_consistency,
    converse,
    entailed_labels,
    label_to_allen,
    random_crisp_graph,
    realizable,
    relation_between,
)
from temprel.corpus import SCHEME_LABELS, RelationLabel, Scheme

GRID = 7
INTERVALS = [(s, e) for s in range(GRID) for e in range(s + 1, GRID)]


def _brute_composition():
    """Relations seen between x and z over all integer interval triples."""
    table = {}
    for x, y, z in product(INTERVALS, repeat=3):
        key = (relation_between(x, y), relation_between(y, z))
        table[key] = table.get(key, EMPTY) | relation_between(x, z)
    return table


@pytest.fixture(scope="module")
def brute_table():
    return _brute_composition()


class TestComposition:
    def test_matches_interval_enumeration(self, brute_table):
        for r1, r2 in product(BASE_RELATIONS, repeat=2):
            assert allen_compose(r1, r2) == brute_table[(r1, r2)], (r1, r2)

    def test_before_before(self):
        assert allen_compose(Allen.BEFORE, Allen.BEFORE) == Allen.BEFORE

    def test_after_contains(self):
        assert allen_compose(Allen.AFTER, Allen.CONTAINS) == Allen.AFTER

    @given(st.integers(0, (1 << 13) - 1))
    def test_equals_is_identity(self, bits):
        s = Allen(bits)
        assert allen_compose(Allen.EQUALS, s) == s
        assert allen_compose(s, Allen.EQUALS) == s

    @given(st.integers(0, (1 << 13) - 1))
    def test_converse_involution(self, bits):
        assert converse(converse(Allen(bits))) == Allen(bits)

    @given(st.integers(1, (1 << 13) - 1), st.integers(1, (1 << 13) - 1))
    def test_composition_converse_law(self, a, b):
        a, b = Allen(a), Allen(b)
        assert converse(allen_compose(a, b)) == allen_compose(converse(b), converse(a))

    def test_empty_set_absorbs(self):
        assert allen_compose(EMPTY, FULL) == EMPTY


class TestLabelSemantics:
    def test_coarse3_before(self):
        assert label_to_allen(RelationLabel(Scheme.COARSE3, "BEFORE")) == Allen.BEFORE | Allen.MEETS

    def test_coarse3_partitions_base_relations(self):
        images = [label_to_allen(RelationLabel(Scheme.COARSE3, lab)) for lab in SCHEME_LABELS[Scheme.COARSE3]]
        union = EMPTY
        for a, b in combinations(images, 2):
            assert a & b == EMPTY
        for img in images:
            union |= img
        assert union == FULL

    def test_norm6_includes(self):
        assert label_to_allen(RelationLabel(Scheme.NORM6, "INCLUDES")) == Allen.CONTAINS

    def test_raw_labels_have_no_semantics(self):
        with pytest.raises(UnsupportedSchemeError):
            label_to_allen(RelationLabel(Scheme.RAW14, "BEFORE"))

    def test_allen_to_label_reads_both_directions(self):
        assert allen_to_label(Allen.DURING, Scheme.NORM6) == ("INCLUDES", True)
        assert allen_to_label(Allen.MET_BY, Scheme.COARSE3) == ("AFTER", False)
        assert allen_to_label(Allen.OVERLAPS, Scheme.NORM6) is None


class TestEntailment:
    def test_after_after(self):
        assert entailed_labels("AFTER", "AFTER", Scheme.COARSE3) == {"AFTER"}

    def test_before_before(self):
        assert entailed_labels("BEFORE", "BEFORE", Scheme.COARSE3) == {"BEFORE"}

    def test_overlap_overlap_by_sampling(self):
        rng = np.random.default_rng(0)
        seen = set()
        coarse = {"BEFORE": Allen.BEFORE | Allen.MEETS, "AFTER": Allen.AFTER | Allen.MET_BY}
        for _ in range(20000):
            x, y, z = (INTERVALS[i] for i in rng.integers(len(INTERVALS), size=3))
            if any(relation_between(x, y) & v for v in coarse.values()):
                continue
            if any(relation_between(y, z) & v for v in coarse.values()):
                continue
            rel = relation_between(x, z)
            seen.add(next((k for k, v in coarse.items() if rel & v), "OVERLAP"))
        assert seen == {"BEFORE", "AFTER", "OVERLAP"}
        assert entailed_labels("OVERLAP", "OVERLAP", Scheme.COARSE3) == seen

    def test_sample_rules(self):
        # before(x,y) & before(y,z) -> before(x,z)
        assert entailed_labels("BEFORE", "BEFORE", Scheme.COARSE3) == {"BEFORE"}
        # after(x,y) & before(z,y) -> after(x,z); before(z,y) reads as after(y,z)
        assert entailed_labels("AFTER", "AFTER", Scheme.COARSE3) == {"AFTER"}
        # after(x,y) & includes(y,z) -> after(x,z)
        comp = allen_compose(label_to_allen(RelationLabel(Scheme.COARSE3, "AFTER")),
                             label_to_allen(RelationLabel(Scheme.NORM6, "INCLUDES")))
        assert comp & ~label_to_allen(RelationLabel(Scheme.COARSE3, "AFTER")) == EMPTY


def _triangle(scheme=Scheme.COARSE3):
    g = TemporalGraph(scheme)
    g.add_edge("A", "B", "AFTER")
    g.add_edge("B", "C", "AFTER")
    g.add_edge("C", "A", "AFTER")
    return g


class TestConsistency:
    def test_cyclic_after_triangle(self):
        g = _triangle()
        result = check_consistency(g)
        assert not result.consistent
        assert set(result.witness) <= {"A", "B", "C"}
        assert not realizable(g)

    def test_transitive_before_chain(self):
        g = TemporalGraph(Scheme.COARSE3)
        g.add_edge("A", "B", "BEFORE")
        g.add_edge("B", "C", "BEFORE")
        g.add_edge("A", "C", "BEFORE")
        assert check_consistency(g).consistent
        assert realizable(g)

    def test_single_edge(self):
        g = TemporalGraph(Scheme.NORM6)
        g.add_edge("A", "B", "ENDS")
        assert check_consistency(g)

    def test_edge_orientation_is_respected(self):
        g = TemporalGraph(Scheme.COARSE3)
        g.add_edge("A", "B", "BEFORE")
        g.add_edge("C", "B", "AFTER")
        g.add_edge("C", "A", "AFTER")
        assert check_consistency(g).consistent
        h = TemporalGraph(Scheme.COARSE3)
        h.add_edge("A", "B", "BEFORE")
        h.add_edge("B", "C", "BEFORE")
        h.add_edge("C", "A", "BEFORE")
        assert not check_consistency(h).consistent

    def test_interval_labels_are_realizable(self):
        rng = np.random.default_rng(11)
        for scheme in (Scheme.COARSE3, Scheme.NORM6):
            for _ in range(50):
                ivs = [INTERVALS[i] for i in rng.integers(len(INTERVALS), size=5)]
                g = TemporalGraph(scheme, [f"n{i}" for i in range(5)])
                for i, j in combinations(range(5), 2):
                    found = allen_to_label(relation_between(ivs[i], ivs[j]), scheme)
                    if found is None:
                        continue
                    label, swapped = found
                    a, b = (f"n{j}", f"n{i}") if swapped else (f"n{i}", f"n{j}")
                    g.add_edge(a, b, label)
                assert realizable(g)
                assert check_consistency(g).consistent

    @pytest.mark.parametrize("scheme", [Scheme.COARSE3, Scheme.NORM6])
    def test_agrees_with_realizability(self, scheme):
        rng = np.random.default_rng(5)
        for _ in range(200):
            g = random_crisp_graph(rng, int(rng.integers(2, 6)), scheme)
            assert check_consistency(g).consistent == realizable(g)

    def test_realizable_node_limit(self):
        rng = np.random.default_rng(0)
        with pytest.raises(TooManyNodesError):
            realizable(random_crisp_graph(rng, 4, Scheme.COARSE3), max_nodes=3)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_triangle_agreement_property(self, seed):
        g = random_crisp_graph(np.random.default_rng(seed), 3, Scheme.NORM6, density=1.0)
        assert bool(check_consistency(g)) == realizable(g)


class TestGraph:
    def test_one_edge_per_pair(self):
        g = TemporalGraph(Scheme.COARSE3)
        g.add_edge("A", "B", "BEFORE")
        with pytest.raises(ValueError):
            g.add_edge("B", "A", "AFTER")

    def test_posterior_must_sum_to_one(self):
        g = TemporalGraph(Scheme.COARSE3)
        with pytest.raises(ValueError):
            g.add_edge("A", "B", {"BEFORE": 0.5, "AFTER": 0.2})
        g.add_edge("A", "B", {"BEFORE": 0.5, "AFTER": 0.2, "OVERLAP": 0.3})
        assert g.argmax_labels() == {("A", "B"): "BEFORE"}

    def test_reversed_read(self):
        g = TemporalGraph(Scheme.NORM6)
        g.add_edge("A", "B", "INCLUDES")
        assert g.allen("B", "A") == Allen.DURING
