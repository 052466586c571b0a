import numpy as np
import pytest

from synthdata import pair_corpus
from temprel.algebra import TemporalGraph, check_consistency
from temprel.corpus import Scheme, corpus_pairs, gold_labels
from temprel.emtrl import (
    Assignment,
    EmConfig,
    EmModel,
    PairData,
    e_step,
    init_random,
    init_rules,
    init_supervised,
    m_step,
    map_clusters_to_labels,
    predict,
    predict_posteriors,
    run_em,
)
from temprel.features import EM_SLOTS
from temprel.rules import RuleBase, parse_attribute_rules
from temprel.synth import SynthConfig, generate

PLANTED = [({"tense": "past"}, {"tense": "present"}, "BEFORE"),
           ({"tense": "present"}, {"tense": "past"}, "AFTER"),
           ({"tense": "present"}, {"tense": "present"}, "OVERLAP")]


@pytest.fixture(scope="module")
def synth_corpus():
    corpus, _ = generate(SynthConfig(seed=1, total_pairs=600, feature_informativeness=0.9))
    return corpus


def _all_unassigned(pairs):
    labels = Scheme.COARSE3.labels
    return Assignment(Scheme.COARSE3, list(pairs), {p: None for p in pairs},
                      {p: np.full(len(labels), 1 / len(labels)) for p in pairs})


class TestInit:
    def test_random_is_seeded(self):
        pairs = [("d", f"a{i}", f"b{i}") for i in range(50)]
        assert init_random(pairs, Scheme.COARSE3, 4).labels == init_random(pairs, Scheme.COARSE3, 4).labels

    def test_random_is_uniform(self):
        pairs = [("d", f"a{i}", f"b{i}") for i in range(3000)]
        a = init_random(pairs, Scheme.COARSE3, 0)
        sigma = np.sqrt(3000 * (1 / 3) * (2 / 3))
        for label in Scheme.COARSE3.labels:
            assert abs(sum(v == label for v in a.labels.values()) - 1000) < 5 * sigma

    def test_random_single_pair(self):
        a = init_random([("d", "a", "b")], Scheme.NORM6, 9)
        assert a.labels[("d", "a", "b")] in Scheme.NORM6.labels

    def test_supervised_full_fraction(self):
        docs = pair_corpus(PLANTED * 4)
        gold = gold_labels(docs)
        a = init_supervised(corpus_pairs(docs), gold, 1.0, seed=0)
        assert a.labels == gold and a.pinned == frozenset(gold)

    def test_supervised_stratified_ceiling(self):
        pairs = [("d", f"a{i}", f"b{i}") for i in range(200)]
        gold = {p: "BEFORE" if i < 100 else "AFTER" if i < 150 else "OVERLAP" for i, p in enumerate(pairs)}
        a = init_supervised(pairs, gold, 0.1, seed=3)
        pinned = [gold[p] for p in a.pinned]
        assert (pinned.count("BEFORE"), pinned.count("AFTER"), pinned.count("OVERLAP")) == (10, 5, 5)
        assert all(a.labels[p] is None for p in pairs if p not in a.pinned)
        b = init_supervised(pairs[:7], {p: "BEFORE" for p in pairs[:7]}, 0.1, seed=3)
        assert len(b.pinned) == 1

    def test_supervised_bad_fraction(self):
        with pytest.raises(ValueError):
            init_supervised([], {}, 0.0, seed=0)

    def test_rules(self):
        docs = pair_corpus([({"tense": "past", "event_class": "occurrence"},
                             {"tense": "past", "aspect": "perfect", "event_class": "state"}, "AFTER"),
                            ({}, {}, "OVERLAP")])
        rb = RuleBase(attribute_rules=parse_attribute_rules(
            "if conjBetweenEvents = YES && event2.aspect = PERFECTIVE\nThen\nrelation(event1, event2) = AFTER"))
        a = init_rules(corpus_pairs(docs), docs, rb)
        assert list(a.labels.values()) == ["AFTER", None]


class TestMStep:
    def test_add_one_estimate(self):
        docs = pair_corpus([({"tense": "past"}, {"tense": "past"}, "BEFORE"),
                            ({"tense": "future"}, {"tense": "future"}, "BEFORE"),
                            ({"tense": "past"}, {"tense": "present"}, "BEFORE")])
        a = init_supervised(corpus_pairs(docs), gold_labels(docs), 1.0, seed=0)
        model = m_step(a, docs, Scheme.COARSE3)
        assert model.prob("tense_match", "true", "BEFORE") == pytest.approx(0.5)
        assert model.prob("tense_match", "false", "BEFORE") == pytest.approx(2 / 6)
        assert model.prob("tense_match", "ABSENT", "BEFORE") == pytest.approx(1 / 6)

    def test_empty_class_is_uniform(self):
        docs = pair_corpus(PLANTED[:1] * 3)
        model = m_step(init_supervised(corpus_pairs(docs), gold_labels(docs), 1.0, seed=0), docs)
        for slot in EM_SLOTS:
            column = model.table(slot)[:, Scheme.COARSE3.index("OVERLAP")]
            assert np.allclose(column, 1 / column.shape[0])

    def test_tables_normalized(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        model = m_step(init_random(pairs, Scheme.COARSE3, 0), synth_corpus)
        for slot in EM_SLOTS:
            assert np.allclose(model.table(slot).sum(axis=0), 1.0, atol=1e-9)
        assert model.class_totals.sum() == len(pairs)

    def test_order_independent(self, synth_corpus):
        rng = np.random.default_rng(0)
        pairs = corpus_pairs(synth_corpus)
        a = init_random(pairs, Scheme.COARSE3, 2)
        shuffled = [pairs[i] for i in rng.permutation(len(pairs))]
        b = Assignment(a.scheme, shuffled, a.labels, a.posteriors)
        ma, mb = m_step(a, synth_corpus), m_step(b, synth_corpus)
        assert np.array_equal(ma.parameters(), mb.parameters())

    def test_dump_round_trip(self, synth_corpus, tmp_path):
        model = m_step(init_random(corpus_pairs(synth_corpus), Scheme.COARSE3, 1), synth_corpus)
        model.save(tmp_path / "em.tsv")
        back = EmModel.load(tmp_path / "em.tsv")
        assert back.dump() == model.dump()
        assert np.array_equal(back.parameters(), model.parameters())


class TestEStep:
    def test_uniform_model(self):
        docs = pair_corpus(PLANTED * 2)
        pairs = corpus_pairs(docs)
        model = m_step(_all_unassigned(pairs), docs)
        a = e_step(model, docs)
        for p in pairs:
            assert np.allclose(a.posteriors[p], 1 / 3)
            assert a.labels[p] == "BEFORE"
        assert set(predict(model, docs, pairs).values()) == {"BEFORE"}

    def test_planted_tense_pair(self):
        docs = pair_corpus(PLANTED * 5)
        pairs = corpus_pairs(docs)
        model = m_step(init_supervised(pairs, gold_labels(docs), 1.0, seed=0), docs)
        a = e_step(model, docs)
        assert a.labels == gold_labels(docs)
        assert predict(model, docs, pairs) == predict(model, docs, pairs)

    def test_posteriors_normalized(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        model = m_step(init_random(pairs, Scheme.COARSE3, 0), synth_corpus)
        for post in predict_posteriors(model, synth_corpus, pairs).values():
            assert abs(post.sum() - 1.0) < 1e-9

    def test_unseen_values_fall_into_bucket(self):
        train = pair_corpus(PLANTED * 3)
        model = m_step(init_supervised(corpus_pairs(train), gold_labels(train), 1.0, seed=0), train)
        test = pair_corpus([({"tense": "future", "word": "zzz"}, {"tense": "future"}, "OVERLAP")])
        (label,) = predict(model, test, corpus_pairs(test)).values()
        assert label in Scheme.COARSE3.labels


class TestRunEm:
    def test_zero_iterations_returns_init_model(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        init = init_supervised(pairs, gold_labels(synth_corpus), 0.2, seed=0)
        result = run_em(synth_corpus, init, EmConfig(max_iters=0))
        assert result.trace == [] and result.assignment is init
        assert np.array_equal(result.model.parameters(), m_step(init, synth_corpus).parameters())

    def test_supervised_init_converges(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        result = run_em(synth_corpus, init_supervised(pairs, gold_labels(synth_corpus), 0.1, seed=0))
        assert result.converged
        assert len(result.trace) <= 30
        assert result.trace[-1].flips == 0

    def test_pinned_pairs_never_move(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        gold = gold_labels(synth_corpus)
        init = init_supervised(pairs, gold, 0.3, seed=5)
        result = run_em(synth_corpus, init, EmConfig(max_iters=30, param_tol=-1.0))
        assert len(result.trace) == 30
        assert all(result.assignment.labels[p] == gold[p] for p in init.pinned)

    def test_likelihood_and_objective_monotone(self, synth_corpus):
        pairs = corpus_pairs(synth_corpus)
        result = run_em(synth_corpus, init_random(pairs, Scheme.COARSE3, 3))
        ll = np.array([r.log_likelihood for r in result.trace])
        obj = np.array([r.objective for r in result.trace])
        assert np.all(np.diff(ll) >= -1e-6 * np.abs(ll[1:]))
        assert np.all(np.diff(obj) >= -1e-6 * np.abs(obj[1:]))

    @pytest.mark.parametrize("method", ["greedy", "ilp"])
    def test_repair_outputs_consistent(self, method):
        corpus, _ = generate(SynthConfig(seed=2, documents=12, pair_link_density=0.9, events_per_doc=(4, 6)))
        pairs = corpus_pairs(corpus)
        result = run_em(corpus, init_random(pairs, Scheme.COARSE3, 0), EmConfig(max_iters=5, repair=method))
        for doc_id, doc_pairs in PairData(corpus, pairs).by_document().items():
            g = TemporalGraph(Scheme.COARSE3)
            for p in doc_pairs:
                g.add_edge(p[1], p[2], result.assignment.labels[p])
            assert check_consistency(g).consistent, doc_id

    def test_unknown_repair(self, synth_corpus):
        with pytest.raises(ValueError):
            run_em(synth_corpus, init_random(corpus_pairs(synth_corpus), Scheme.COARSE3, 0), EmConfig(repair="x"))


class TestClusterMapping:
    def test_cyclic_relabeling(self):
        rng = np.random.default_rng(0)
        labels = Scheme.COARSE3.labels
        gold = {("d", str(i), "x"): labels[int(rng.integers(3))] for i in range(60)}
        shift = {labels[i]: labels[(i + 1) % 3] for i in range(3)}
        mapping, acc = map_clusters_to_labels({p: shift[g] for p, g in gold.items()}, gold, Scheme.COARSE3)
        assert acc == 1.0
        assert all(mapping[shift[g]] == g for g in labels)

    def test_identity_when_optimal(self):
        gold = {("d", str(i), "x"): lab for i, lab in enumerate(["BEFORE", "AFTER", "OVERLAP"] * 3)}
        mapping, acc = map_clusters_to_labels(gold, gold, Scheme.COARSE3)
        assert mapping == {lab: lab for lab in Scheme.COARSE3.labels} and acc == 1.0

    def test_mapping_never_hurts(self):
        rng = np.random.default_rng(1)
        labels = Scheme.COARSE3.labels
        for _ in range(20):
            gold = {("d", str(i), "x"): labels[int(rng.integers(3))] for i in range(300)}
            pred = {p: labels[int(rng.integers(3))] for p in gold}
            raw = np.mean([pred[p] == gold[p] for p in gold])
            assert map_clusters_to_labels(pred, gold, Scheme.COARSE3)[1] >= raw
