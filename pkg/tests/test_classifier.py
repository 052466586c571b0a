import numpy as np
import pytest

from synthdata import COARSE, receding_direction, separable_three_class
from temprel.classifier import (
    DecisionHyperplane,
    HyperplaneBank,
    OvoLinearModel,
    TrainConfig,
    TrainingError,
    classify,
    confidence,
    distance,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    train,
    train_split,
)
from temprel.corpus import Scheme


def _hand_model():
    # BEFORE/AFTER, BEFORE/OVERLAP, AFTER/OVERLAP
    planes = [
        DecisionHyperplane(np.array([1.0, 0.0]), 0.5, ("BEFORE", "AFTER")),
        DecisionHyperplane(np.array([0.0, 2.0]), -1.0, ("BEFORE", "OVERLAP")),
        DecisionHyperplane(np.array([1.0, -1.0]), 0.0, ("AFTER", "OVERLAP")),
    ]
    return OvoLinearModel(Scheme.COARSE3, "single", {"single": HyperplaneBank(COARSE, planes)})


class TestDistance:
    def test_dot_product(self):
        h = DecisionHyperplane(np.array([1.0, 0.0]), 0.0, ("BEFORE", "AFTER"))
        assert distance(h, np.array([2.0, 5.0])) == 2.0
        assert distance(h, {0: 2.0, 1: 5.0}) == 2.0

    def test_zero_vector_gives_bias(self):
        h = DecisionHyperplane(np.array([3.0, -1.0]), 0.25, ("BEFORE", "AFTER"))
        assert distance(h, np.zeros(2)) == 0.25
        assert distance(h, {}) == 0.25

    def test_hand_model(self):
        model = _hand_model()
        x = np.array([2.0, 3.0])
        got = [distance(h, x) for h in model.bank().hyperplanes]
        assert got == [2.5, 5.0, -1.0]

    def test_validation(self):
        with pytest.raises(ValueError):
            DecisionHyperplane(np.array([np.nan]), 0.0, ("BEFORE", "AFTER"))
        with pytest.raises(ValueError):
            DecisionHyperplane(np.array([1.0]), 0.0, ("BEFORE", "BEFORE"))
        with pytest.raises(ValueError):
            HyperplaneBank(COARSE, [])


class TestVotesAndConfidence:
    def test_hand_model_votes(self):
        # distances 2.5 (BEFORE), 5.0 (BEFORE), -1.0 (OVERLAP)
        label, votes = classify(_hand_model(), np.array([2.0, 3.0]))
        assert label == "BEFORE"
        assert votes == {"BEFORE": 2, "AFTER": 0, "OVERLAP": 1}

    def test_hand_model_confidence(self):
        # BEFORE sits first in both of its pairs: 2.5 + 5.0
        assert confidence(_hand_model(), np.array([2.0, 3.0])) == 7.5
        # OVERLAP sits second in both of its pairs: -(2*3 - 1) - (2 - 3)
        assert confidence(_hand_model(), np.array([2.0, 3.0]), label="OVERLAP") == 4.0

    def test_two_class_model(self):
        h = DecisionHyperplane(np.array([1.0, -2.0]), 0.5, ("BEFORE", "AFTER"))
        bank = HyperplaneBank(("BEFORE", "AFTER"), [h])
        for x in (np.array([3.0, 0.0]), np.array([0.0, 3.0])):
            label, votes = classify(bank, x)
            d = distance(h, x)
            assert votes == ({"BEFORE": 1, "AFTER": 0} if d > 0 else {"BEFORE": 0, "AFTER": 1})
            assert confidence(bank, x) == pytest.approx(abs(d))

    def test_cyclic_tie_goes_to_first_label(self):
        planes = [
            DecisionHyperplane(np.zeros(1), 1.0, ("BEFORE", "AFTER")),
            DecisionHyperplane(np.zeros(1), -1.0, ("BEFORE", "OVERLAP")),
            DecisionHyperplane(np.zeros(1), 1.0, ("AFTER", "OVERLAP")),
        ]
        label, votes = classify(HyperplaneBank(COARSE, planes), np.zeros(1))
        assert votes == {"BEFORE": 1, "AFTER": 1, "OVERLAP": 1}
        assert label == "BEFORE"

    def test_votes_total(self):
        rng = np.random.default_rng(4)
        model = _hand_model()
        for _ in range(100):
            _, votes = classify(model, rng.normal(size=2) * 5)
            assert sum(votes.values()) == 3


class TestTraining:
    def test_two_class_separable(self):
        rng = np.random.default_rng(0)
        data = [(np.array([rng.uniform(1, 2), rng.normal()]), "BEFORE") for _ in range(50)]
        data += [(np.array([rng.uniform(-2, -1), rng.normal()]), "AFTER") for _ in range(50)]
        bank = train([(x, y) for x, y in data] + [(np.array([0.0, 30.0]), "OVERLAP")]).bank()
        plane = next(h for h in bank.hyperplanes if h.class_pair == ("BEFORE", "AFTER"))
        assert all((distance(plane, x) > 0) == (y == "BEFORE") for x, y in data)

    def test_three_class_separable(self):
        data = separable_three_class(np.random.default_rng(1))
        model = train(data)
        assert len(model.bank().hyperplanes) == 3
        assert all(classify(model, x)[0] == y for x, y in data)

    def test_deterministic(self):
        data = separable_three_class(np.random.default_rng(2), n=120)
        a, b = train(data, config=TrainConfig(seed=3)), train(data, config=TrainConfig(seed=3))
        for ha, hb in zip(a.bank().hyperplanes, b.bank().hyperplanes):
            assert np.array_equal(ha.weights, hb.weights) and ha.bias == hb.bias

    def test_confidence_grows_along_receding_rays(self):
        rng = np.random.default_rng(5)
        model = train(separable_three_class(rng, n=200))
        bank = model.bank()
        for _ in range(30):
            x0 = rng.normal(size=2) * 3
            label, _ = classify(model, x0)
            normals = [h.weights if h.class_pair[0] == label else -h.weights
                       for h in bank.hyperplanes if label in h.class_pair]
            u = receding_direction(rng, normals)
            phis = [confidence(model, x0 + t * u) for t in np.linspace(0.5, 20, 8)]
            assert np.all(np.diff(phis) > 0)

    def test_missing_class(self):
        with pytest.raises(TrainingError, match="OVERLAP"):
            train([(np.ones(1), "BEFORE"), (np.zeros(1), "AFTER")])

    def test_sparse_input(self):
        data = [({0: 1.0}, "BEFORE"), ({1: 1.0}, "AFTER"), ({2: 1.0}, "OVERLAP")] * 10
        model = train(data)
        assert [classify(model, x)[0] for x, _ in data[:3]] == ["BEFORE", "AFTER", "OVERLAP"]


class TestSplitAndPersistence:
    def test_split_routes(self):
        rng = np.random.default_rng(6)
        data = separable_three_class(rng, n=150)
        split = [(x, y, i % 2 == 0) for i, (x, y) in enumerate(data)]
        model = train_split(split)
        assert model.routing == "intra_inter_split"
        with pytest.raises(ValueError):
            model.bank()
        assert model.bank(True) is not model.bank(False)

    def test_split_fallback_shares_a_bank(self):
        data = [(np.array([1.0, 0.0]), "BEFORE", True), (np.array([-1.0, 0.0]), "AFTER", True),
                (np.array([0.0, 1.0]), "OVERLAP", False)]
        model = train_split(data)
        assert model.bank(True) is model.bank(False)

    def test_json_round_trip(self, tmp_path):
        model = train(separable_three_class(np.random.default_rng(7), n=90))
        text = model_to_json(model)
        back = model_from_json(text)
        assert model_to_json(back) == text
        x = np.array([0.3, -1.2])
        assert predict(back, x) == predict(model, x)
        path = tmp_path / "model.json"
        path.write_text(text)
        assert model_to_json(load_model(path)) == text

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            model_from_json('{"format": "other"}')
