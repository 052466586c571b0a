"""Accuracy, majority baselines, document-level cross-validation and the
stratified-shuffling randomization test."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .corpus import SCHEME_LABELS, Corpus, CorpusError, PairId, Scheme, convert_corpus, corpus_stats, gold_labels


class EvaluationError(ValueError):
    pass


def _check_pairs(pred: Mapping, gold: Mapping, what: str = "pred") -> None:
    if pred.keys() != gold.keys():
        missing = sorted(map(str, gold.keys() - pred.keys()))
        extra = sorted(map(str, pred.keys() - gold.keys()))
        raise EvaluationError(
            f"{what} and gold cover different pairs; missing from {what}: {missing[:10]}"
            f"{' ...' if len(missing) > 10 else ''}; not in gold: {extra[:10]}"
            f"{' ...' if len(extra) > 10 else ''}")


def accuracy(pred: Mapping[Hashable, str], gold: Mapping[Hashable, str]) -> float:
    _check_pairs(pred, gold)
    if not gold:
        raise EvaluationError("accuracy over zero pairs is undefined")
    return sum(pred[k] == v for k, v in gold.items()) / len(gold)


def majority_baseline(corpus: Corpus, scheme: Scheme | str) -> tuple[str, float]:
    stats = corpus_stats(corpus, scheme)
    if stats.total == 0:
        raise EvaluationError("majority baseline of an empty corpus is undefined")
    return stats.majority, stats.majority_fraction


def confusion_matrix(pred: Mapping[Hashable, str], gold: Mapping[Hashable, str],
                     labels: Sequence[str]) -> np.ndarray:
    """Rows are gold labels, columns predictions, both in ``labels`` order."""
    _check_pairs(pred, gold)
    pos = {label: i for i, label in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=int)
    for k, g in gold.items():
        m[pos[g], pos[pred[k]]] += 1
    return m


# ---------------------------------------------------------------------------
# cross-validation

Learner = Callable[[Corpus, Corpus], Mapping[PairId, str]]


@dataclass
class CrossValidationResult:
    fold_accuracies: list[float]
    folds: list[list[str]]          # test document ids per fold
    holdout: list[str] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))


def document_folds(doc_ids: Sequence[str], folds: int, seed: int) -> list[list[str]]:
    if folds < 2:
        raise EvaluationError("cross-validation needs at least 2 folds")
    if len(doc_ids) < folds:
        raise EvaluationError(f"{len(doc_ids)} documents cannot fill {folds} folds")
    order = np.random.default_rng(seed).permutation(len(doc_ids))
    return [[doc_ids[i] for i in part] for part in np.array_split(order, folds)]


def cross_validate(corpus: Corpus, learner: Learner, folds: int = 5, seed: int = 0,
                   holdout_docs: Sequence[str] = ()) -> CrossValidationResult:
    """Train on all folds but one and test on the remaining one, in turn.

    ``learner(train, test)`` returns a label for every tlink pair of ``test``.
    Documents named in ``holdout_docs`` never enter any fold.
    """
    held = set(holdout_docs)
    docs = [d for d in corpus if d.doc_id not in held]
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate doc_id in corpus")
    parts = document_folds(ids, folds, seed)
    by_id = {d.doc_id: d for d in docs}
    accs = []
    for part in parts:
        test_ids = set(part)
        test = [by_id[i] for i in part]
        train = [d for d in docs if d.doc_id not in test_ids]
        pred = dict(learner(train, test))
        accs.append(accuracy(pred, gold_labels(test)))
    return CrossValidationResult(accs, parts, sorted(held & {d.doc_id for d in corpus}))


# ---------------------------------------------------------------------------
# stratified shuffling

@dataclass(frozen=True)
class SignificanceResult:
    observed_diff: float
    nc: int
    nt: int
    p_value: float


def _agreement_delta(pred_a, pred_b, gold) -> np.ndarray:
    _check_pairs(pred_a, gold, "predA")
    _check_pairs(pred_b, gold, "predB")
    keys = sorted(gold, key=repr)
    a = np.array([pred_a[k] == gold[k] for k in keys], dtype=np.int64)
    b = np.array([pred_b[k] == gold[k] for k in keys], dtype=np.int64)
    return a - b


def stratified_shuffling(pred_a: Mapping[Hashable, str], pred_b: Mapping[Hashable, str],
                         gold: Mapping[Hashable, str], nt: int = 10000, seed: int = 0,
                         chunk: int = 1000) -> SignificanceResult:
    """Randomization test on the accuracy difference of two systems.

    Each trial swaps the two systems' outputs for every pair independently
    with probability 1/2.  Only pairs where exactly one system is right move
    the difference, so trials are drawn over those pairs alone, and the
    difference is kept as an integer count to make the ``>=`` test exact.
    """
    if nt < 1:
        raise EvaluationError("nt must be positive")
    delta = _agreement_delta(pred_a, pred_b, gold)
    n = len(delta)
    if n == 0:
        raise EvaluationError("significance over zero pairs is undefined")
    d = delta[delta != 0]
    observed = abs(int(d.sum()))
    rng = np.random.default_rng(seed)
    nc = 0
    done = 0
    while done < nt:
        size = min(chunk, nt - done)
        swaps = rng.random((size, len(d))) < 0.5
        shuffled = np.abs(np.where(swaps, -d, d).sum(axis=1))
        nc += int((shuffled >= observed).sum())
        done += size
    return SignificanceResult(observed / n, nc, nt, (nc + 1) / (nt + 1))


# ---------------------------------------------------------------------------
# prediction files: one JSON record per pair

@dataclass
class PredictionRecord:
    doc_id: str
    source: str
    target: str
    label: str
    posterior: dict[str, float] | None = None
    confidence: float | None = None

    @property
    def pair(self) -> PairId:
        return (self.doc_id, self.source, self.target)


def serialize_predictions(records: Sequence[PredictionRecord]) -> bytes:
    lines = []
    for r in sorted(records, key=lambda r: r.pair):
        out = {"doc_id": r.doc_id, "source": r.source, "target": r.target, "label": r.label}
        if r.posterior is not None:
            out["posterior"] = r.posterior
        if r.confidence is not None:
            out["confidence"] = r.confidence
        lines.append(json.dumps(out, sort_keys=True))
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def write_predictions(records: Sequence[PredictionRecord], path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_predictions(records))


def read_predictions(path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(PredictionRecord(str(rec["doc_id"]), str(rec["source"]), str(rec["target"]),
                                            str(rec["label"]), rec.get("posterior"), rec.get("confidence")))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise EvaluationError(f"{path}:{n}: bad prediction record ({exc})") from None
    pairs = [r.pair for r in out]
    if len(set(pairs)) != len(pairs):
        raise EvaluationError(f"{path}: duplicate pair in predictions")
    return out


def prediction_map(records: Sequence[PredictionRecord]) -> dict[PairId, str]:
    return {r.pair: r.label for r in records}


# ---------------------------------------------------------------------------
# reports

@dataclass
class EvaluationReport:
    scheme: str
    pairs: int
    accuracy: float
    majority_label: str
    majority_accuracy: float
    labels: list[str]
    confusion: list[list[int]]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        width = max(len(label) for label in self.labels)
        lines = [
            f"scheme    {self.scheme}",
            f"pairs     {self.pairs}",
            f"accuracy  {self.accuracy:.4f}",
            f"majority  {self.majority_label} {self.majority_accuracy:.4f}",
            "confusion (rows gold, columns predicted)",
            " " * width + " " + " ".join(f"{label:>{width}}" for label in self.labels),
        ]
        for label, row in zip(self.labels, self.confusion):
            lines.append(f"{label:>{width}} " + " ".join(f"{v:>{width}}" for v in row))
        return "\n".join(lines) + "\n"


def evaluate(pred: Mapping[PairId, str], corpus: Corpus, scheme: Scheme | str) -> EvaluationReport:
    scheme = Scheme.parse(scheme)
    corpus = convert_corpus(corpus, scheme)
    gold = gold_labels(corpus)
    labels = list(SCHEME_LABELS[scheme])
    label, frac = majority_baseline(corpus, scheme)
    return EvaluationReport(scheme.value, len(gold), accuracy(pred, gold), label, frac, labels,
                            confusion_matrix(pred, gold, labels).tolist())


__all__ = [
    "CrossValidationResult", "EvaluationError", "EvaluationReport", "PredictionRecord", "SignificanceResult",
    "accuracy", "confusion_matrix", "cross_validate", "document_folds", "evaluate", "majority_baseline",
    "prediction_map", "read_predictions", "serialize_predictions", "stratified_shuffling",
    "write_predictions",
]
