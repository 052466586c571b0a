"""Bootstrapped cross-document classification.

A general one-vs-one model is trained once.  For each test document the
most similar pool documents are retrieved; the current model labels their
intra-sentential event pairs, the K most confident new pairs are added to
the training data, and the model is retrained, for a fixed number of
rounds.  The resulting specialized model classifies the test document.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer

from .classifier import OvoLinearModel, TrainConfig, predict as predict_vector, train, train_split
from .corpus import Corpus, Document, Scheme, convert_label, iter_event_pairs
from .features import FeatureIndex, FeatureSet, extract_pair, vectorize

log = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w")


def document_tokens(doc: Document) -> list[str]:
    return [tok.lower() for sent in doc.sentences for tok in sent if _WORD_RE.search(tok)]


# ---------------------------------------------------------------------------
# retrieval

@dataclass
class RetrievalIndex:
    doc_ids: list[str]
    vectorizer: TfidfVectorizer | None
    matrix: object  # sparse (documents, terms), rows L2-normalized

    def vector(self, doc: Document):
        return self.vectorizer.transform([document_tokens(doc)])

    def weights(self, doc_id: str) -> dict[str, float]:
        row = self.matrix[self.doc_ids.index(doc_id)]
        vocab = self.vectorizer.get_feature_names_out()
        return {str(vocab[k]): float(v) for k, v in zip(row.indices, row.data)}


def _identity(tokens):
    return tokens


def build_index(pool: Iterable[Document]) -> RetrievalIndex:
    """TF-IDF with 1 + log(tf) term weights and smoothed idf."""
    docs = list(pool)
    if not docs:
        return RetrievalIndex([], None, None)
    vec = TfidfVectorizer(analyzer=_identity, sublinear_tf=True, smooth_idf=True, norm="l2")
    matrix = vec.fit_transform([document_tokens(d) for d in docs]).tocsr()
    return RetrievalIndex([d.doc_id for d in docs], vec, matrix)


def retrieve_related(index: RetrievalIndex, query: Document, n: int) -> list[str]:
    """Top-n pool ids by cosine similarity; ties by id; the query is skipped."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not index.doc_ids:
        return []
    sims = (index.matrix @ index.vector(query).T).toarray().ravel()
    ranked = sorted(
        (i for i, d in enumerate(index.doc_ids) if d != query.doc_id),
        key=lambda i: (-sims[i], index.doc_ids[i]),
    )
    return [index.doc_ids[i] for i in ranked[:n]]


def similarity(index: RetrievalIndex, a: Document, b: Document) -> float:
    va, vb = index.vector(a), index.vector(b)
    return float((va @ vb.T).toarray()[0, 0])


# ---------------------------------------------------------------------------
# configuration and featurization

@dataclass
class BcdcConfig:
    related_docs: int = 25
    confident_relations_per_round: int = 40
    max_rounds: int = 10
    reuse_models_for_related_tests: bool = True
    reuse_threshold: float = 0.5
    scheme: Scheme = Scheme.COARSE3
    feature_set: FeatureSet = FeatureSet.BCDC_BASIC
    split_intra_inter: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        self.feature_set = FeatureSet(self.feature_set)
        if self.related_docs < 1 or self.confident_relations_per_round < 1:
            raise ValueError("related_docs and confident_relations_per_round must be positive")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be non-negative")


PairKey = tuple[str, str, str]


@dataclass
class Example:
    key: PairKey
    vector: dict[int, float]
    label: str
    intra: bool


class Featurizer:
    """Vectorizes pairs against one shared feature index."""

    def __init__(self, feature_set: FeatureSet, index: FeatureIndex | None = None):
        self.feature_set = FeatureSet(feature_set)
        self.index = index or FeatureIndex()

    def register(self, docs: Iterable[Document]):
        for doc in docs:
            for a, b in iter_event_pairs(doc):
                for e1, e2 in ((a, b), (b, a)):
                    vectorize(extract_pair(doc, e1, e2, self.feature_set), self.index, frozen=False)
            for t in doc.tlinks:
                vectorize(extract_pair(doc, t.source, t.target, self.feature_set), self.index, frozen=False)

    def __call__(self, doc: Document, e1: str, e2: str) -> dict[int, float]:
        return vectorize(extract_pair(doc, e1, e2, self.feature_set), self.index, frozen=True)


def gold_examples(corpus: Iterable[Document], scheme: Scheme, feats: Featurizer) -> list[Example]:
    out = []
    for doc in corpus:
        for t in doc.tlinks:
            label, swapped = convert_label(t.label, scheme)
            src, dst = (t.target, t.source) if swapped else (t.source, t.target)
            out.append(Example((doc.doc_id, src, dst), feats(doc, src, dst), label.value,
                               doc.same_sentence(src, dst)))
    return out


def fit(examples: Sequence[Example], cfg: BcdcConfig, dim: int) -> OvoLinearModel:
    if cfg.split_intra_inter:
        return train_split([(e.vector, e.label, e.intra) for e in examples], cfg.scheme, cfg.train, dim)
    return train([(e.vector, e.label) for e in examples], cfg.scheme, cfg.train, dim)


# ---------------------------------------------------------------------------
# bootstrapping

@dataclass
class RoundRecord:
    round: int
    injected: list[tuple[PairKey, str, float]]


@dataclass
class BootstrapResult:
    model: OvoLinearModel
    related: list[str]
    rounds: list[RoundRecord]

    @property
    def injected_total(self) -> int:
        return sum(len(r.injected) for r in self.rounds)


def bootstrap(general: OvoLinearModel, test_doc: Document, pool: Sequence[Document],
              index: RetrievalIndex, cfg: BcdcConfig, train_examples: Sequence[Example],
              feats: Featurizer, related: Sequence[str] | None = None) -> BootstrapResult:
    if related is None:
        related = retrieve_related(index, test_doc, cfg.related_docs) if index.doc_ids else []
    by_id = {d.doc_id: d for d in pool}
    candidates: list[tuple[PairKey, dict[int, float]]] = []
    for doc_id in related:
        doc = by_id[doc_id]
        for a, b in iter_event_pairs(doc, same_sentence_only=True):
            candidates.append(((doc_id, a, b), feats(doc, a, b)))

    model = general
    selected: dict[PairKey, Example] = {}
    rounds: list[RoundRecord] = []
    dim = len(feats.index)
    for r in range(1, cfg.max_rounds + 1):
        remaining = [(k, x) for k, x in candidates if k not in selected]
        if not remaining:
            break
        scored = []
        for key, x in remaining:
            label, phi = predict_vector(model, x, intra=True)
            scored.append((-phi, key, label, phi, x))
        scored.sort(key=lambda s: (s[0], s[1]))
        chosen = scored[:cfg.confident_relations_per_round]
        for _, key, label, phi, x in chosen:
            selected[key] = Example(key, x, label, True)
        rounds.append(RoundRecord(r, [(key, label, phi) for _, key, label, phi, _ in chosen]))
        model = fit(list(train_examples) + list(selected.values()), cfg, dim)
    return BootstrapResult(model, list(related), rounds)


@dataclass
class PredictedLink:
    source: str
    target: str
    label: str
    confidence: float


def classify_document(model: OvoLinearModel, doc: Document, feats: Featurizer,
                      pairs: Sequence[tuple[str, str]] | None = None) -> list[PredictedLink]:
    """Label the tlink pairs of ``doc`` (or the given pairs)."""
    if pairs is None:
        pairs = [t.pair for t in doc.tlinks] if doc.tlinks else list(iter_event_pairs(doc))
    out = []
    for e1, e2 in pairs:
        label, phi = predict_vector(model, feats(doc, e1, e2), intra=doc.same_sentence(e1, e2))
        out.append(PredictedLink(e1, e2, label, phi))
    return out


def _doc_hits(doc: Document, preds: Sequence[PredictedLink], scheme: Scheme) -> int:
    gold = {}
    for t in doc.tlinks:
        label, swapped = convert_label(t.label, scheme)
        gold[t.pair] = (label.value, swapped)
    hits = 0
    for p in preds:
        value, swapped = gold[(p.source, p.target)]
        if not swapped and p.label == value:
            hits += 1
    return hits


def _doc_accuracy(doc: Document, preds: Sequence[PredictedLink], scheme: Scheme) -> float | None:
    if not doc.tlinks or not preds:
        return None
    return _doc_hits(doc, preds, scheme) / len(preds)


def _jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


@dataclass
class BcdcRun:
    general: OvoLinearModel
    predictions: dict[str, list[PredictedLink]]
    general_predictions: dict[str, list[PredictedLink]]
    report: dict
    featurizer: Featurizer


def run_bcdc(train_corpus: Corpus, tests: Corpus, pool: Corpus, cfg: BcdcConfig | None = None) -> BcdcRun:
    cfg = cfg or BcdcConfig()
    feats = Featurizer(cfg.feature_set)
    feats.register(train_corpus)
    feats.register(pool)
    feats.register(tests)
    train_examples = gold_examples(train_corpus, cfg.scheme, feats)
    dim = len(feats.index)
    general = fit(train_examples, cfg, dim)
    index = build_index(pool)

    # gold labels in tests are only used for scoring; pairs are oriented as annotated
    predictions, general_predictions = {}, {}
    done: list[tuple[str, list[str], BootstrapResult]] = []
    docs_report = []
    for doc in sorted(tests, key=lambda d: d.doc_id):
        related = retrieve_related(index, doc, cfg.related_docs) if index.doc_ids else []
        reused_from = None
        result = None
        if cfg.reuse_models_for_related_tests and related:
            for prev_id, prev_related, prev_result in done:
                if _jaccard(related, prev_related) >= cfg.reuse_threshold:
                    reused_from, result = prev_id, prev_result
                    break
        if result is None:
            result = bootstrap(general, doc, pool, index, cfg, train_examples, feats, related)
            done.append((doc.doc_id, related, result))
            log.info("bootstrapped %s: %d rounds, %d pseudo-labels",
                     doc.doc_id, len(result.rounds), result.injected_total)
        preds = classify_document(result.model, doc, feats)
        gen = classify_document(general, doc, feats)
        predictions[doc.doc_id] = preds
        general_predictions[doc.doc_id] = gen
        docs_report.append({
            "doc_id": doc.doc_id,
            "related": related,
            "reused_from": reused_from,
            "rounds": [
                {"round": r.round,
                 "injected": [{"pair": list(k), "label": lab, "confidence": phi} for k, lab, phi in r.injected]}
                for r in result.rounds
            ] if reused_from is None else [],
            "accuracy": _doc_accuracy(doc, preds, cfg.scheme),
            "general_accuracy": _doc_accuracy(doc, gen, cfg.scheme),
        })
    total = sum(len(v) for v in predictions.values())
    report = {
        "documents": docs_report,
        "bootstrap_runs": len(done),
        "accuracy": _pooled(tests, predictions, cfg.scheme, total),
        "general_accuracy": _pooled(tests, general_predictions, cfg.scheme, total),
    }
    return BcdcRun(general, predictions, general_predictions, report, feats)


def _pooled(tests, predictions, scheme, total) -> float | None:
    if not total:
        return None
    hits = sum(_doc_hits(doc, predictions[doc.doc_id], scheme) for doc in tests if doc.tlinks)
    return hits / total


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


__all__ = [
    "BcdcConfig", "BcdcRun", "BootstrapResult", "Example", "Featurizer", "PredictedLink",
    "RetrievalIndex", "RoundRecord", "bootstrap", "build_index", "classify_document",
    "document_tokens", "gold_examples", "report_json", "retrieve_related", "run_bcdc", "similarity",
]
