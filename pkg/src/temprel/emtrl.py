"""Unsupervised temporal relation learning by hard EM over a naive-Bayes
model of event-pair features.

Each pair's relation is a hidden class with a uniform prior; every feature
slot is conditionally independent given the class.  The M-step counts
hard assignments with add-1 smoothing and one reserved bucket for unseen
values; the E-step picks the most probable class per pair.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .corpus import (
    SCHEME_LABELS, Corpus, Document, PairId, Scheme, corpus_pairs,
)
from .features import EM_SLOTS, extract_em
from .rules import RuleBase, apply_rules

MODEL_HEADER = "#temprel-em 1"


# ---------------------------------------------------------------------------
# encoded pair data

class PairData:
    """Feature values of a fixed list of pairs, encoded against a vocabulary."""

    def __init__(self, corpus: Iterable[Document], pairs: Sequence[PairId] | None = None):
        docs = {doc.doc_id: doc for doc in corpus}
        self.docs = docs
        self.pairs: list[PairId] = list(corpus_pairs(docs.values()) if pairs is None else pairs)
        self.index = {p: k for k, p in enumerate(self.pairs)}
        if len(self.index) != len(self.pairs):
            raise ValueError("duplicate pair ids")
        self.values: list[tuple[str, ...]] = []
        for doc_id, e1, e2 in self.pairs:
            if doc_id not in docs:
                raise KeyError(f"unknown document {doc_id!r}")
            self.values.append(extract_em(docs[doc_id], e1, e2))

    def vocab(self) -> dict[str, tuple[str, ...]]:
        return {slot: tuple(sorted({v[s] for v in self.values})) for s, slot in enumerate(EM_SLOTS)}

    def encode(self, vocab: Mapping[str, Sequence[str]]) -> np.ndarray:
        """(pairs, slots) value ids; ``len(vocab[slot])`` marks unseen values."""
        out = np.empty((len(self.pairs), len(EM_SLOTS)), dtype=np.int64)
        for s, slot in enumerate(EM_SLOTS):
            ids = {v: k for k, v in enumerate(vocab[slot])}
            unseen = len(ids)
            out[:, s] = [ids.get(vals[s], unseen) for vals in self.values]
        return out

    def by_document(self) -> dict[str, list[PairId]]:
        groups: dict[str, list[PairId]] = {}
        for p in self.pairs:
            groups.setdefault(p[0], []).append(p)
        return groups


# ---------------------------------------------------------------------------
# model

@dataclass
class EmModel:
    scheme: Scheme
    vocab: dict[str, tuple[str, ...]]
    counts: dict[str, np.ndarray]        # slot -> (|vocab|, classes)
    class_totals: np.ndarray             # N(class)
    smoothing: bool = True
    slots: tuple[str, ...] = EM_SLOTS

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        self._log_tables = None

    @property
    def labels(self) -> tuple[str, ...]:
        return SCHEME_LABELS[self.scheme]

    def table(self, slot: str) -> np.ndarray:
        """P(value | class) with the unseen bucket as the last row."""
        n = self.counts[slot]
        v = n.shape[0]
        if self.smoothing:
            denom = self.class_totals + v + 1.0
            return np.vstack([n + 1.0, np.ones((1, n.shape[1]))]) / denom
        out = np.zeros((v + 1, n.shape[1]))
        for c in range(n.shape[1]):
            if self.class_totals[c] > 0:
                out[:v, c] = n[:, c] / self.class_totals[c]
            elif v:
                out[:v, c] = 1.0 / v
            else:
                out[v, c] = 1.0
        return out

    def prob(self, slot: str, value: str, label: str) -> float:
        vocab = self.vocab[slot]
        row = vocab.index(value) if value in vocab else len(vocab)
        return float(self.table(slot)[row, self.labels.index(label)])

    def log_tables(self) -> list[np.ndarray]:
        if self._log_tables is None:
            with np.errstate(divide="ignore"):
                self._log_tables = [np.log(self.table(slot)) for slot in self.slots]
        return self._log_tables

    def parameters(self) -> np.ndarray:
        return np.concatenate([self.table(slot).ravel() for slot in self.slots])

    def joint_log(self, ids: np.ndarray) -> np.ndarray:
        """log P(class) + sum of slot log-likelihoods, shape (pairs, classes)."""
        k = len(self.labels)
        out = np.full((ids.shape[0], k), -math.log(k))
        for s, table in enumerate(self.log_tables()):
            out += table[ids[:, s]]
        return out

    # text dump ------------------------------------------------------------

    def dump(self) -> str:
        lines = [MODEL_HEADER,
                 f"scheme\t{self.scheme.value}",
                 f"smoothing\t{'add1' if self.smoothing else 'none'}"]
        for c, label in enumerate(self.labels):
            lines.append(f"total\t{label}\t{float(self.class_totals[c])!r}")
        for slot in self.slots:
            for c, label in enumerate(self.labels):
                for r, value in enumerate(self.vocab[slot]):
                    lines.append(f"{slot}\t{label}\t{value}\t{float(self.counts[slot][r, c])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load_dump(cls, text: str) -> "EmModel":
        lines = text.splitlines()
        if not lines or lines[0] != MODEL_HEADER:
            raise ValueError("not an EM model dump")
        scheme, smoothing = None, True
        totals: dict[str, float] = {}
        cells: dict[str, dict[tuple[str, str], float]] = {}
        order: dict[str, list[str]] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split("\t")
            if parts[0] == "scheme" and len(parts) == 2:
                scheme = Scheme.parse(parts[1])
            elif parts[0] == "smoothing" and len(parts) == 2:
                smoothing = parts[1] == "add1"
            elif parts[0] == "total" and len(parts) == 3:
                totals[parts[1]] = float(parts[2])
            elif len(parts) == 4:
                slot, label, value, number = parts
                cells.setdefault(slot, {})[(value, label)] = float(number)
                seen = order.setdefault(slot, [])
                if value not in seen:
                    seen.append(value)
            else:
                raise ValueError(f"model dump line {lineno}: cannot parse {line!r}")
        if scheme is None:
            raise ValueError("model dump lacks a scheme line")
        labels = SCHEME_LABELS[scheme]
        slots = tuple(cells)
        vocab = {slot: tuple(sorted(order[slot])) for slot in slots}
        counts = {}
        for slot in slots:
            arr = np.zeros((len(vocab[slot]), len(labels)))
            for r, value in enumerate(vocab[slot]):
                for c, label in enumerate(labels):
                    arr[r, c] = cells[slot].get((value, label), 0.0)
            counts[slot] = arr
        class_totals = np.array([totals.get(label, 0.0) for label in labels])
        return cls(scheme, vocab, counts, class_totals, smoothing, slots)

    def save(self, path: Union[str, Path]):
        Path(path).write_text(self.dump(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EmModel":
        return cls.load_dump(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# assignments

@dataclass
class Assignment:
    """Hard labels (``None`` = not yet assigned), posteriors and pinned pairs."""
    scheme: Scheme
    pairs: list[PairId]
    labels: dict[PairId, str | None]
    posteriors: dict[PairId, np.ndarray]
    pinned: frozenset[PairId] = frozenset()

    def weights(self, soft: bool = False) -> np.ndarray:
        labels = SCHEME_LABELS[self.scheme]
        w = np.zeros((len(self.pairs), len(labels)))
        for k, p in enumerate(self.pairs):
            label = self.labels[p]
            if soft and p not in self.pinned:
                w[k] = self.posteriors[p]
            elif label is not None:
                w[k, labels.index(label)] = 1.0
        return w


def _uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def _one_hot(k: int, i: int) -> np.ndarray:
    out = np.zeros(k)
    out[i] = 1.0
    return out


def init_random(pairs: Sequence[PairId], scheme: Union[Scheme, str], seed: int) -> Assignment:
    scheme = Scheme.parse(scheme)
    labels = SCHEME_LABELS[scheme]
    rng = np.random.default_rng(seed)
    draws = rng.integers(len(labels), size=len(pairs))
    return Assignment(
        scheme, list(pairs),
        {p: labels[int(d)] for p, d in zip(pairs, draws)},
        {p: _one_hot(len(labels), int(d)) for p, d in zip(pairs, draws)},
    )


def init_supervised(pairs: Sequence[PairId], gold: Mapping[PairId, str], fraction: float,
                    seed: int, scheme: Union[Scheme, str] = Scheme.COARSE3) -> Assignment:
    """Pin a random ceil(fraction * count) subset of every gold label."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    scheme = Scheme.parse(scheme)
    labels = SCHEME_LABELS[scheme]
    missing = [p for p in pairs if p not in gold]
    if missing:
        raise ValueError(f"no gold label for pair {missing[0]}")
    rng = np.random.default_rng(seed)
    out_labels: dict[PairId, str | None] = {p: None for p in pairs}
    posteriors = {p: _uniform(len(labels)) for p in pairs}
    pinned = set()
    for label in labels:
        members = [p for p in pairs if gold[p] == label]
        take = math.ceil(fraction * len(members) - 1e-9)
        for k in rng.permutation(len(members))[:take]:
            p = members[int(k)]
            out_labels[p] = label
            posteriors[p] = _one_hot(len(labels), labels.index(label))
            pinned.add(p)
    return Assignment(scheme, list(pairs), out_labels, posteriors, frozenset(pinned))


def init_rules(pairs: Sequence[PairId], corpus: Iterable[Document], rulebase: RuleBase,
               scheme: Union[Scheme, str] = Scheme.COARSE3) -> Assignment:
    scheme = Scheme.parse(scheme)
    labels = SCHEME_LABELS[scheme]
    docs = {doc.doc_id: doc for doc in corpus}
    out_labels: dict[PairId, str | None] = {}
    posteriors = {}
    for p in pairs:
        label = apply_rules(rulebase, docs[p[0]], p[1], p[2], scheme)
        out_labels[p] = label
        posteriors[p] = _uniform(len(labels)) if label is None else _one_hot(len(labels), labels.index(label))
    return Assignment(scheme, list(pairs), out_labels, posteriors)


# ---------------------------------------------------------------------------
# M / E steps

def _m_step(assignment: Assignment, data: PairData, vocab, ids, smoothing: bool, soft: bool) -> EmModel:
    w = assignment.weights(soft)
    k = w.shape[1]
    counts = {}
    for s, slot in enumerate(EM_SLOTS):
        v = len(vocab[slot])
        arr = np.zeros((v + 1, k))
        np.add.at(arr, ids[:, s], w)
        counts[slot] = arr[:v]
    return EmModel(assignment.scheme, dict(vocab), counts, w.sum(axis=0), smoothing)


def m_step(assignment: Assignment, corpus: Iterable[Document], scheme: Union[Scheme, str] | None = None,
           smoothing: bool = True, soft: bool = False) -> EmModel:
    """Relative-frequency estimate from hard labels (unassigned pairs count nothing)."""
    if scheme is not None and Scheme.parse(scheme) != assignment.scheme:
        raise ValueError("assignment scheme differs from requested scheme")
    data = PairData(corpus, assignment.pairs)
    vocab = data.vocab()
    return _m_step(assignment, data, vocab, data.encode(vocab), smoothing, soft)


def _posteriors(model: EmModel, ids: np.ndarray) -> np.ndarray:
    joint = model.joint_log(ids)
    top = joint.max(axis=1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    p = np.exp(joint - top)
    z = p.sum(axis=1, keepdims=True)
    k = joint.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(z > 0, p / np.where(z > 0, z, 1.0), 1.0 / k)
    return p


def _argmax(p: np.ndarray) -> np.ndarray:
    return np.argmax(p, axis=1)  # first maximum: scheme order


def _e_step(model: EmModel, ids: np.ndarray, pairs: list[PairId], pinned: frozenset,
            previous: Assignment | None) -> Assignment:
    post = _posteriors(model, ids)
    labels = model.labels
    best = _argmax(post)
    out_labels = {}
    for k, p in enumerate(pairs):
        if p in pinned and previous is not None:
            out_labels[p] = previous.labels[p]
        else:
            out_labels[p] = labels[int(best[k])]
    return Assignment(model.scheme, list(pairs), out_labels,
                      {p: post[k] for k, p in enumerate(pairs)}, pinned)


def e_step(model: EmModel, corpus: Iterable[Document], pairs: Sequence[PairId] | None = None,
           previous: Assignment | None = None) -> Assignment:
    data = PairData(corpus, pairs)
    pinned = previous.pinned if previous is not None else frozenset()
    return _e_step(model, data.encode(model.vocab), data.pairs, pinned, previous)


def predict(model: EmModel, corpus: Iterable[Document], pairs: Sequence[PairId]) -> dict[PairId, str]:
    data = PairData(corpus, pairs)
    post = _posteriors(model, data.encode(model.vocab))
    best = _argmax(post)
    return {p: model.labels[int(best[k])] for k, p in enumerate(data.pairs)}


def predict_posteriors(model: EmModel, corpus: Iterable[Document],
                       pairs: Sequence[PairId]) -> dict[PairId, np.ndarray]:
    data = PairData(corpus, pairs)
    post = _posteriors(model, data.encode(model.vocab))
    return {p: post[k] for k, p in enumerate(data.pairs)}


def log_likelihood(model: EmModel, ids: np.ndarray, assignment: Assignment) -> float:
    """Complete-data log-likelihood of the labeled pairs."""
    joint = model.joint_log(ids)
    labels = model.labels
    total = 0.0
    for k, p in enumerate(assignment.pairs):
        label = assignment.labels[p]
        if label is not None:
            total += joint[k, labels.index(label)]
    return float(total)


def marginal_log_likelihood(model: EmModel, ids: np.ndarray) -> float:
    """Sum over pairs of log sum_c P(c) P(features | c)."""
    joint = model.joint_log(ids)
    top = joint.max(axis=1, keepdims=True)
    return float(np.sum(top[:, 0] + np.log(np.exp(joint - top).sum(axis=1))))


def smoothing_log_prior(model: EmModel) -> float:
    """Log density of the pseudo-counts behind add-1 smoothing, up to a constant.

    Added to the complete-data log-likelihood it gives the objective that
    the smoothed M-step maximizes exactly.
    """
    if not model.smoothing:
        return 0.0
    return float(sum(table.sum() for table in model.log_tables()))


# ---------------------------------------------------------------------------
# EM loop

@dataclass
class EmConfig:
    max_iters: int = 30
    param_tol: float = 1e-6
    repair: str = "none"
    smoothing: bool = True
    soft: bool = False


@dataclass
class IterationRecord:
    iteration: int
    flips: int
    param_change: float
    log_likelihood: float
    objective: float


class EmResult(NamedTuple):
    model: EmModel
    assignment: Assignment
    trace: list[IterationRecord]
    converged: bool


def _repair_assignment(assignment: Assignment, data: PairData, method: str) -> Assignment:
    from .algebra import TemporalGraph
    from .consistency import repair

    labels = SCHEME_LABELS[assignment.scheme]
    new_labels = dict(assignment.labels)
    for doc_id, pairs in data.by_document().items():
        g = TemporalGraph(assignment.scheme)
        fixed = {}
        used = []
        for p in pairs:
            _, a, b = p
            if g.key(a, b) is not None:
                continue  # reversed duplicate; keeps its own label
            post = assignment.posteriors[p]
            g.add_edge(a, b, {lab: float(x) for lab, x in zip(labels, post / post.sum())})
            if p in assignment.pinned:
                fixed[(a, b)] = assignment.labels[p]
            used.append(p)
        if not used:
            continue
        result = repair(g, method, fixed)
        for p in used:
            new_labels[p] = result.labels[(p[1], p[2])]
    return Assignment(assignment.scheme, assignment.pairs, new_labels,
                      assignment.posteriors, assignment.pinned)


def run_em(corpus: Iterable[Document], init: Assignment, config: EmConfig | None = None) -> EmResult:
    """Alternate M and E steps, starting with the M-step on ``init``."""
    cfg = config or EmConfig()
    if cfg.repair not in ("none", "greedy", "ilp"):
        raise ValueError(f"unknown repair {cfg.repair!r}")
    data = PairData(corpus, init.pairs)
    vocab = data.vocab()
    ids = data.encode(vocab)
    assignment = init
    model = _m_step(assignment, data, vocab, ids, cfg.smoothing, cfg.soft)
    trace: list[IterationRecord] = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        new = _e_step(model, ids, data.pairs, assignment.pinned, assignment)
        if cfg.repair != "none":
            new = _repair_assignment(new, data, cfg.repair)
        flips = sum(new.labels[p] != assignment.labels[p] for p in data.pairs)
        new_model = _m_step(new, data, vocab, ids, cfg.smoothing, cfg.soft)
        change = float(np.max(np.abs(new_model.parameters() - model.parameters()))) if vocab else 0.0
        ll = log_likelihood(new_model, ids, new)
        trace.append(IterationRecord(it, flips, change, ll, ll + smoothing_log_prior(new_model)))
        model, assignment = new_model, new
        if change < cfg.param_tol:
            converged = True
            break
    return EmResult(model, assignment, trace, converged)


# ---------------------------------------------------------------------------
# cluster-to-label mapping

def map_clusters_to_labels(predicted: Mapping[PairId, str], gold: Mapping[PairId, str],
                           scheme: Union[Scheme, str]) -> tuple[dict[str, str], float]:
    """Relabeling of predicted classes that maximizes accuracy against gold."""
    scheme = Scheme.parse(scheme)
    labels = SCHEME_LABELS[scheme]
    if set(predicted) != set(gold):
        raise ValueError("predicted and gold cover different pairs")
    pos = {lab: i for i, lab in enumerate(labels)}
    conf = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, label in predicted.items():
        conf[pos[label], pos[gold[p]]] += 1
    total = max(1, len(gold))
    if len(labels) <= 6:
        best_perm, best_hits = None, -1
        for perm in permutations(range(len(labels))):
            hits = int(sum(conf[i, perm[i]] for i in range(len(labels))))
            if hits > best_hits:
                best_perm, best_hits = perm, hits
    else:
        warnings.warn(f"{len(labels)} labels: using greedy cluster matching", stacklevel=2)
        best_perm = [None] * len(labels)
        free_rows, free_cols = set(range(len(labels))), set(range(len(labels)))
        for flat in np.argsort(-conf, axis=None, kind="stable"):
            i, j = divmod(int(flat), len(labels))
            if i in free_rows and j in free_cols:
                best_perm[i] = j
                free_rows.discard(i)
                free_cols.discard(j)
        best_hits = int(sum(conf[i, best_perm[i]] for i in range(len(labels))))
    mapping = {labels[i]: labels[best_perm[i]] for i in range(len(labels))}
    return mapping, best_hits / total


__all__ = [
    "Assignment", "EmConfig", "EmModel", "EmResult", "IterationRecord", "PairData",
    "e_step", "init_random", "init_rules", "init_supervised", "log_likelihood",
    "m_step", "map_clusters_to_labels", "marginal_log_likelihood", "predict",
    "predict_posteriors", "run_em", "smoothing_log_prior",
]
