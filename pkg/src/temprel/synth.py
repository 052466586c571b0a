"""Synthetic corpora with interval-derived gold relations.

Every event gets an integer-grid interval, so gold labels come from exact
interval comparison and are consistent by construction.  Event attributes
are tied to the intervals (tense to the position relative to a document
reference time, aspect and class to duration, words to a topic-specific
vocabulary of fine start-time bins) with strength ``feature_informativeness``.  Two
pair-level slots are drawn directly from label-conditional tables: the
``dominates`` flag and a shared argument entity (``entity_match``); those
tables are the planted model reported by ``describe_planted``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .algebra import Allen, allen_to_label, relation_between
from .corpus import (
    SCHEME_LABELS, Corpus, Document, EventInstance, RelationLabel, Scheme, TLink, coarsen_relation,
)

PHASES = ("past", "present", "future")

# Raw14 name of each base relation (partial overlaps have none)
_RAW14_OF = {
    Allen.BEFORE: "BEFORE", Allen.AFTER: "AFTER", Allen.MEETS: "IBEFORE", Allen.MET_BY: "IAFTER",
    Allen.STARTS: "BEGINS", Allen.STARTED_BY: "BEGUN_BY", Allen.DURING: "IS_INCLUDED",
    Allen.CONTAINS: "INCLUDES", Allen.FINISHES: "ENDS", Allen.FINISHED_BY: "ENDED_BY",
    Allen.EQUALS: "SIMULTANEOUS",
}

# sharp label-conditional tables of the planted pair slots, by coarse class
_DOMINATES_SHARP = {"BEFORE": 0.9, "AFTER": 0.1, "OVERLAP": 0.5}
_ENTITY_SHARP = {"BEFORE": 0.15, "AFTER": 0.15, "OVERLAP": 0.9}

SIGNALS = {"BEFORE": "before", "AFTER": "after", "OVERLAP": "while"}


@dataclass
class SynthConfig:
    seed: int = 0
    documents: int = 50
    topics: int = 5
    events_per_doc: tuple[int, int] = (4, 8)
    pair_link_density: float = 0.6
    scheme: Scheme = Scheme.COARSE3
    feature_informativeness: Union[float, Mapping[str, float]] = 0.9
    annotation_noise_rate: float = 0.05
    intra_sentence_fraction: float = 0.5
    total_pairs: int | None = None      # when set, overrides ``documents``
    words_per_bin: int = 2
    word_bins: int = 6
    filler_words: int = 30
    sentence_length: tuple[int, int] = (6, 12)
    max_duration: int = 8
    topic_spread: tuple[int, int] = (12, 60)
    narrative_order: float = 0.0        # chance a document narrates events by start time

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        self.events_per_doc = tuple(self.events_per_doc)
        lo, hi = self.events_per_doc
        if not 2 <= lo <= hi:
            raise ValueError("events_per_doc must satisfy 2 <= lo <= hi")
        if not 0.0 < self.pair_link_density <= 1.0:
            raise ValueError("pair_link_density must lie in (0, 1]")
        for name in ("annotation_noise_rate", "intra_sentence_fraction", "narrative_order"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        values = (self.feature_informativeness.values() if isinstance(self.feature_informativeness, Mapping)
                  else [self.feature_informativeness])
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("feature_informativeness must lie in [0, 1]")
        if self.word_bins < 1 or self.words_per_bin < 1:
            raise ValueError("word_bins and words_per_bin must be positive")
        if self.documents < 1 or self.topics < 1:
            raise ValueError("documents and topics must be positive")

    def informativeness(self, slot: str) -> float:
        if isinstance(self.feature_informativeness, Mapping):
            return float(self.feature_informativeness.get(slot, self.feature_informativeness.get("default", 0.0)))
        return float(self.feature_informativeness)


@dataclass
class PlantedModel:
    scheme: Scheme
    tables: dict[str, dict[str, dict[str, float]]]   # slot -> label -> value -> probability
    topic_spread: dict[str, int] = field(default_factory=dict)
    topic_words: dict[str, list[list[str]]] = field(default_factory=dict)   # topic -> bin -> words


def _coarse(label: str, scheme: Scheme) -> str:
    if scheme is Scheme.COARSE3:
        return label
    return coarsen_relation(label)


def _noisy(p_true: float, noise: float) -> float:
    return p_true * (1.0 - noise) + (1.0 - p_true) * noise


def planted_tables(config: SynthConfig) -> dict[str, dict[str, dict[str, float]]]:
    """Effective (post-noise) conditionals of the pair-level planted slots."""
    tables = {}
    for slot, sharp in (("dominates", _DOMINATES_SHARP), ("entity_match", _ENTITY_SHARP)):
        k = config.informativeness(slot)
        per_label = {}
        for label in SCHEME_LABELS[config.scheme]:
            p = k * sharp[_coarse(label, config.scheme)] + (1.0 - k) * 0.5
            p = _noisy(p, config.annotation_noise_rate)
            per_label[label] = {"true": p, "false": 1.0 - p}
        tables[slot] = per_label
    return tables


def _gold(src: tuple[int, int], dst: tuple[int, int], scheme: Scheme) -> tuple[str, bool] | None:
    rel = relation_between(src, dst)
    if scheme is Scheme.RAW14:
        name = _RAW14_OF.get(rel)
        return None if name is None else (name, False)
    return allen_to_label(rel, scheme)


def _topic_lexicon(t: int, cfg: SynthConfig) -> dict[str, list]:
    bins = [[f"t{t}b{b}v{k}" for k in range(cfg.words_per_bin)] for b in range(cfg.word_bins)]
    return {"bins": bins, "events": [w for ws in bins for w in ws],
            "filler": [f"t{t}w{k}" for k in range(cfg.filler_words)]}


def _pick(rng, informative: float, right, choices):
    """``right`` with probability ``informative``, otherwise a uniform choice."""
    if rng.random() < informative:
        return right
    return choices[int(rng.integers(len(choices)))]


def _document(rng: np.random.Generator, cfg: SynthConfig, doc_id: str, topic: int,
              spread: int, lex: dict[str, list], tables) -> Document:
    lo, hi = cfg.events_per_doc
    n = int(rng.integers(lo, hi + 1))
    ref = spread // 2
    intervals = []
    for _ in range(n):
        s = int(rng.integers(0, spread))
        intervals.append((s, s + int(rng.integers(1, cfg.max_duration + 1))))

    chrono = sorted(range(n), key=lambda i: (intervals[i][0], intervals[i][1], i))
    text = chrono if rng.random() < cfg.narrative_order else [int(i) for i in rng.permutation(n)]

    noise = cfg.annotation_noise_rate
    attrs = []
    for i in range(n):
        s, e = intervals[i]
        phase = "past" if e <= ref else "future" if s > ref else "present"
        long = (e - s) > cfg.max_duration // 2
        # an uninformative tense is unmarked, as for nominal events
        tense = phase if rng.random() < cfg.informativeness("tense") else "none"
        aspect = _pick(rng, cfg.informativeness("aspect"),
                       "prog" if long else ("perfect" if phase == "past" else "none"),
                       ("none", "prog", "perfect", "prog_perfect"))
        ev_class = _pick(rng, cfg.informativeness("event_class"), "state" if long else "occurrence",
                         ("occurrence", "state", "report", "i_action"))
        bin_words = lex["bins"][s * cfg.word_bins // spread]
        word = _pick(rng, cfg.informativeness("word"),
                     bin_words[int(rng.integers(len(bin_words)))], lex["events"])
        modality = "none" if rng.random() < 0.9 else "would"
        polarity = "positive" if rng.random() < 0.95 else "negative"
        # annotation noise replaces attribute values uniformly
        if rng.random() < noise:
            tense = ("none", "present", "past", "future")[int(rng.integers(4))]
        if rng.random() < noise:
            aspect = ("none", "prog", "perfect", "prog_perfect")[int(rng.integers(4))]
        if rng.random() < noise:
            ev_class = ("occurrence", "state", "report", "i_action")[int(rng.integers(4))]
        attrs.append(dict(tense=tense, aspect=aspect, event_class=ev_class, word=word,
                          modality=modality, polarity=polarity))

    # sentences: consecutive events share a sentence with probability intra_sentence_fraction
    sentence_of = []
    current = 0
    for pos in range(n):
        if pos > 0 and rng.random() >= cfg.intra_sentence_fraction:
            current += 1
        sentence_of.append(current)
    n_sent = current + 1
    members: list[list[int]] = [[] for _ in range(n_sent)]
    for pos, i in enumerate(text):
        members[sentence_of[pos]].append(i)

    sentences: list[list[str]] = []
    spans: dict[int, tuple[int, int, int]] = {}
    fill = lex["filler"]
    slo, shi = cfg.sentence_length
    for sidx, evs in enumerate(members):
        toks: list[str] = []
        for k, i in enumerate(evs):
            toks.extend(fill[int(rng.integers(len(fill)))] for _ in range(int(rng.integers(1, 3))))
            if k > 0:
                prev = evs[k - 1]
                g = _gold(intervals[prev], intervals[i], Scheme.COARSE3)
                if g is not None and rng.random() < cfg.informativeness("signal"):
                    toks.append(SIGNALS[g[0]])
                    if rng.random() < 0.5:
                        toks.append("and")
            spans[i] = (sidx, len(toks), len(toks) + 1)
            toks.append(attrs[i]["word"])
        while len(toks) < int(rng.integers(slo, shi + 1)):
            toks.append(fill[int(rng.integers(len(fill)))])
        toks.append(".")
        sentences.append(toks)

    # links point forward in the text unless only the converse has a label
    order_pos = {i: p for p, i in enumerate(text)}
    links = []
    dominance = []
    shared: dict[int, list[str]] = {i: [f"{doc_id}x{i}"] for i in range(n)}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() >= cfg.pair_link_density:
                continue
            i, j = (a, b) if order_pos[a] < order_pos[b] else (b, a)
            g = _gold(intervals[i], intervals[j], cfg.scheme)
            if g is None:
                continue
            label, swapped = g
            src, dst = (j, i) if swapped else (i, j)
            links.append((src, dst, label))
            if rng.random() < tables["dominates"][label]["true"]:
                dominance.append((src, dst))
            if rng.random() < tables["entity_match"][label]["true"]:
                ent = f"{doc_id}s{src}_{dst}"
                shared[src].append(ent)
                shared[dst].append(ent)

    events = []
    for i in range(n):
        sidx, st, en = spans[i]
        a = attrs[i]
        events.append(EventInstance(
            event_id=f"e{i}", sentence_index=sidx, token_span=(st, en), word=a["word"],
            lemma=None, pos="VERB", tense=a["tense"], aspect=a["aspect"],
            modality=a["modality"], polarity=a["polarity"], event_class=a["event_class"],
            in_prep_phrase=bool(rng.random() < 0.1), entity_args=tuple(shared[i]),
        ))
    tlinks = [TLink(f"e{s}", f"e{d}", RelationLabel(cfg.scheme, lab)) for s, d, lab in links]
    return Document(
        doc_id=doc_id, topic=f"topic{topic}", sentences=sentences, events=events, tlinks=tlinks,
        dominance_pairs=[(f"e{s}", f"e{d}") for s, d in dominance],
    )


def generate(config: SynthConfig) -> tuple[Corpus, PlantedModel]:
    cfg = config
    root = np.random.default_rng(cfg.seed)
    lo, hi = cfg.topic_spread
    spreads = [int(root.integers(lo, hi + 1)) for _ in range(cfg.topics)]
    lexicons = [_topic_lexicon(t, cfg) for t in range(cfg.topics)]
    tables = planted_tables(cfg)
    corpus: Corpus = []
    total = 0
    d = 0
    while True:
        if cfg.total_pairs is None and d >= cfg.documents:
            break
        if cfg.total_pairs is not None and total >= cfg.total_pairs:
            break
        topic = d % cfg.topics
        rng = np.random.default_rng([cfg.seed, d])
        doc = _document(rng, cfg, f"d{d:04d}", topic, spreads[topic], lexicons[topic], tables)
        if cfg.total_pairs is not None and total + len(doc.tlinks) > cfg.total_pairs:
            keep = cfg.total_pairs - total
            doc = Document(doc.doc_id, doc.sentences, doc.events, doc.tlinks[:keep],
                           doc.dominance_pairs, doc.topic)
        corpus.append(doc)
        total += len(doc.tlinks)
        d += 1
    planted = PlantedModel(
        cfg.scheme, tables,
        {f"topic{t}": s for t, s in enumerate(spreads)},
        {f"topic{t}": lexicons[t]["bins"] for t in range(cfg.topics)},
    )
    return corpus, planted


def describe_planted(planted: PlantedModel) -> str:
    """Planted conditionals in the EM model dump format (unsmoothed, unit totals)."""
    from .emtrl import MODEL_HEADER

    labels = SCHEME_LABELS[planted.scheme]
    lines = [MODEL_HEADER, f"scheme\t{planted.scheme.value}", "smoothing\tnone"]
    for label in labels:
        lines.append(f"total\t{label}\t{1.0!r}")
    for slot, per_label in planted.tables.items():
        for label in labels:
            for value in sorted(per_label[label]):
                lines.append(f"{slot}\t{label}\t{value}\t{float(per_label[label][value])!r}")
    return "\n".join(lines) + "\n"


def rule_files(planted: PlantedModel) -> dict[str, str]:
    """Attribute, lexical and signal rule files matching the generator's mechanisms."""
    scheme = planted.scheme
    coarse_ok = scheme is Scheme.COARSE3
    attr = []
    for t1, t2, label in (("PAST", "FUTURE", "BEFORE"), ("FUTURE", "PAST", "AFTER"),
                          ("PAST", "PRESENT", "BEFORE"), ("PRESENT", "PAST", "AFTER")):
        if coarse_ok or label == "BEFORE":
            attr.append(f"if event1.tense = {t1} &&\n    event2.tense = {t2}\nThen\n"
                        f"relation(event1, event2) = {label}\n")
    lexical = []
    # a start bin at least two bins earlier than another almost always precedes it
    for bins in planted.topic_words.values():
        for i, early in enumerate(bins):
            for late in bins[i + 2:]:
                lexical.extend(f"{a} [happens-before] {b} :: 10.0" for a in early for b in late)
    signal = []
    for label, token in SIGNALS.items():
        if coarse_ok or label == "BEFORE":
            signal.append(f"if isTheSameSentence = TRUE &&\n    signal = {token} &&\n"
                          f"    signalBetweenTwoEvents = TRUE\nThen\nrelation(event1, event2) = {label}\n")
    return {
        "rules.txt": "\n".join(attr),
        "lexical.txt": "\n".join(lexical) + ("\n" if lexical else ""),
        "signal.txt": "\n".join(signal),
    }


__all__ = ["PlantedModel", "SynthConfig", "describe_planted", "generate", "planted_tables", "rule_files"]
