"""Documents, events, temporal links and the three relation label schemes.

The native corpus format is JSON lines: one document per line with the
fields ``doc_id``, ``topic``, ``sentences``, ``events``, ``dominance_pairs``
and ``tlinks``.  A small TimeML importer covers EVENT / MAKEINSTANCE /
event-event TLINK markup.
"""
from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple, Union

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Base class for corpus parsing and validation failures."""


class CorpusParseError(CorpusError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CorpusValidationError(CorpusError):
    pass


class Scheme(str, Enum):
    RAW14 = "Raw14"
    NORM6 = "Norm6"
    COARSE3 = "Coarse3"

    @classmethod
    def parse(cls, text: Union[str, "Scheme"]) -> "Scheme":
        if isinstance(text, Scheme):
            return text
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"unknown label scheme {text!r}")

    @property
    def labels(self) -> tuple[str, ...]:
        return SCHEME_LABELS[self]

    def index(self, label: str) -> int:
        return SCHEME_LABELS[self].index(label)


# Tuple order is the tie-breaking order used everywhere (votes, argmax,
# majority).  Norm6 follows the row order of the normalized distribution
# table; Coarse3 is BEFORE < AFTER < OVERLAP.
SCHEME_LABELS: dict[Scheme, tuple[str, ...]] = {
    Scheme.RAW14: (
        "SIMULTANEOUS", "IDENTITY", "BEFORE", "AFTER", "IBEFORE", "IAFTER",
        "INCLUDES", "IS_INCLUDED", "DURING", "DURING_INV", "BEGINS",
        "BEGUN_BY", "ENDS", "ENDED_BY",
    ),
    Scheme.NORM6: ("IBEFORE", "BEGINS", "ENDS", "SIMULTANEOUS", "INCLUDES", "BEFORE"),
    Scheme.COARSE3: ("BEFORE", "AFTER", "OVERLAP"),
}

# raw -> (normalized, arguments swapped)
_NORMALIZATION: dict[str, tuple[str, bool]] = {
    "SIMULTANEOUS": ("SIMULTANEOUS", False),
    "IDENTITY": ("SIMULTANEOUS", False),
    "BEFORE": ("BEFORE", False),
    "AFTER": ("BEFORE", True),
    "IBEFORE": ("IBEFORE", False),
    "IAFTER": ("IBEFORE", True),
    "INCLUDES": ("INCLUDES", False),
    "IS_INCLUDED": ("INCLUDES", True),
    "DURING": ("INCLUDES", True),
    "DURING_INV": ("INCLUDES", False),
    "BEGINS": ("BEGINS", False),
    "BEGUN_BY": ("BEGINS", True),
    "ENDS": ("ENDS", False),
    "ENDED_BY": ("ENDS", True),
}


def normalize_relation(raw: str) -> tuple[str, bool]:
    """Map a raw TimeML relation onto the six normalized relations.

    Returns ``(normalized, swapped)``; when ``swapped`` is true the caller
    must exchange the link's source and target.
    """
    try:
        return _NORMALIZATION[raw]
    except KeyError:
        raise ValueError(f"not a Raw14 relation: {raw!r}") from None


def coarsen_relation(raw: str) -> str:
    if raw not in _NORMALIZATION:
        raise ValueError(f"not a Raw14 relation: {raw!r}")
    if raw in ("BEFORE", "IBEFORE"):
        return "BEFORE"
    if raw in ("AFTER", "IAFTER"):
        return "AFTER"
    return "OVERLAP"


@dataclass(frozen=True)
class RelationLabel:
    scheme: Scheme
    value: str

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.value not in SCHEME_LABELS[self.scheme]:
            raise CorpusValidationError(
                f"{self.value!r} is not a {self.scheme.value} label")

    def __str__(self) -> str:
        return self.value


def convert_label(label: RelationLabel, target: Scheme) -> tuple[RelationLabel, bool]:
    """Convert a label to a coarser scheme; returns ``(label, swapped)``."""
    target = Scheme.parse(target)
    src = label.scheme
    if src == target:
        return label, False
    if target == Scheme.NORM6 and src == Scheme.RAW14:
        value, swapped = normalize_relation(label.value)
        return RelationLabel(target, value), swapped
    if target == Scheme.COARSE3 and src in (Scheme.RAW14, Scheme.NORM6):
        # Norm6 names are a subset of the raw names with identical meaning.
        return RelationLabel(target, coarsen_relation(label.value)), False
    if target == Scheme.RAW14 and src == Scheme.NORM6:
        return RelationLabel(target, label.value), False
    raise CorpusValidationError(f"cannot convert {src.value} label {label.value} to {target.value}")


# ---------------------------------------------------------------------------
# events and documents

POS_VALUES = ("VERB", "NOUN", "ADJ", "OTHER")
TENSE_VALUES = ("none", "present", "past", "future")
ASPECT_VALUES = ("none", "prog", "perfect", "prog_perfect")
MODALITY_VALUES = ("none", "to", "should", "would", "could", "can", "might")
POLARITY_VALUES = ("positive", "negative")
EVENT_CLASS_VALUES = (
    "report", "aspectual", "state", "i_state", "i_action", "perception", "occurrence")

ATTRIBUTE_VALUES: dict[str, tuple[str, ...]] = {
    "pos": POS_VALUES,
    "tense": TENSE_VALUES,
    "aspect": ASPECT_VALUES,
    "modality": MODALITY_VALUES,
    "polarity": POLARITY_VALUES,
    "event_class": EVENT_CLASS_VALUES,
}

# Spellings used by TimeML and rule files.
_ATTRIBUTE_ALIASES: dict[str, dict[str, str]] = {
    "pos": {"verb": "VERB", "noun": "NOUN", "adj": "ADJ", "adjective": "ADJ",
            "other": "OTHER", "preposition": "OTHER", "v": "VERB", "n": "NOUN"},
    "aspect": {"progressive": "prog", "perfective": "perfect",
               "perfective_progressive": "prog_perfect",
               "perfect_progressive": "prog_perfect"},
    "polarity": {"pos": "positive", "neg": "negative"},
}


def coerce_attribute(name: str, value: object) -> str:
    """Canonicalize an attribute value.

    Unknown values fall back to ``"none"`` where the attribute has such a
    member and are rejected otherwise.
    """
    allowed = ATTRIBUTE_VALUES[name]
    text = "none" if value is None else str(value).strip()
    if text in allowed:
        return text
    key = text.lower()
    alias = _ATTRIBUTE_ALIASES.get(name, {}).get(key)
    if alias is not None:
        return alias
    for candidate in allowed:
        if candidate.lower() == key:
            return candidate
    if "none" in allowed:
        return "none"
    raise CorpusValidationError(f"invalid {name} value {value!r}")


@dataclass(frozen=True)
class EventInstance:
    event_id: str
    sentence_index: int
    token_span: tuple[int, int]
    word: str
    lemma: str | None = None
    pos: str = "VERB"
    tense: str = "none"
    aspect: str = "none"
    modality: str = "none"
    polarity: str = "positive"
    event_class: str = "occurrence"
    in_prep_phrase: bool = False
    governing_verb: str | None = None
    governing_verb_pos: str | None = None
    auxiliary: str | None = None
    synset_id: str | None = None
    entity_args: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.event_id:
            raise CorpusValidationError("event_id must be non-empty")
        if self.sentence_index < 0:
            raise CorpusValidationError(f"{self.event_id}: negative sentence_index")
        start, end = self.token_span
        object.__setattr__(self, "token_span", (int(start), int(end)))
        if not 0 <= start < end:
            raise CorpusValidationError(f"{self.event_id}: bad token_span {self.token_span}")
        object.__setattr__(self, "entity_args", tuple(self.entity_args))
        for name, allowed in ATTRIBUTE_VALUES.items():
            if getattr(self, name) not in allowed:
                raise CorpusValidationError(
                    f"{self.event_id}: {name}={getattr(self, name)!r} not in {allowed}")

    @property
    def position(self) -> tuple[int, int]:
        return (self.sentence_index, self.token_span[0])

    def to_record(self) -> dict:
        return {
            "event_id": self.event_id,
            "sentence_index": self.sentence_index,
            "token_span": list(self.token_span),
            "word": self.word,
            "lemma": self.lemma,
            "pos": self.pos,
            "tense": self.tense,
            "aspect": self.aspect,
            "modality": self.modality,
            "polarity": self.polarity,
            "event_class": self.event_class,
            "in_prep_phrase": self.in_prep_phrase,
            "governing_verb": self.governing_verb,
            "governing_verb_pos": self.governing_verb_pos,
            "auxiliary": self.auxiliary,
            "synset_id": self.synset_id,
            "entity_args": list(self.entity_args),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EventInstance":
        try:
            kwargs = dict(
                event_id=str(rec["event_id"]),
                sentence_index=int(rec["sentence_index"]),
                token_span=tuple(rec["token_span"]),
                word=str(rec["word"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusValidationError(f"bad event record: {exc}") from None
        for name in ATTRIBUTE_VALUES:
            if name in rec:
                kwargs[name] = coerce_attribute(name, rec[name])
        for name in ("lemma", "governing_verb", "governing_verb_pos", "auxiliary", "synset_id"):
            if rec.get(name) is not None:
                kwargs[name] = str(rec[name])
        kwargs["in_prep_phrase"] = bool(rec.get("in_prep_phrase", False))
        kwargs["entity_args"] = tuple(str(a) for a in rec.get("entity_args", ()))
        return cls(**kwargs)


@dataclass(frozen=True)
class TLink:
    source: str
    target: str
    label: RelationLabel

    @property
    def pair(self) -> tuple[str, str]:
        return (self.source, self.target)


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[tuple[str, ...], ...]
    events: tuple[EventInstance, ...] = ()
    tlinks: tuple[TLink, ...] = ()
    dominance_pairs: tuple[tuple[str, str], ...] = ()
    topic: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "tlinks", tuple(self.tlinks))
        object.__setattr__(self, "dominance_pairs", tuple(tuple(p) for p in self.dominance_pairs))
        self._validate()

    def _validate(self):
        ids = set()
        for ev in self.events:
            if ev.event_id in ids:
                raise CorpusValidationError(f"{self.doc_id}: duplicate event_id {ev.event_id!r}")
            ids.add(ev.event_id)
            if ev.sentence_index >= len(self.sentences):
                raise CorpusValidationError(
                    f"{self.doc_id}: event {ev.event_id!r} sentence {ev.sentence_index} out of range")
            if ev.token_span[1] > len(self.sentences[ev.sentence_index]):
                raise CorpusValidationError(
                    f"{self.doc_id}: event {ev.event_id!r} span {ev.token_span} exceeds sentence length")
        seen = set()
        for link in self.tlinks:
            for end in link.pair:
                if end not in ids:
                    raise CorpusValidationError(
                        f"{self.doc_id}: tlink references unknown event {end!r}")
            if link.source == link.target:
                raise CorpusValidationError(f"{self.doc_id}: self-link on {link.source!r}")
            if link.pair in seen:
                raise CorpusValidationError(f"{self.doc_id}: duplicate tlink {link.pair}")
            seen.add(link.pair)
        for pair in self.dominance_pairs:
            if len(pair) != 2:
                raise CorpusValidationError(f"{self.doc_id}: malformed dominance pair {pair}")
            for end in pair:
                if end not in ids:
                    raise CorpusValidationError(
                        f"{self.doc_id}: dominance pair references unknown event {end!r}")

    @cached_property
    def event_map(self) -> dict[str, EventInstance]:
        return {ev.event_id: ev for ev in self.events}

    @cached_property
    def dominance_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.dominance_pairs)

    def event(self, event_id: str) -> EventInstance:
        try:
            return self.event_map[event_id]
        except KeyError:
            raise KeyError(f"{self.doc_id}: no event {event_id!r}") from None

    def same_sentence(self, e1: str, e2: str) -> bool:
        return self.event(e1).sentence_index == self.event(e2).sentence_index

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "topic": self.topic,
            "sentences": [list(s) for s in self.sentences],
            "events": [ev.to_record() for ev in self.events],
            "dominance_pairs": [list(p) for p in self.dominance_pairs],
            "tlinks": [
                {"source": t.source, "target": t.target,
                 "scheme": t.label.scheme.value, "value": t.label.value}
                for t in self.tlinks
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Document":
        if not isinstance(rec, dict):
            raise CorpusValidationError("document record must be an object")
        try:
            doc_id = str(rec["doc_id"])
            sentences = [[str(tok) for tok in s] for s in rec["sentences"]]
        except (KeyError, TypeError) as exc:
            raise CorpusValidationError(f"bad document record: missing {exc}") from None
        events = [EventInstance.from_record(e) for e in rec.get("events", ())]
        tlinks = []
        for t in rec.get("tlinks", ()):
            try:
                label = RelationLabel(Scheme.parse(t["scheme"]), str(t["value"]))
                tlinks.append(TLink(str(t["source"]), str(t["target"]), label))
            except (KeyError, TypeError) as exc:
                raise CorpusValidationError(f"{doc_id}: bad tlink record {t!r}: {exc}") from None
            except ValueError as exc:
                raise CorpusValidationError(f"{doc_id}: {exc}") from None
        topic = rec.get("topic")
        return cls(
            doc_id=doc_id,
            topic=None if topic is None else str(topic),
            sentences=sentences,
            events=events,
            tlinks=tlinks,
            dominance_pairs=[tuple(p) for p in rec.get("dominance_pairs", ())],
        )


Corpus = list[Document]
PairId = tuple[str, str, str]  # (doc_id, source, target)


def corpus_pairs(corpus: Iterable[Document]) -> list[PairId]:
    return [(doc.doc_id, t.source, t.target) for doc in corpus for t in doc.tlinks]


def gold_labels(corpus: Iterable[Document]) -> dict[PairId, str]:
    return {(doc.doc_id, t.source, t.target): t.label.value for doc in corpus for t in doc.tlinks}


# ---------------------------------------------------------------------------
# native file format

def _iter_lines(stream) -> Iterator[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = bytes(stream).decode("utf-8")
    if isinstance(stream, str):
        yield from stream.splitlines()
        return
    for line in stream:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def parse_corpus(stream: Union[bytes, str, IO]) -> Corpus:
    docs: Corpus = []
    seen: set[str] = set()
    for lineno, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"malformed record: {exc.msg}", lineno) from None
        try:
            doc = Document.from_record(rec)
        except CorpusValidationError as exc:
            raise CorpusValidationError(f"line {lineno}: {exc}") from None
        if doc.doc_id in seen:
            raise CorpusValidationError(f"line {lineno}: duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs


def serialize_corpus(corpus: Iterable[Document]) -> bytes:
    lines = [json.dumps(doc.to_record(), ensure_ascii=False) for doc in corpus]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def read_corpus(path: Union[str, Path]) -> Corpus:
    with open(path, "rb") as fh:
        return parse_corpus(fh)


def write_corpus(corpus: Iterable[Document], path: Union[str, Path]) -> None:
    Path(path).write_bytes(serialize_corpus(corpus))


# ---------------------------------------------------------------------------
# scheme conversion and statistics

def convert_document(doc: Document, target: Scheme) -> tuple[Document, int]:
    """Convert every tlink of ``doc`` to ``target``.

    Links whose converted (source, target) pair collides with an earlier
    link are dropped; the number dropped is returned.
    """
    target = Scheme.parse(target)
    links, seen, dropped = [], set(), 0
    for t in doc.tlinks:
        label, swapped = convert_label(t.label, target)
        src, dst = (t.target, t.source) if swapped else (t.source, t.target)
        if (src, dst) in seen:
            dropped += 1
            continue
        seen.add((src, dst))
        links.append(TLink(src, dst, label))
    return replace(doc, tlinks=tuple(links)), dropped


def convert_corpus(corpus: Iterable[Document], target: Scheme) -> Corpus:
    out, dropped = [], 0
    for doc in corpus:
        converted, n = convert_document(doc, target)
        out.append(converted)
        dropped += n
    if dropped:
        log.warning("dropped %d tlinks that collided after conversion", dropped)
    return out


@dataclass(frozen=True)
class LabelStats:
    scheme: Scheme
    counts: dict[str, int]
    total: int
    majority: str | None
    majority_fraction: float | None


def label_stats(counts: dict[str, int], scheme: Scheme) -> LabelStats:
    scheme = Scheme.parse(scheme)
    full = {label: int(counts.get(label, 0)) for label in scheme.labels}
    extra = set(counts) - set(full)
    if extra:
        raise CorpusValidationError(f"labels {sorted(extra)} not in {scheme.value}")
    total = sum(full.values())
    if total == 0:
        return LabelStats(scheme, full, 0, None, None)
    # max() returns the first maximal item, i.e. scheme order breaks ties
    majority = max(scheme.labels, key=lambda lab: full[lab])
    return LabelStats(scheme, full, total, majority, full[majority] / total)


def corpus_stats(corpus: Iterable[Document], scheme: Scheme) -> LabelStats:
    scheme = Scheme.parse(scheme)
    counts: Counter[str] = Counter()
    for doc in corpus:
        for t in doc.tlinks:
            counts[convert_label(t.label, scheme)[0].value] += 1
    return label_stats(counts, scheme)


# ---------------------------------------------------------------------------
# TimeML subset import

_TOKEN_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]", re.UNICODE)
_SENTENCE_END = {".", "!", "?"}


class TimeMLImport(NamedTuple):
    document: Document
    skipped_tlinks: int


def _strip_declarations(text: str) -> str:
    text = re.sub(r"^\s*<\?xml[^>]*\?>", "", text)
    return re.sub(r"<!DOCTYPE[^>]*>", "", text)


def import_timeml(text: str, doc_id: str | None = None, topic: str | None = None) -> TimeMLImport:
    """Read EVENT, MAKEINSTANCE and event-event TLINK tags from TimeML markup.

    Links that touch a time expression are skipped and counted.  Sentences
    come from ``<s>`` elements when present, otherwise from sentence-final
    punctuation.
    """
    try:
        root = ET.fromstring(f"<_timeml_root>{_strip_declarations(text)}</_timeml_root>")
    except ET.ParseError as exc:
        raise CorpusParseError(f"malformed TimeML markup: {exc}") from None

    has_s = root.find(".//s") is not None
    sentences: list[list[str]] = [[]]
    event_spans: dict[str, tuple[int, int, int, str]] = {}
    event_class: dict[str, str] = {}

    def add_text(chunk: str | None) -> list[tuple[int, int]]:
        placed = []
        for tok in _TOKEN_RE.findall(chunk or ""):
            sentences[-1].append(tok)
            placed.append((len(sentences) - 1, len(sentences[-1]) - 1))
            if not has_s and tok in _SENTENCE_END:
                sentences.append([])
        return placed

    def walk(elem: ET.Element):
        if elem.tag == "s" and sentences[-1]:
            sentences.append([])
        if elem.tag == "EVENT":
            eid = elem.get("eid")
            if not eid:
                raise CorpusValidationError("EVENT without eid")
            placed = add_text("".join(elem.itertext()))
            if not placed:
                raise CorpusValidationError(f"EVENT {eid} has no text")
            sent = placed[0][0]
            toks = [p for p in placed if p[0] == sent]
            word = " ".join(sentences[sent][i] for _, i in toks)
            event_spans[eid] = (sent, toks[0][1], toks[-1][1] + 1, word)
            event_class[eid] = elem.get("class", "OCCURRENCE")
        else:
            add_text(elem.text)
            for child in elem:
                walk(child)
                add_text(child.tail)
        if elem.tag == "s" and sentences[-1]:
            sentences.append([])

    add_text(root.text)
    for child in root:
        walk(child)
        add_text(child.tail)

    remap, kept = {}, []
    for i, sent in enumerate(sentences):
        if sent:
            remap[i] = len(kept)
            kept.append(sent)

    events: list[EventInstance] = []
    for mi in root.iter("MAKEINSTANCE"):
        eiid, eid = mi.get("eiid"), mi.get("eventID")
        if not eiid:
            raise CorpusValidationError("MAKEINSTANCE without eiid")
        if eid not in event_spans:
            raise CorpusValidationError(f"MAKEINSTANCE {eiid} refers to unknown EVENT {eid!r}")
        sent, start, end, word = event_spans[eid]
        events.append(EventInstance(
            event_id=eiid,
            sentence_index=remap[sent],
            token_span=(start, end),
            word=word,
            pos=coerce_attribute("pos", mi.get("pos", "OTHER")),
            tense=coerce_attribute("tense", mi.get("tense")),
            aspect=coerce_attribute("aspect", mi.get("aspect")),
            modality=coerce_attribute("modality", mi.get("modality")),
            polarity=coerce_attribute("polarity", mi.get("polarity", "POS")),
            event_class=coerce_attribute("event_class", event_class[eid]),
        ))

    known = {ev.event_id for ev in events}
    tlinks, seen, skipped = [], set(), 0
    for tl in root.iter("TLINK"):
        src, dst = tl.get("eventInstanceID"), tl.get("relatedToEventInstance")
        if src is None or dst is None or tl.get("timeID") or tl.get("relatedToTime"):
            skipped += 1
            continue
        for end in (src, dst):
            if end not in known:
                raise CorpusValidationError(f"TLINK {tl.get('lid')} references unknown instance {end!r}")
        rel = (tl.get("relType") or "").upper()
        try:
            label = RelationLabel(Scheme.RAW14, rel)
        except CorpusValidationError:
            raise CorpusValidationError(f"TLINK {tl.get('lid')}: unknown relType {rel!r}") from None
        if (src, dst) in seen or src == dst:
            skipped += 1
            continue
        seen.add((src, dst))
        tlinks.append(TLink(src, dst, label))

    doc = Document(doc_id=doc_id or "timeml", topic=topic, sentences=kept or [[]],
                   events=events, tlinks=tlinks)
    return TimeMLImport(doc, skipped)


def import_timeml_file(path: Union[str, Path]) -> TimeMLImport:
    path = Path(path)
    return import_timeml(path.read_text(encoding="utf-8"), doc_id=path.stem)


def document_from_counts(counts: dict[str, int], scheme: Scheme, doc_id: str = "counts") -> Document:
    """Build a document whose tlinks realize a label histogram.

    Useful for checking baseline arithmetic against published class
    distributions.
    """
    scheme = Scheme.parse(scheme)
    events, links = [], []
    k = 0
    for label in scheme.labels:
        for _ in range(int(counts.get(label, 0))):
            a, b = f"e{2 * k}", f"e{2 * k + 1}"
            events.append(EventInstance(a, 0, (2 * k, 2 * k + 1), "x"))
            events.append(EventInstance(b, 0, (2 * k + 1, 2 * k + 2), "y"))
            links.append(TLink(a, b, RelationLabel(scheme, label)))
            k += 1
    sentence = tuple("x y".split() * k) if k else ("x",)
    return Document(doc_id=doc_id, sentences=(sentence,), events=events, tlinks=links)


def iter_event_pairs(doc: Document, same_sentence_only: bool = False) -> Iterator[tuple[str, str]]:
    """All unordered event pairs in text order (first event earlier)."""
    ordered = sorted(doc.events, key=lambda ev: (ev.position, ev.event_id))
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if same_sentence_only and a.sentence_index != b.sentence_index:
                continue
            yield a.event_id, b.event_id


__all__ = [
    "ATTRIBUTE_VALUES", "Corpus", "CorpusError", "CorpusParseError", "CorpusValidationError",
    "Document", "EventInstance", "LabelStats", "PairId", "RelationLabel", "SCHEME_LABELS",
    "Scheme", "TLink", "TimeMLImport", "coarsen_relation", "coerce_attribute",
    "convert_corpus", "convert_document", "convert_label", "corpus_pairs", "corpus_stats",
    "document_from_counts", "gold_labels", "import_timeml", "import_timeml_file",
    "iter_event_pairs", "label_stats", "normalize_relation", "parse_corpus", "read_corpus",
    "serialize_corpus", "write_corpus",
]
