"""Categorical feature extraction for event pairs and a (slot, value) index."""
from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple, Union

from .corpus import Document, EventInstance

ABSENT = "ABSENT"

BASIC_SLOTS = ("tense", "aspect", "modality", "polarity", "event_class", "word", "pos")

# per-event rows of the EMTRL feature table, each emitted as <name>_1 / <name>_2
_EMTRL_EVENT_SLOTS = (
    "word", "lemma", "synset", "pos", "gov_verb", "gov_verb_pos", "auxiliary",
    "event_class", "tense", "aspect", "modality", "polarity",
)
_EMTRL_PAIR_SLOTS = (
    "tense_match", "aspect_match", "class_match", "tense_pair", "aspect_pair",
    "class_pair", "pos_pair", "preposition_1", "preposition_2", "text_order",
    "dominates", "entity_match",
)
EMTRL_SLOTS: tuple[str, ...] = tuple(
    f"{s}_{k}" for s in _EMTRL_EVENT_SLOTS for k in (1, 2)) + _EMTRL_PAIR_SLOTS

BCDC_BASIC_SLOTS: tuple[str, ...] = tuple(
    f"{s}_{k}" for s in BASIC_SLOTS for k in (1, 2)) + ("tense_match", "aspect_match")
BCDC_EXTRA_SLOTS: tuple[str, ...] = BCDC_BASIC_SLOTS + (
    "preposition_1", "preposition_2", "same_sentence", "sentence_distance")

# likelihood slots of the EM learner: per-event tense and aspect enter jointly
EM_SLOTS: tuple[str, ...] = tuple(
    s for s in EMTRL_SLOTS if s not in ("tense_1", "tense_2", "aspect_1", "aspect_2")
) + ("tense_aspect_1", "tense_aspect_2")

SLOT_REGISTRY: frozenset[str] = frozenset(BASIC_SLOTS + EMTRL_SLOTS + BCDC_EXTRA_SLOTS + EM_SLOTS)


class FeatureSet(str, Enum):
    BCDC_BASIC = "BcdcBasic"
    BCDC_EXTRA = "BcdcExtra"
    EMTRL = "Emtrl"


class FeatureValue(NamedTuple):
    slot: str
    value: str


FeatureVector = tuple[FeatureValue, ...]
SparseVector = dict[int, float]


def _flag(b: bool) -> str:
    return "true" if b else "false"


def _opt(v: str | None) -> str:
    return ABSENT if v is None or v == "" else v


def extract_basic(event: EventInstance) -> list[FeatureValue]:
    return [
        FeatureValue("tense", event.tense),
        FeatureValue("aspect", event.aspect),
        FeatureValue("modality", event.modality),
        FeatureValue("polarity", event.polarity),
        FeatureValue("event_class", event.event_class),
        FeatureValue("word", event.word.lower()),
        FeatureValue("pos", event.pos.lower()),
    ]


def _distance_bucket(d: int) -> str:
    return "0" if d == 0 else "1" if d == 1 else "2+"


def extract_pair(doc: Document, e1: str, e2: str,
                 feature_set: Union[FeatureSet, str] = FeatureSet.BCDC_BASIC) -> FeatureVector:
    """Features of the ordered pair (e1, e2); raises KeyError on unknown ids."""
    feature_set = FeatureSet(feature_set)
    a, b = doc.event(e1), doc.event(e2)
    if feature_set is FeatureSet.EMTRL:
        return _emtrl(doc, a, b)

    out = []
    for k, ev in ((1, a), (2, b)):
        out.extend(FeatureValue(f"{fv.slot}_{k}", fv.value) for fv in extract_basic(ev))
    # keep slot order grouped by attribute as in BCDC_BASIC_SLOTS
    out.sort(key=lambda fv: BCDC_BASIC_SLOTS.index(fv.slot))
    out.append(FeatureValue("tense_match", _tense_match(a, b)))
    out.append(FeatureValue("aspect_match", _flag(a.aspect == b.aspect)))
    if feature_set is FeatureSet.BCDC_EXTRA:
        dist = abs(a.sentence_index - b.sentence_index)
        out.append(FeatureValue("preposition_1", _flag(a.in_prep_phrase)))
        out.append(FeatureValue("preposition_2", _flag(b.in_prep_phrase)))
        out.append(FeatureValue("same_sentence", _flag(dist == 0)))
        out.append(FeatureValue("sentence_distance", _distance_bucket(dist)))
    return tuple(out)


def _event_values(ev: EventInstance) -> dict[str, str]:
    return {
        "word": ev.word.lower(),
        "lemma": _opt(ev.lemma),
        "synset": _opt(ev.synset_id),
        "pos": ev.pos.lower(),
        "gov_verb": _opt(ev.governing_verb),
        "gov_verb_pos": _opt(ev.governing_verb_pos),
        "auxiliary": _opt(ev.auxiliary),
        "event_class": ev.event_class,
        "tense": ev.tense,
        "aspect": ev.aspect,
        "modality": ev.modality,
        "polarity": ev.polarity,
    }


def _tense_match(a: EventInstance, b: EventInstance) -> str:
    # two unmarked tenses do not agree on anything temporal
    if a.tense == "none" or b.tense == "none":
        return ABSENT
    return _flag(a.tense == b.tense)


def _emtrl(doc: Document, a: EventInstance, b: EventInstance) -> FeatureVector:
    va, vb = _event_values(a), _event_values(b)
    values = {}
    for slot in _EMTRL_EVENT_SLOTS:
        values[f"{slot}_1"] = va[slot]
        values[f"{slot}_2"] = vb[slot]
    values["tense_match"] = _tense_match(a, b)
    values["aspect_match"] = _flag(a.aspect == b.aspect)
    values["class_match"] = _flag(a.event_class == b.event_class)
    values["tense_pair"] = f"{a.tense}|{b.tense}"
    values["aspect_pair"] = f"{a.aspect}|{b.aspect}"
    values["class_pair"] = f"{a.event_class}|{b.event_class}"
    values["pos_pair"] = f"{va['pos']}|{vb['pos']}"
    values["preposition_1"] = _flag(a.in_prep_phrase)
    values["preposition_2"] = _flag(b.in_prep_phrase)
    values["text_order"] = _flag(a.position < b.position)
    values["dominates"] = _flag((a.event_id, b.event_id) in doc.dominance_set)
    if a.entity_args and b.entity_args:
        values["entity_match"] = _flag(bool(set(a.entity_args) & set(b.entity_args)))
    else:
        values["entity_match"] = ABSENT
    return tuple(FeatureValue(slot, values[slot]) for slot in EMTRL_SLOTS)


def extract_em(doc: Document, e1: str, e2: str) -> tuple[str, ...]:
    """Values of ``EM_SLOTS`` for the ordered pair (e1, e2)."""
    values = dict(_emtrl(doc, doc.event(e1), doc.event(e2)))
    values["tense_aspect_1"] = f"{values['tense_1']}/{values['aspect_1']}"
    values["tense_aspect_2"] = f"{values['tense_2']}/{values['aspect_2']}"
    return tuple(values[slot] for slot in EM_SLOTS)


class FeatureIndex:
    """Stable mapping from (slot, value) to integer dimensions.

    Persisted as ``slot<TAB>value<TAB>dimension`` lines.
    """

    def __init__(self):
        self._dims: dict[tuple[str, str], int] = {}

    def __len__(self) -> int:
        return len(self._dims)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._dims

    def get(self, slot: str, value: str) -> int | None:
        return self._dims.get((slot, value))

    def register(self, slot: str, value: str) -> int:
        if slot not in SLOT_REGISTRY:
            raise ValueError(f"unregistered feature slot {slot!r}")
        dim = self._dims.get((slot, value))
        if dim is None:
            dim = self._dims[(slot, value)] = len(self._dims)
        return dim

    def items(self):
        return self._dims.items()

    def to_text(self) -> str:
        return "".join(f"{s}\t{v}\t{d}\n" for (s, v), d in sorted(self._dims.items(), key=lambda kv: kv[1]))

    @classmethod
    def from_text(cls, text: str) -> "FeatureIndex":
        idx = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"feature index line {lineno}: expected 3 tab-separated fields")
            idx._dims[(parts[0], parts[1])] = int(parts[2])
        if sorted(idx._dims.values()) != list(range(len(idx._dims))):
            raise ValueError("feature index dimensions are not contiguous")
        return idx

    def save(self, path: Union[str, Path]):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureIndex":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def vectorize(vec: Iterable[FeatureValue], index: FeatureIndex, frozen: bool = True) -> SparseVector:
    """Binary sparse vector; with ``frozen`` unseen pairs are dropped."""
    out: SparseVector = {}
    for slot, value in vec:
        dim = index.get(slot, value) if frozen else index.register(slot, value)
        if dim is not None:
            out[dim] = 1.0
    return dict(sorted(out.items()))


__all__ = [
    "ABSENT", "BASIC_SLOTS", "BCDC_BASIC_SLOTS", "BCDC_EXTRA_SLOTS", "EMTRL_SLOTS", "EM_SLOTS",
    "FeatureIndex", "FeatureSet", "FeatureValue", "FeatureVector", "SLOT_REGISTRY",
    "SparseVector", "extract_basic", "extract_em", "extract_pair", "vectorize",
]
