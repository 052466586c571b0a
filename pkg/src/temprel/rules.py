"""Hand-written labeling rules used to seed the EM learner.

Attribute and signal rules share a block format::

    if conjBetweenEvents = YES &&
        isTheSameSentence = TRUE &&
        event1.class = (OCCURRENCE|PERCEPTION) &&
        event2.tense = PAST
    Then
    relation(event1, event2) = AFTER

Values may be wrapped in ``*`` or ``$`` and are compared case-insensitively.
Lexical precedence rules are either ``lemma1 <TAB> lemma2 <TAB> strength``
or ``lemma1 [happens-before] lemma2 :: strength``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .corpus import (
    ATTRIBUTE_VALUES, SCHEME_LABELS, Document, RelationLabel, Scheme, coerce_attribute, convert_label,
)

CONJUNCTIONS = frozenset({"and", "but", "or", "nor", "yet", "so", "then", "while", "because"})

_EVENT_ATTRS = {
    "class": "event_class", "event_class": "event_class", "tense": "tense", "aspect": "aspect",
    "pos": "pos", "modality": "modality", "polarity": "polarity", "word": "word", "lemma": "lemma",
}
_PAIR_KEYS = {"isthesamesentence", "conjbetweenevents", "signal",
              "signalbetweentwoevents"}
_TRUE = {"true", "yes", "1"}
_FALSE = {"false", "no", "0"}


class RuleParseError(ValueError):
    def __init__(self, message: str, rule_index: int | None = None):
        self.rule_index = rule_index
        prefix = f"rule {rule_index}: " if rule_index is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Condition:
    key: str                 # e.g. "event1.tense", "isthesamesentence", "signal"
    values: tuple[str, ...]  # accepted alternatives (canonical spelling)


@dataclass(frozen=True)
class AttributeRule:
    conditions: tuple[Condition, ...]
    label: str               # label as written; converted per scheme when applied
    index: int


@dataclass
class RuleBase:
    attribute_rules: list[AttributeRule] = field(default_factory=list)
    lexical_rules: dict[tuple[str, str], float] = field(default_factory=dict)
    signal_rules: list[AttributeRule] = field(default_factory=list)


# ---------------------------------------------------------------------------
# parsing

def _clean(token: str) -> str:
    return token.strip().strip("*$").strip()


def _parse_condition(text: str, index: int) -> Condition:
    if "=" not in text:
        raise RuleParseError(f"condition {text!r} lacks '='", index)
    key, value = (_clean(part) for part in text.split("=", 1))
    value = value.strip("()")
    alternatives = [_clean(v) for v in value.split("|") if _clean(v)]
    if not alternatives:
        raise RuleParseError(f"condition {text!r} has no value", index)
    low = key.lower()
    if low.startswith(("event1.", "event2.")):
        attr = low.split(".", 1)[1]
        if attr not in _EVENT_ATTRS:
            raise RuleParseError(f"unknown event attribute {attr!r}", index)
        name = _EVENT_ATTRS[attr]
        if name in ATTRIBUTE_VALUES:
            try:
                alternatives = [coerce_attribute(name, v) for v in alternatives]
            except ValueError as exc:
                raise RuleParseError(str(exc), index) from None
        else:
            alternatives = [v.lower() for v in alternatives]
        return Condition(f"{low[:6]}.{name}", tuple(alternatives))
    if low not in _PAIR_KEYS:
        raise RuleParseError(f"unknown condition key {key!r}", index)
    if low != "signal":
        for v in alternatives:
            if v.lower() not in _TRUE | _FALSE:
                raise RuleParseError(f"{key} expects a boolean, got {v!r}", index)
        alternatives = ["true" if v.lower() in _TRUE else "false" for v in alternatives]
    else:
        alternatives = [v.lower() for v in alternatives]
    return Condition(low, tuple(alternatives))


_RELATION_RE = re.compile(
    r"^\$?\s*relation\s*\(\s*event_?\{?1\}?\s*,\s*event_?\{?2\}?\s*\)\s*=\s*([A-Za-z_*]+)\s*\$?$")


def parse_attribute_rules(text: str) -> list[AttributeRule]:
    rules = []
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#") and ln != "```"]
    k = 0
    while k < len(lines):
        index = len(rules)
        head = lines[k]
        if not head.lower().startswith("if"):
            raise RuleParseError(f"expected 'if', got {head!r}", index)
        body = [head[2:]]
        k += 1
        while k < len(lines) and lines[k].lower() != "then":
            body.append(lines[k])
            k += 1
        if k >= len(lines):
            raise RuleParseError("missing 'Then'", index)
        k += 1
        if k >= len(lines):
            raise RuleParseError("missing relation line", index)
        match = _RELATION_RE.match(lines[k].replace(" ", "").replace("\\", ""))
        if not match:
            raise RuleParseError(f"bad relation line {lines[k]!r}", index)
        k += 1
        conditions = tuple(
            _parse_condition(part, index)
            for part in " ".join(body).split("&&") if part.strip())
        if not conditions:
            raise RuleParseError("rule has no conditions", index)
        rules.append(AttributeRule(conditions, _clean(match.group(1)).upper(), index))
    return rules


_VO_RE = re.compile(r"^(\S+)\s+\[happens-before\]\s+(\S+)\s*::\s*(\S+)$")


def parse_lexical_rules(text: str) -> dict[tuple[str, str], float]:
    rules: dict[tuple[str, str], float] = {}
    for index, line in enumerate(ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")):
        line = line.strip()
        m = _VO_RE.match(line)
        if m:
            a, b, s = m.groups()
        else:
            parts = line.split("\t")
            if len(parts) != 3:
                raise RuleParseError(f"expected 'lemma1<TAB>lemma2<TAB>strength', got {line!r}", index)
            a, b, s = parts
        try:
            strength = float(s)
        except ValueError:
            raise RuleParseError(f"bad strength {s!r}", index) from None
        if not math.isfinite(strength):
            raise RuleParseError("strength must be finite", index)
        key = (a.strip().lower(), b.strip().lower())
        rules[key] = max(strength, rules.get(key, -math.inf))
    return rules


def load_rulebase(rules_file: Union[str, Path, None] = None, lexical_file: Union[str, Path, None] = None,
                  signal_file: Union[str, Path, None] = None) -> RuleBase:
    rb = RuleBase()
    if rules_file:
        rb.attribute_rules = parse_attribute_rules(Path(rules_file).read_text(encoding="utf-8"))
    if lexical_file:
        rb.lexical_rules = parse_lexical_rules(Path(lexical_file).read_text(encoding="utf-8"))
    if signal_file:
        rb.signal_rules = parse_attribute_rules(Path(signal_file).read_text(encoding="utf-8"))
    return rb


# ---------------------------------------------------------------------------
# matching

def _tokens_between(doc: Document, e1: str, e2: str) -> list[str]:
    a, b = sorted((doc.event(e1), doc.event(e2)), key=lambda ev: ev.position)
    out = []
    for s in range(a.sentence_index, b.sentence_index + 1):
        sent = doc.sentences[s]
        lo = a.token_span[1] if s == a.sentence_index else 0
        hi = b.token_span[0] if s == b.sentence_index else len(sent)
        out.extend(tok.lower() for tok in sent[lo:hi])
    return out


def _tokens_around(doc: Document, e1: str, e2: str) -> list[str]:
    """Tokens of the events' sentences outside the stretch between them."""
    a, b = sorted((doc.event(e1), doc.event(e2)), key=lambda ev: ev.position)
    before = doc.sentences[a.sentence_index][:a.token_span[0]]
    after = doc.sentences[b.sentence_index][b.token_span[1]:]
    return [tok.lower() for tok in (*before, *after)]


def _event_value(ev, name: str) -> str:
    if name == "word":
        return ev.word.lower()
    if name == "lemma":
        return (ev.lemma or ev.word).lower()
    return getattr(ev, name)


def rule_matches(rule: AttributeRule, doc: Document, e1: str, e2: str) -> bool:
    events = {"event1": doc.event(e1), "event2": doc.event(e2)}
    conds = {c.key: c for c in rule.conditions}
    for c in rule.conditions:
        if c.key.startswith("event"):
            which, name = c.key.split(".", 1)
            if _event_value(events[which], name) not in c.values:
                return False
        elif c.key == "isthesamesentence":
            same = "true" if doc.same_sentence(e1, e2) else "false"
            if same not in c.values:
                return False
        elif c.key == "conjbetweenevents":
            has = "true" if CONJUNCTIONS & set(_tokens_between(doc, e1, e2)) else "false"
            if has not in c.values:
                return False
        elif c.key == "signal":
            between = conds.get("signalbetweentwoevents")
            if between is None:
                pool = set(_tokens_between(doc, e1, e2)) | set(_tokens_around(doc, e1, e2))
            elif between.values == ("true",):
                pool = set(_tokens_between(doc, e1, e2))
            elif between.values == ("false",):
                pool = set(_tokens_around(doc, e1, e2))
            else:
                pool = set(_tokens_between(doc, e1, e2)) | set(_tokens_around(doc, e1, e2))
            if not pool & set(c.values):
                return False
        # signalbetweentwoevents is consumed by the signal condition
    return True


_COARSE_INVERSE = {"BEFORE": "AFTER", "AFTER": "BEFORE", "OVERLAP": "OVERLAP"}


def rule_label(label: str, scheme: Scheme) -> str | None:
    """Express a rule's label in ``scheme`` for the (event1, event2) orientation.

    Returns None when the scheme has no label for that orientation (Norm6
    keeps only one direction of each asymmetric relation).
    """
    scheme = Scheme.parse(scheme)
    if label in SCHEME_LABELS[scheme]:
        return label
    if label not in SCHEME_LABELS[Scheme.RAW14]:
        raise ValueError(f"rule label {label!r} is not a known relation")
    converted, swapped = convert_label(RelationLabel(Scheme.RAW14, label), scheme)
    if not swapped or converted.value == "SIMULTANEOUS":
        return converted.value
    if scheme is Scheme.COARSE3:
        return _COARSE_INVERSE[converted.value]
    return None


def _lexical_label(rb: RuleBase, doc: Document, e1: str, e2: str) -> str | None:
    l1 = _event_value(doc.event(e1), "lemma")
    l2 = _event_value(doc.event(e2), "lemma")
    forward = rb.lexical_rules.get((l1, l2))
    backward = rb.lexical_rules.get((l2, l1))
    if forward is None and backward is None:
        return None
    if backward is None or (forward is not None and forward >= backward):
        return "BEFORE"   # event1 happens before event2
    return "AFTER"


def apply_rules(rb: RuleBase, doc: Document, e1: str, e2: str, scheme: Scheme) -> str | None:
    """Label from the first firing rule family, or None."""
    for rule in rb.attribute_rules:
        if rule_matches(rule, doc, e1, e2):
            label = rule_label(rule.label, scheme)
            if label is not None:
                return label
    lex = _lexical_label(rb, doc, e1, e2)
    if lex is not None:
        label = rule_label(lex, scheme)
        if label is not None:
            return label
    for rule in rb.signal_rules:
        if rule_matches(rule, doc, e1, e2):
            label = rule_label(rule.label, scheme)
            if label is not None:
                return label
    return None


__all__ = [
    "AttributeRule", "CONJUNCTIONS", "Condition", "RuleBase", "RuleParseError", "apply_rules",
    "load_rulebase", "parse_attribute_rules", "parse_lexical_rules", "rule_label", "rule_matches",
]
