"""Allen's interval algebra over the temporal label schemes.

Relation sets are bitmasks over the 13 base relations (``Allen`` flags).
Hot loops work on plain ints; the public functions accept and return
``Allen`` values.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntFlag
from itertools import product
from typing import Iterable, Mapping, Union

from .corpus import Document, RelationLabel, Scheme, SCHEME_LABELS


class Allen(IntFlag):
    BEFORE = 1 << 0
    AFTER = 1 << 1
    MEETS = 1 << 2
    MET_BY = 1 << 3
    OVERLAPS = 1 << 4
    OVERLAPPED_BY = 1 << 5
    STARTS = 1 << 6
    STARTED_BY = 1 << 7
    DURING = 1 << 8
    CONTAINS = 1 << 9
    FINISHES = 1 << 10
    FINISHED_BY = 1 << 11
    EQUALS = 1 << 12


BASE_RELATIONS: tuple[Allen, ...] = tuple(Allen(1 << i) for i in range(13))
EMPTY = Allen(0)
FULL = Allen((1 << 13) - 1)
_FULL = (1 << 13) - 1

SHORT_NAMES = ("b", "bi", "m", "mi", "o", "oi", "s", "si", "d", "di", "f", "fi", "e")
_BY_SHORT = {name: 1 << i for i, name in enumerate(SHORT_NAMES)}
_CONVERSE_BASE = (1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 12)

# Row relation composed with column relation; '*' is the universal set.
COMPOSITION_TABLE_TEXT = """\
      b           bi          m           mi          o           oi          s           si          d           di          f           fi          e
b     b           *           b           b,m,o,s,d   b           b,m,o,s,d   b           b           b,m,o,s,d   b           b,m,o,s,d   b           b
bi    *           bi          bi,mi,oi,d,f bi         bi,mi,oi,d,f bi         bi,mi,oi,d,f bi         bi,mi,oi,d,f bi         bi          bi          bi
m     b           bi,mi,oi,si,di b        f,fi,e      b           o,s,d       m           m           o,s,d       b           o,s,d       b           m
mi    b,m,o,di,fi bi          s,si,e      bi          oi,d,f      bi          oi,d,f      bi          oi,d,f      bi          mi          mi          mi
o     b           bi,mi,oi,si,di b        oi,si,di    b,m,o       o,oi,s,si,d,di,f,fi,e o     o,di,fi     o,s,d       b,m,o,di,fi o,s,d       b,m,o       o
oi    b,m,o,di,fi bi          o,di,fi     bi          o,oi,s,si,d,di,f,fi,e bi,mi,oi oi,d,f bi,mi,oi    oi,d,f      bi,mi,oi,si,di oi       oi,si,di    oi
s     b           bi          b           mi          b,m,o       oi,d,f      s           s,si,e      d           b,m,o,di,fi d           b,m,o       s
si    b,m,o,di,fi bi          o,di,fi     mi          o,di,fi     oi          s,si,e      si          oi,d,f      di          oi          di          si
d     b           bi          b           bi          b,m,o,s,d   bi,mi,oi,d,f d          bi,mi,oi,d,f d          *           d           b,m,o,s,d   d
di    b,m,o,di,fi bi,mi,oi,si,di o,di,fi  oi,si,di    o,di,fi     oi,si,di    o,di,fi     di          o,oi,s,si,d,di,f,fi,e di    oi,si,di    di          di
f     b           bi          m           bi          o,s,d       bi,mi,oi    d           bi,mi,oi    d           bi,mi,oi,si,di f        f,fi,e      f
fi    b           bi,mi,oi,si,di m        oi,si,di    o           oi,si,di    o           di          o,s,d       di          f,fi,e      fi          fi
e     b           bi          m           mi          o           oi          s           si          d           di          f           fi          e
"""


def _parse_cell(cell: str) -> int:
    if cell == "*":
        return _FULL
    bits = 0
    for name in cell.split(","):
        bits |= _BY_SHORT[name]
    return bits


def _parse_table(text: str) -> list[list[int]]:
    lines = text.strip("\n").splitlines()
    header = lines[0].split()
    if tuple(header) != SHORT_NAMES:
        raise RuntimeError("composition table header is corrupt")
    table = []
    for row_name, line in zip(SHORT_NAMES, lines[1:]):
        cells = line.split()
        if cells[0] != row_name or len(cells) != 14:
            raise RuntimeError(f"composition table row {row_name!r} is corrupt")
        table.append([_parse_cell(c) for c in cells[1:]])
    return table


_BASE_TABLE = _parse_table(COMPOSITION_TABLE_TEXT)


def _build_converse() -> list[int]:
    conv = [0] * (1 << 13)
    for bits in range(1 << 13):
        out = 0
        for i in range(13):
            if bits >> i & 1:
                out |= 1 << _CONVERSE_BASE[i]
        conv[bits] = out
    return conv


_CONVERSE = _build_converse()
_compose_cache: dict[tuple[int, int], int] = {}


def _bits_of(bits: int) -> list[int]:
    return [i for i in range(13) if bits >> i & 1]


def compose_bits(a: int, b: int) -> int:
    key = (a, b)
    hit = _compose_cache.get(key)
    if hit is not None:
        return hit
    out = 0
    for i in _bits_of(a):
        row = _BASE_TABLE[i]
        for j in _bits_of(b):
            out |= row[j]
            if out == _FULL:
                break
    _compose_cache[key] = out
    return out


def converse_bits(a: int) -> int:
    return _CONVERSE[a]


def allen_compose(a: Allen, b: Allen) -> Allen:
    """Union of base compositions: every relation possible between x and z
    given x-a-y and y-b-z."""
    return Allen(compose_bits(int(a), int(b)))


def converse(a: Allen) -> Allen:
    return Allen(_CONVERSE[int(a)])


def members(a: Union[Allen, int]) -> list[Allen]:
    return [BASE_RELATIONS[i] for i in _bits_of(int(a))]


def format_set(a: Union[Allen, int]) -> str:
    bits = int(a)
    if bits == _FULL:
        return "*"
    return "{" + ",".join(SHORT_NAMES[i] for i in _bits_of(bits)) + "}"


def dump_composition_table() -> str:
    """Human-readable dump of the compiled table, for auditing."""
    width = max(len(format_set(c)) for row in _BASE_TABLE for c in row)
    lines = ["    " + " ".join(n.ljust(width) for n in SHORT_NAMES)]
    for name, row in zip(SHORT_NAMES, _BASE_TABLE):
        lines.append(name.ljust(4) + " ".join(format_set(c).ljust(width) for c in row))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def relation_between(a: tuple[float, float], b: tuple[float, float]) -> Allen:
    """Base relation between two concrete intervals (start < end)."""
    a0, a1 = a
    b0, b1 = b
    if a1 < b0:
        return Allen.BEFORE
    if b1 < a0:
        return Allen.AFTER
    if a1 == b0:
        return Allen.MEETS
    if b1 == a0:
        return Allen.MET_BY
    if a0 == b0 and a1 == b1:
        return Allen.EQUALS
    if a0 == b0:
        return Allen.STARTS if a1 < b1 else Allen.STARTED_BY
    if a1 == b1:
        return Allen.FINISHES if a0 > b0 else Allen.FINISHED_BY
    if b0 < a0 and a1 < b1:
        return Allen.DURING
    if a0 < b0 and b1 < a1:
        return Allen.CONTAINS
    return Allen.OVERLAPS if a0 < b0 else Allen.OVERLAPPED_BY


# ---------------------------------------------------------------------------
# label semantics

_NORM6_IMAGE = {
    "SIMULTANEOUS": Allen.EQUALS,
    "BEFORE": Allen.BEFORE,
    "IBEFORE": Allen.MEETS,
    "INCLUDES": Allen.CONTAINS,
    "BEGINS": Allen.STARTS,
    "ENDS": Allen.FINISHES,
}
_COARSE3_IMAGE = {
    "BEFORE": Allen.BEFORE | Allen.MEETS,
    "AFTER": Allen.AFTER | Allen.MET_BY,
}
_COARSE3_IMAGE["OVERLAP"] = FULL & ~(_COARSE3_IMAGE["BEFORE"] | _COARSE3_IMAGE["AFTER"])

LABEL_IMAGES: dict[Scheme, dict[str, Allen]] = {
    Scheme.NORM6: _NORM6_IMAGE,
    Scheme.COARSE3: _COARSE3_IMAGE,
}


class UnsupportedSchemeError(ValueError):
    pass


def label_bits(scheme: Scheme, value: str) -> int:
    try:
        return int(LABEL_IMAGES[scheme][value])
    except KeyError:
        if scheme not in LABEL_IMAGES:
            raise UnsupportedSchemeError(
                f"{Scheme.parse(scheme).value} labels have no interval semantics; normalize first") from None
        raise ValueError(f"{value!r} is not a {scheme.value} label") from None


def label_to_allen(label: RelationLabel) -> Allen:
    return Allen(label_bits(label.scheme, label.value))


def allen_to_label(rel: Allen, scheme: Scheme) -> tuple[str, bool] | None:
    """Label for a base relation as ``(label, swapped)``.

    ``swapped`` means the label holds with the arguments exchanged.  Returns
    None when no label of the scheme covers the relation in either
    direction (Norm6 has no image for overlaps / overlapped_by).
    """
    scheme = Scheme.parse(scheme)
    images = LABEL_IMAGES[scheme]
    for label in SCHEME_LABELS[scheme]:
        if int(images[label]) & int(rel):
            return label, False
    back = _CONVERSE[int(rel)]
    for label in SCHEME_LABELS[scheme]:
        if int(images[label]) & back:
            return label, True
    return None


def entailed_labels(m1: str, m2: str, scheme: Scheme) -> frozenset[str]:
    """Labels M3 for (x, z) compatible with x-m1-y and y-m2-z."""
    scheme = Scheme.parse(scheme)
    comp = compose_bits(label_bits(scheme, m1), label_bits(scheme, m2))
    return frozenset(m3 for m3 in SCHEME_LABELS[scheme] if label_bits(scheme, m3) & comp)


# ---------------------------------------------------------------------------
# temporal graphs

class TemporalGraph:
    """Event graph with at most one edge per unordered node pair.

    An edge is stored under the orientation it was added with, and carries
    either a crisp label or a posterior ``{label: probability}`` in that
    orientation.  ``allen(a, b, label)`` reads any label in either
    direction.
    """

    def __init__(self, scheme: Scheme, nodes: Iterable[str] = ()):
        self.scheme = Scheme.parse(scheme)
        if self.scheme not in LABEL_IMAGES:
            raise UnsupportedSchemeError("temporal graphs need Norm6 or Coarse3 labels")
        self.nodes: list[str] = []
        self._index: dict[str, int] = {}
        self.edges: dict[tuple[str, str], Union[str, dict[str, float]]] = {}
        for n in nodes:
            self.add_node(n)

    def add_node(self, node: str) -> int:
        if node not in self._index:
            self._index[node] = len(self.nodes)
            self.nodes.append(node)
        return self._index[node]

    def index(self, node: str) -> int:
        return self._index[node]

    def add_edge(self, src: str, dst: str, value: Union[str, Mapping[str, float]]):
        if src == dst:
            raise ValueError(f"self-loop on {src!r}")
        if (src, dst) in self.edges or (dst, src) in self.edges:
            raise ValueError(f"edge {src!r}-{dst!r} already present")
        labels = SCHEME_LABELS[self.scheme]
        if isinstance(value, str):
            if value not in labels:
                raise ValueError(f"{value!r} is not a {self.scheme.value} label")
        else:
            value = {lab: float(value.get(lab, 0.0)) for lab in labels}
            if set(value) != set(labels) or abs(sum(value.values()) - 1.0) > 1e-9:
                raise ValueError(f"posterior on {src!r}-{dst!r} must sum to 1")
        self.add_node(src)
        self.add_node(dst)
        self.edges[(src, dst)] = value

    def key(self, a: str, b: str) -> tuple[str, str] | None:
        if (a, b) in self.edges:
            return (a, b)
        if (b, a) in self.edges:
            return (b, a)
        return None

    @property
    def is_crisp(self) -> bool:
        return all(isinstance(v, str) for v in self.edges.values())

    def allen_bits(self, a: str, b: str, label: str) -> int:
        """Bits of ``label`` on the a-b edge, read in the a -> b direction."""
        bits = label_bits(self.scheme, label)
        key = self.key(a, b)
        if key is None:
            raise KeyError(f"no edge {a!r}-{b!r}")
        return bits if key == (a, b) else _CONVERSE[bits]

    def allen(self, a: str, b: str, label: str | None = None) -> Allen:
        if label is None:
            value = self.edges[self.key(a, b)]
            if not isinstance(value, str):
                raise ValueError("edge carries a posterior; pass a label")
            label = value
        return Allen(self.allen_bits(a, b, label))

    def with_labels(self, labels: Mapping[tuple[str, str], str]) -> "TemporalGraph":
        """Crisp copy where each edge (keyed by stored orientation) gets a label."""
        g = TemporalGraph(self.scheme, self.nodes)
        for key in self.edges:
            g.add_edge(key[0], key[1], labels[key])
        return g

    def argmax_labels(self) -> dict[tuple[str, str], str]:
        out = {}
        for key, value in self.edges.items():
            out[key] = value if isinstance(value, str) else _argmax(value, self.scheme)
        return out

    def network(self) -> list[list[int]]:
        """Relation matrix with the universal set for absent edges."""
        n = len(self.nodes)
        m = [[_FULL] * n for _ in range(n)]
        for i in range(n):
            m[i][i] = int(Allen.EQUALS)
        for (a, b), value in self.edges.items():
            if not isinstance(value, str):
                raise ValueError("network() needs crisp edges")
            i, j = self._index[a], self._index[b]
            bits = label_bits(self.scheme, value)
            m[i][j] &= bits
            m[j][i] &= _CONVERSE[bits]
        return m

    @classmethod
    def from_document(cls, doc: Document, scheme: Scheme | None = None) -> "TemporalGraph":
        from .corpus import convert_label

        links = doc.tlinks
        if scheme is None:
            scheme = links[0].label.scheme if links else Scheme.COARSE3
        g = cls(scheme, (ev.event_id for ev in doc.events))
        for t in links:
            label, swapped = convert_label(t.label, g.scheme)
            src, dst = (t.target, t.source) if swapped else (t.source, t.target)
            if g.key(src, dst) is None:
                g.add_edge(src, dst, label.value)
        return g

    def __repr__(self) -> str:
        return f"TemporalGraph({self.scheme.value}, nodes={len(self.nodes)}, edges={len(self.edges)})"


WeightedGraph = TemporalGraph


def _argmax(dist: Mapping[str, float], scheme: Scheme) -> str:
    labels = SCHEME_LABELS[scheme]
    return max(labels, key=lambda lab: dist[lab])  # first max wins: scheme order


# ---------------------------------------------------------------------------
# path consistency

def propagate(m: list[list[int]], queue: Iterable[tuple[int, int]]) -> tuple[int, int, int] | None:
    """Path consistency from the given changed arcs, in place.

    Returns the first triple (i, j, k) whose refinement emptied a relation,
    or None at the fixpoint.
    """
    n = len(m)
    pending = deque()
    queued = set()
    for arc in queue:
        if arc not in queued:
            queued.add(arc)
            pending.append(arc)
    conv = _CONVERSE
    while pending:
        arc = pending.popleft()
        queued.discard(arc)
        i, j = arc
        sij = m[i][j]
        if not sij:
            return (i, j, j)
        for k in range(n):
            if k == i or k == j:
                continue
            old = m[i][k]
            new = old & compose_bits(sij, m[j][k])
            if new != old:
                if not new:
                    return (i, j, k)
                m[i][k] = new
                m[k][i] = conv[new]
                if (i, k) not in queued:
                    queued.add((i, k))
                    pending.append((i, k))
            old = m[k][j]
            new = old & compose_bits(m[k][i], sij)
            if new != old:
                if not new:
                    return (k, i, j)
                m[k][j] = new
                m[j][k] = conv[new]
                if (k, j) not in queued:
                    queued.add((k, j))
                    pending.append((k, j))
    return None


@dataclass
class ConsistencyResult:
    consistent: bool
    witness: tuple[str, str, str] | None = None
    network: list[list[int]] | None = None

    def __bool__(self) -> bool:
        return self.consistent


def check_consistency(graph: TemporalGraph) -> ConsistencyResult:
    m = graph.network()
    n = len(m)
    for i in range(n):
        for j in range(n):
            if not m[i][j]:
                a, b = graph.nodes[i], graph.nodes[j]
                return ConsistencyResult(False, (a, b, b), m)
    hit = propagate(m, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if hit is not None:
        return ConsistencyResult(False, tuple(graph.nodes[x] for x in hit), m)
    return ConsistencyResult(True, None, m)


# ---------------------------------------------------------------------------
# brute-force realizability oracle

class TooManyNodesError(ValueError):
    pass


def _gap_candidates(values: list[float]) -> list[float]:
    if not values:
        return [0.0]
    out = [values[0] - 1.0]
    for a, b in zip(values, values[1:]):
        out.append(a)
        out.append((a + b) / 2.0)
    out.append(values[-1])
    out.append(values[-1] + 1.0)
    return out


def realizable(graph: TemporalGraph, max_nodes: int = 6) -> bool:
    """Exact satisfiability by search over weak orderings of endpoints.

    Intervals are placed one at a time; each new endpoint either coincides
    with an existing endpoint value or falls into one of the gaps, so every
    weak ordering is visited once.
    """
    n = len(graph.nodes)
    if n > max_nodes:
        raise TooManyNodesError(f"{n} nodes exceeds max_nodes={max_nodes}")
    if not graph.is_crisp:
        raise ValueError("realizable() needs crisp edges")
    m = graph.network()
    if any(not m[i][j] for i in range(n) for j in range(n)):
        return False
    adj = [[j for j in range(n) if j != i and m[i][j] != _FULL] for i in range(n)]

    # connected components are independent
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        order, frontier = [], [root]
        seen[root] = True
        while frontier:
            v = frontier.pop(0)
            order.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    frontier.append(w)
        if not _place(order, m, 0, [], {}):
            return False
    return True


def _place(order, m, depth, values, placed) -> bool:
    if depth == len(order):
        return True
    v = order[depth]
    for s in _gap_candidates(values):
        with_s = values if s in values else sorted(values + [s])
        for e in _gap_candidates(with_s):
            if e <= s:
                continue
            ok = True
            for u, iv in placed.items():
                if m[u][v] == _FULL:
                    continue
                if not int(relation_between(iv, (s, e))) & m[u][v]:
                    ok = False
                    break
            if not ok:
                continue
            new_values = with_s if e in with_s else sorted(with_s + [e])
            placed[v] = (s, e)
            if _place(order, m, depth + 1, new_values, placed):
                del placed[v]
                return True
            del placed[v]
    return False


def random_crisp_graph(rng, n_nodes: int, scheme: Scheme, density: float = 0.7) -> TemporalGraph:
    """Random labeling of a random edge subset (test and benchmark helper)."""
    scheme = Scheme.parse(scheme)
    labels = SCHEME_LABELS[scheme]
    g = TemporalGraph(scheme, [f"n{i}" for i in range(n_nodes)])
    for i, j in product(range(n_nodes), repeat=2):
        if i < j and rng.random() < density:
            a, b = (f"n{i}", f"n{j}") if rng.random() < 0.5 else (f"n{j}", f"n{i}")
            g.add_edge(a, b, labels[int(rng.integers(len(labels)))])
    return g


__all__ = [
    "Allen", "BASE_RELATIONS", "COMPOSITION_TABLE_TEXT", "ConsistencyResult", "EMPTY", "FULL",
    "LABEL_IMAGES", "SHORT_NAMES", "TemporalGraph", "TooManyNodesError", "UnsupportedSchemeError",
    "WeightedGraph", "allen_compose", "allen_to_label", "check_consistency", "compose_bits",
    "converse", "converse_bits", "dump_composition_table", "entailed_labels", "format_set",
    "label_bits", "label_to_allen", "members", "propagate", "random_crisp_graph", "realizable",
    "relation_between",
]
