"""Global repair of per-document relation predictions.

``greedy_repair`` accepts edges in order of confidence and falls back to
the next most probable label whenever the accepted set stops being
path-consistent.  ``build_ilp`` / ``solve_ilp`` find the labeling with the
largest summed posterior among all consistent labelings, using exactly-one
and transitivity constraints plus no-good cuts added lazily when a
candidate labeling is still globally inconsistent.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping

from .algebra import (
    TemporalGraph, _CONVERSE, _FULL, check_consistency, compose_bits, label_bits, propagate,
)
from .corpus import SCHEME_LABELS

log = logging.getLogger(__name__)

EdgeKey = tuple[str, str]
Var = tuple[EdgeKey, str]


@dataclass
class RepairResult:
    graph: TemporalGraph
    labels: dict[EdgeKey, str]
    objective: float
    flagged: list[EdgeKey] = field(default_factory=list)


class InfeasibleError(ValueError):
    pass


def _posterior(g: TemporalGraph, key: EdgeKey) -> dict[str, float]:
    value = g.edges[key]
    if isinstance(value, str):
        return {lab: float(lab == value) for lab in SCHEME_LABELS[g.scheme]}
    return value


def _ranked(dist: Mapping[str, float], labels: tuple[str, ...]) -> list[str]:
    # stable sort keeps scheme order among equal probabilities
    return sorted(labels, key=lambda lab: -dist[lab])


def objective(g: TemporalGraph, labels: Mapping[EdgeKey, str]) -> float:
    return float(sum(_posterior(g, key)[labels[key]] for key in g.edges))


def _base_network(n: int) -> list[list[int]]:
    m = [[_FULL] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = 1 << 12  # equals
    return m


def _try_add(m: list[list[int]], i: int, j: int, bits: int) -> list[list[int]] | None:
    """Copy of the closed network ``m`` with (i, j) restricted, or None."""
    new = m[i][j] & bits
    if not new:
        return None
    trial = [row[:] for row in m]
    trial[i][j] = new
    trial[j][i] = _CONVERSE[new]
    if propagate(trial, [(i, j)]) is not None:
        return None
    return trial


def _violations(m: list[list[int]], accepted: set[tuple[int, int]], i: int, j: int, bits: int) -> int:
    """Triangles through (i, j) whose two other sides are accepted and
    whose composition excludes ``bits``."""
    count = 0
    n = len(m)
    for k in range(n):
        if k in (i, j):
            continue
        if ((i, k) in accepted or (k, i) in accepted) and ((k, j) in accepted or (j, k) in accepted):
            if not compose_bits(m[i][k], m[k][j]) & bits:
                count += 1
    return count


def greedy_repair(g: TemporalGraph, fixed: Mapping[EdgeKey, str] | None = None) -> RepairResult:
    """Best-first repair: most confident edges are committed first.

    ``fixed`` edges (keyed by stored orientation) are committed before all
    others with their given label.
    """
    fixed = dict(fixed or {})
    labels_all = SCHEME_LABELS[g.scheme]
    idx = {node: i for i, node in enumerate(g.nodes)}
    order = sorted(
        g.edges,
        key=lambda key: (key not in fixed, -max(_posterior(g, key).values())),
    )
    m = _base_network(len(g.nodes))
    accepted: set[tuple[int, int]] = set()
    chosen: dict[EdgeKey, str] = {}
    flagged: list[EdgeKey] = []
    for key in order:
        i, j = idx[key[0]], idx[key[1]]
        dist = _posterior(g, key)
        candidates = [fixed[key]] if key in fixed else _ranked(dist, labels_all)
        for label in candidates:
            trial = _try_add(m, i, j, label_bits(g.scheme, label))
            if trial is not None:
                m = trial
                chosen[key] = label
                break
        else:
            # no label keeps the accepted set consistent
            pool = candidates if key in fixed else labels_all
            label = min(pool, key=lambda lab: (
                _violations(m, accepted, i, j, label_bits(g.scheme, lab)), -dist[lab], pool.index(lab)))
            chosen[key] = label
            flagged.append(key)
            log.warning("edge %s-%s has no consistent label; kept %s", key[0], key[1], label)
            bits = m[i][j] & label_bits(g.scheme, label)
            if bits:
                m[i][j] = bits
                m[j][i] = _CONVERSE[bits]
        accepted.add((i, j))
    out = g.with_labels(chosen)
    return RepairResult(out, chosen, objective(g, chosen), flagged)


# ---------------------------------------------------------------------------
# integer program

@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[Var, int], ...]
    sense: str  # "<=" or "=="
    rhs: int

    def edges(self) -> set[EdgeKey]:
        return {var[0] for var, _ in self.terms}


@dataclass
class IlpInstance:
    """Binary program over one variable per (stored edge, label).

    ``objective`` maps each variable to its posterior coefficient.
    ``domains`` restricts fixed edges to a single label.
    """
    graph: TemporalGraph
    variables: list[Var]
    objective: dict[Var, float]
    exactly_one: list[Constraint]
    transitivity: list[Constraint]
    domains: dict[EdgeKey, tuple[str, ...]]
    cuts: list[Constraint] = field(default_factory=list)

    @property
    def constraints(self) -> list[Constraint]:
        return self.exactly_one + self.transitivity + self.cuts

    def to_lp(self) -> str:
        """CPLEX LP text of the instance (cuts included)."""
        names = {var: f"x{k}" for k, var in enumerate(self.variables)}

        def expr(terms):
            parts = []
            for var, coef in terms:
                sign = "-" if coef < 0 else "+"
                mag = abs(coef)
                parts.append(f"{sign} {'' if mag == 1 else repr(mag) + ' '}{names[var]}")
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        lines = ["\\ " + ", ".join(f"{names[v]}={v[0][0]}>{v[0][1]}:{v[1]}" for v in self.variables),
                 "Maximize",
                 " obj: " + expr([(v, self.objective[v]) for v in self.variables]),
                 "Subject To"]
        for k, c in enumerate(self.constraints):
            op = "=" if c.sense == "==" else "<="
            lines.append(f" c{k}: {expr(c.terms)} {op} {c.rhs}")
        fixed = [(key, dom[0]) for key, dom in self.domains.items() if len(dom) == 1]
        if fixed:
            for k, (key, label) in enumerate(fixed):
                lines.append(f" f{k}: {names[(key, label)]} = 1")
        lines.append("Binary")
        lines.extend(f" {names[v]}" for v in self.variables)
        lines.append("End")
        return "\n".join(lines) + "\n"


def _oriented_bits(g: TemporalGraph, a: str, b: str, label: str) -> int:
    return g.allen_bits(a, b, label)


def build_ilp(g: TemporalGraph, fixed: Mapping[EdgeKey, str] | None = None) -> IlpInstance:
    labels = SCHEME_LABELS[g.scheme]
    fixed = dict(fixed or {})
    variables: list[Var] = []
    obj: dict[Var, float] = {}
    exactly_one = []
    domains = {}
    for key in g.edges:
        dist = _posterior(g, key)
        for label in labels:
            var = (key, label)
            variables.append(var)
            obj[var] = dist[label]
        exactly_one.append(Constraint(tuple(((key, lab), 1) for lab in labels), "==", 1))
        domains[key] = (fixed[key],) if key in fixed else labels

    neighbors: dict[str, set[str]] = {n: set() for n in g.nodes}
    for a, b in g.edges:
        neighbors[a].add(b)
        neighbors[b].add(a)

    seen = set()
    transitivity = []
    for x in g.nodes:
        for y in sorted(neighbors[x]):
            for z in sorted(neighbors[y] & neighbors[x]):
                if z == x:
                    continue
                tri = frozenset((x, y, z))
                if tri in seen:
                    continue
                seen.add(tri)
                for i, j, k in permutations(sorted(tri)):
                    kij, kjk, kik = g.key(i, j), g.key(j, k), g.key(i, k)
                    for m1 in labels:
                        for m2 in labels:
                            comp = compose_bits(_oriented_bits(g, i, j, m1), _oriented_bits(g, j, k, m2))
                            entailed = [m3 for m3 in labels if _oriented_bits(g, i, k, m3) & comp]
                            if len(entailed) == len(labels):
                                continue
                            terms = [((kij, m1), 1), ((kjk, m2), 1)] + [((kik, m3), -1) for m3 in entailed]
                            transitivity.append(Constraint(tuple(terms), "<=", 1))
    # the same implication can arise from several orderings of one triangle
    unique = {}
    for c in transitivity:
        unique.setdefault(frozenset(c.terms), c)
    return IlpInstance(g, variables, obj, exactly_one, list(unique.values()), domains)


@dataclass
class IlpSolution:
    labels: dict[EdgeKey, str]
    objective: float
    nodes_explored: int
    cuts_added: int


def _minimal_conflict(g: TemporalGraph, labels: Mapping[EdgeKey, str]) -> list[EdgeKey]:
    """Deletion filter: a subset-minimal inconsistent set of labeled edges."""
    core = list(labels)
    k = 0
    while k < len(core):
        trial = core[:k] + core[k + 1:]
        sub = TemporalGraph(g.scheme, g.nodes)
        for key in trial:
            sub.add_edge(key[0], key[1], labels[key])
        if not check_consistency(sub):
            core = trial
        else:
            k += 1
    return core


def solve_ilp(inst: IlpInstance, use_propagation: bool = True, warm_start: bool = True) -> IlpSolution:
    """Exact depth-first branch and bound.

    The bound adds each unassigned edge's best admissible coefficient.
    Linear constraints are checked once all their edges are assigned;
    with ``use_propagation`` partial assignments are also pruned by path
    consistency, which is sound because a path-inconsistent partial
    labeling has no consistent completion.  Complete labelings that are
    still inconsistent yield a no-good cut and are rejected.  With
    ``warm_start`` the greedy repair seeds the incumbent.
    """
    g = inst.graph
    keys = sorted(
        g.edges,
        key=lambda key: (-max(inst.objective[(key, lab)] for lab in inst.domains[key]),
                         list(g.edges).index(key)),
    )
    depth_of = {key: d for d, key in enumerate(keys)}
    idx = {node: i for i, node in enumerate(g.nodes)}
    best_rest = [0.0] * (len(keys) + 1)
    for d in range(len(keys) - 1, -1, -1):
        key = keys[d]
        best_rest[d] = best_rest[d + 1] + max(inst.objective[(key, lab)] for lab in inst.domains[key])

    by_depth: list[list[Constraint]] = [[] for _ in keys]

    def register(c: Constraint):
        if c.sense == "==":
            return  # enforced by assigning exactly one label per edge
        by_depth[max(depth_of[e] for e in c.edges())].append(c)

    # path consistency already enforces every transitivity constraint
    for c in (inst.cuts if use_propagation else inst.transitivity + inst.cuts):
        register(c)

    assignment: dict[EdgeKey, str] = {}
    best = {"value": float("-inf"), "labels": None}
    stats = {"nodes": 0, "cuts": 0}
    eps = 1e-12

    def satisfied(c: Constraint) -> bool:
        lhs = sum(coef for var, coef in c.terms if assignment.get(var[0]) == var[1])
        return lhs <= c.rhs

    if warm_start and keys:
        fixed = {key: dom[0] for key, dom in inst.domains.items() if len(dom) == 1}
        seed = greedy_repair(g, fixed)
        if not seed.flagged and all(
                seed.labels[key] in inst.domains[key] for key in keys):
            assignment.update(seed.labels)
            if all(satisfied(c) for c in inst.transitivity + inst.cuts):
                best["value"] = sum(inst.objective[(key, seed.labels[key])] for key in keys)
                best["labels"] = dict(seed.labels)
            assignment.clear()

    def leaf(value: float):
        labeled = TemporalGraph(g.scheme, g.nodes)
        for key in keys:
            labeled.add_edge(key[0], key[1], assignment[key])
        if check_consistency(labeled):
            best["value"] = value
            best["labels"] = dict(assignment)
            return
        core = _minimal_conflict(g, {k: assignment[k] for k in keys})
        cut = Constraint(tuple(((k, assignment[k]), 1) for k in core), "<=", len(core) - 1)
        inst.cuts.append(cut)
        register(cut)
        stats["cuts"] += 1

    def search(d: int, value: float, m):
        stats["nodes"] += 1
        if value + best_rest[d] <= best["value"] + eps:
            return
        if d == len(keys):
            leaf(value)
            return
        key = keys[d]
        dom = inst.domains[key]
        for label in sorted(dom, key=lambda lab: -inst.objective[(key, lab)]):
            assignment[key] = label
            if all(satisfied(c) for c in by_depth[d]):
                if not use_propagation:
                    search(d + 1, value + inst.objective[(key, label)], None)
                else:
                    nm = _try_add(m, idx[key[0]], idx[key[1]], label_bits(g.scheme, label))
                    if nm is not None:
                        search(d + 1, value + inst.objective[(key, label)], nm)
            del assignment[key]

    search(0, 0.0, _base_network(len(g.nodes)) if use_propagation else None)
    if best["labels"] is None:
        raise InfeasibleError("no consistent labeling satisfies the fixed edges")
    return IlpSolution(best["labels"], float(best["value"]), stats["nodes"], stats["cuts"])


def ilp_repair(g: TemporalGraph, fixed: Mapping[EdgeKey, str] | None = None) -> RepairResult:
    sol = solve_ilp(build_ilp(g, fixed))
    return RepairResult(g.with_labels(sol.labels), sol.labels, objective(g, sol.labels), [])


def repair(g: TemporalGraph, method: str, fixed: Mapping[EdgeKey, str] | None = None) -> RepairResult:
    if method == "greedy":
        return greedy_repair(g, fixed)
    if method == "ilp":
        return ilp_repair(g, fixed)
    raise ValueError(f"unknown repair method {method!r}")


def weighted_graph(scheme, edges: Iterable[tuple[str, str, Mapping[str, float]]]) -> TemporalGraph:
    g = TemporalGraph(scheme)
    for a, b, dist in edges:
        g.add_edge(a, b, dist)
    return g


__all__ = [
    "Constraint", "IlpInstance", "IlpSolution", "InfeasibleError", "RepairResult",
    "build_ilp", "greedy_repair", "ilp_repair", "objective", "repair",
    "solve_ilp", "weighted_graph",
]
