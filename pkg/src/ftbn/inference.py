"""Exact inference on binary Bayesian networks.

Two engines with identical semantics:

* variable elimination over sparse factors (the workhorse), using a min-fill
  elimination order with ties broken by node id, and
* exhaustive enumeration of the joint distribution (the oracle), capped at
  25 nodes.

Factors keep probabilities in linear space; group sums use ``math.fsum``
(compensated), zero entries are never stored, so the all-zero rows of
deterministic gate tables vanish at construction, and a factor whose peak
entry underflows toward subnormal territory is rescaled by a tracked
power of two.  Inconsistent evidence (probability zero) raises instead of
returning NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .network import BayesianNetwork, ROW_CAP

Evidence = Mapping[str, bool]

ENUMERATION_NODE_CAP = 25

VARIABLE_ELIMINATION = "variable-elimination"
ENUMERATION = "enumeration"

# Rescale factors whose peak drops below 2**-960 (values this small only
# arise from long products; probabilities in scope sit far above this).
_RESCALE_FLOOR = math.ldexp(1.0, -960)
_RESCALE_SHIFT = 960


class InferenceError(Exception):
    pass


class InconsistentEvidenceError(InferenceError):
    """The observed evidence has probability zero under the network."""

    def __init__(self, evidence: Evidence):
        self.evidence = dict(evidence)
        shown = ", ".join(f"{k}={str(v).lower()}" for k, v in sorted(self.evidence.items()))
        super().__init__(f"evidence has probability zero: {shown}")


class EnumerationCapError(InferenceError):
    def __init__(self, count: int):
        super().__init__(
            f"enumeration supports at most {ENUMERATION_NODE_CAP} nodes, network has {count}"
        )


@dataclass(frozen=True)
class PosteriorReport:
    """P(node=true | evidence) for every node, plus the evidence echo."""

    posteriors: dict[str, float]
    evidence: dict[str, bool]
    method: str


# --- factors -----------------------------------------------------------------


@dataclass(frozen=True)
class _Factor:
    """Sparse table over binary variables; zero entries are omitted.

    True values are ``entries[...] * 2**scale``; ``scale`` moves away from 0
    only when a rescue rescale fires.
    """

    vars: tuple[str, ...]
    entries: dict[tuple[bool, ...], float]
    scale: int = 0


def _rescaled(vars: tuple[str, ...], entries: dict, scale: int) -> _Factor:
    if entries:
        peak = max(entries.values())
        if 0.0 < peak < _RESCALE_FLOOR:
            entries = {k: math.ldexp(v, _RESCALE_SHIFT) for k, v in entries.items()}
            scale -= _RESCALE_SHIFT
    return _Factor(vars, entries, scale)


def _factor_from_cpt(node_id: str, cpt) -> _Factor:
    k = len(cpt.parents)
    if 1 << k > ROW_CAP:
        raise InferenceError(f"node {node_id} has {k} parents; factor would exceed {ROW_CAP} rows")
    variables = cpt.parents + (node_id,)
    entries: dict[tuple[bool, ...], float] = {}
    for i in range(1 << k):
        states = tuple(bool((i >> (k - 1 - j)) & 1) for j in range(k))
        p = cpt.prob_true(states)
        if p > 0.0:
            entries[states + (True,)] = p
        if p < 1.0:
            entries[states + (False,)] = 1.0 - p
    return _Factor(variables, entries)


def _reduce(f: _Factor, evidence: Evidence) -> _Factor:
    fixed = [(i, evidence[v]) for i, v in enumerate(f.vars) if v in evidence]
    if not fixed:
        return f
    keep = [i for i, v in enumerate(f.vars) if v not in evidence]
    out_vars = tuple(f.vars[i] for i in keep)
    out: dict[tuple[bool, ...], float] = {}
    for assign, value in f.entries.items():
        if all(assign[i] == want for i, want in fixed):
            out[tuple(assign[i] for i in keep)] = value
    return _Factor(out_vars, out, f.scale)


def _multiply(f: _Factor, g: _Factor) -> _Factor:
    shared = tuple(v for v in f.vars if v in g.vars)
    g_only = tuple(v for v in g.vars if v not in f.vars)
    f_shared_pos = tuple(f.vars.index(v) for v in shared)
    g_shared_pos = tuple(g.vars.index(v) for v in shared)
    g_only_pos = tuple(g.vars.index(v) for v in g_only)

    index: dict[tuple[bool, ...], list[tuple[tuple[bool, ...], float]]] = {}
    for assign, value in g.entries.items():
        key = tuple(assign[i] for i in g_shared_pos)
        index.setdefault(key, []).append((tuple(assign[i] for i in g_only_pos), value))

    out: dict[tuple[bool, ...], float] = {}
    for assign, value in f.entries.items():
        key = tuple(assign[i] for i in f_shared_pos)
        for tail, g_value in index.get(key, ()):
            out[assign + tail] = value * g_value
    return _rescaled(f.vars + g_only, out, f.scale + g.scale)


def _marginalize(f: _Factor, var: str) -> _Factor:
    i = f.vars.index(var)
    out_vars = f.vars[:i] + f.vars[i + 1:]
    groups: dict[tuple[bool, ...], list[float]] = {}
    for assign, value in f.entries.items():
        groups.setdefault(assign[:i] + assign[i + 1:], []).append(value)
    out = {}
    for key, values in groups.items():
        total = math.fsum(values)
        if total != 0.0:
            out[key] = total
    return _rescaled(out_vars, out, f.scale)


def _elimination_order(factors: list[_Factor], eliminate: set[str]) -> list[str]:
    """Min-fill greedy order over the factor interaction graph, ties by id."""
    neighbors: dict[str, set[str]] = {}
    for f in factors:
        for v in f.vars:
            neighbors.setdefault(v, set()).update(f.vars)
    for v, ns in neighbors.items():
        ns.discard(v)

    order: list[str] = []
    remaining = sorted(v for v in eliminate if v in neighbors)
    while remaining:
        best = None
        best_fill = None
        for v in remaining:
            ns = sorted(neighbors[v])
            fill = sum(
                1
                for a_idx, a in enumerate(ns)
                for b in ns[a_idx + 1:]
                if b not in neighbors[a]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        ns = neighbors.pop(best)
        for a in ns:
            neighbors[a].update(ns - {a})
            neighbors[a].discard(best)
        order.append(best)
        remaining.remove(best)
    return order


def _run_elimination(factors: list[_Factor], keep: str | None) -> _Factor:
    """Sum out every variable except ``keep``; returns a factor over at most
    that one variable (scales multiply through)."""
    all_vars: set[str] = set()
    for f in factors:
        all_vars.update(f.vars)
    to_eliminate = all_vars - ({keep} if keep is not None else set())

    live = list(factors)
    for var in _elimination_order(live, to_eliminate):
        related = [f for f in live if var in f.vars]
        if not related:
            continue
        product = related[0]
        for f in related[1:]:
            product = _multiply(product, f)
        live = [f for f in live if var not in f.vars]
        live.append(_marginalize(product, var))

    result = _Factor((), {(): 1.0}, 0)
    for f in live:
        result = _multiply(result, f)
    return result


def _check_node_ids(bn: BayesianNetwork, ids) -> None:
    unknown = sorted(set(ids) - set(bn.nodes))
    if unknown:
        raise ValueError(f"unknown node ids: {', '.join(unknown)}")


def _reduced_factors(bn: BayesianNetwork, evidence: Evidence) -> list[_Factor]:
    return [_reduce(_factor_from_cpt(nid, cpt), evidence) for nid, cpt in bn.nodes.items()]


# --- public operations -------------------------------------------------------


def joint_probability(bn: BayesianNetwork, assignment: Mapping[str, bool]) -> float:
    """Probability of one full assignment: the product over nodes of
    P(value | parent values)."""
    missing = sorted(set(bn.nodes) - set(assignment))
    if missing:
        raise ValueError(f"assignment missing nodes: {', '.join(missing)}")
    _check_node_ids(bn, assignment)
    result = 1.0
    for node_id, cpt in bn.nodes.items():
        p_true = cpt.prob_true(tuple(assignment[p] for p in cpt.parents))
        result *= p_true if assignment[node_id] else 1.0 - p_true
    return result


def marginal(bn: BayesianNetwork, node: str, evidence: Evidence | None = None) -> float:
    """Exact P(node=true | evidence) by variable elimination; with empty
    evidence this is the forward marginal."""
    evidence = dict(evidence or {})
    _check_node_ids(bn, [node, *evidence])
    factors = _reduced_factors(bn, evidence)
    return _posterior_from_factors(factors, node, evidence)


def _posterior_from_factors(factors: list[_Factor], node: str, evidence: dict[str, bool]) -> float:
    if node in evidence:
        z = _run_elimination(factors, None).entries.get((), 0.0)
        if z <= 0.0:
            raise InconsistentEvidenceError(evidence)
        return 1.0 if evidence[node] else 0.0
    f = _run_elimination(factors, node)
    p_true = f.entries.get((True,), 0.0)
    denominator = p_true + f.entries.get((False,), 0.0)
    if denominator <= 0.0:
        raise InconsistentEvidenceError(evidence)
    return p_true / denominator


def posterior_all(
    bn: BayesianNetwork, evidence: Evidence | None = None, method: str = VARIABLE_ELIMINATION
) -> PosteriorReport:
    """P(node=true | evidence) for every node.

    Factor construction and evidence reduction are shared across the
    per-node queries; values are identical to node-by-node ``marginal``
    calls.  ``method`` selects the engine (enumeration obeys the node cap).
    """
    evidence = dict(evidence or {})
    _check_node_ids(bn, evidence)

    if method == ENUMERATION:
        total, true_mass = _enumerate_joint(bn, evidence)
        if total <= 0.0:
            raise InconsistentEvidenceError(evidence)
        posteriors = {
            nid: (1.0 if evidence[nid] else 0.0) if nid in evidence else true_mass[nid] / total
            for nid in bn.nodes
        }
        return PosteriorReport(posteriors, evidence, ENUMERATION)
    if method != VARIABLE_ELIMINATION:
        raise ValueError(f"unknown inference method {method!r}")

    factors = _reduced_factors(bn, evidence)
    z = _run_elimination(list(factors), None).entries.get((), 0.0)
    if z <= 0.0:
        raise InconsistentEvidenceError(evidence)
    posteriors = {}
    for nid in bn.nodes:
        posteriors[nid] = _posterior_from_factors(list(factors), nid, evidence)
    return PosteriorReport(posteriors, evidence, VARIABLE_ELIMINATION)


def enumerate_marginal(bn: BayesianNetwork, node: str, evidence: Evidence | None = None) -> float:
    """Reference implementation of :func:`marginal`: sum the joint over all
    assignments (zero-probability branches pruned).  Hard cap of 25 nodes."""
    evidence = dict(evidence or {})
    _check_node_ids(bn, [node, *evidence])
    total, true_mass = _enumerate_joint(bn, evidence)
    if total <= 0.0:
        raise InconsistentEvidenceError(evidence)
    if node in evidence:
        return 1.0 if evidence[node] else 0.0
    return true_mass[node] / total


class _Kahan:
    """Compensated accumulator for the enumeration sums."""

    __slots__ = ("total", "carry")

    def __init__(self):
        self.total = 0.0
        self.carry = 0.0

    def add(self, x: float) -> None:
        y = x - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t


def _enumerate_joint(bn: BayesianNetwork, evidence: dict[str, bool]):
    """Evidence mass and per-node true mass, by depth-first search over
    assignments in topological order."""
    ids = list(bn.nodes)
    if len(ids) > ENUMERATION_NODE_CAP:
        raise EnumerationCapError(len(ids))
    position = {nid: i for i, nid in enumerate(ids)}
    cpts = [bn.nodes[nid] for nid in ids]
    parent_positions = [tuple(position[p] for p in cpt.parents) for cpt in cpts]
    observed = [evidence.get(nid) for nid in ids]

    total = _Kahan()
    true_mass = [_Kahan() for _ in ids]
    states = [False] * len(ids)

    def descend(i: int, weight: float) -> None:
        if i == len(ids):
            total.add(weight)
            for j, state in enumerate(states):
                if state:
                    true_mass[j].add(weight)
            return
        p_true = cpts[i].prob_true(tuple(states[k] for k in parent_positions[i]))
        for value, probability in ((True, p_true), (False, 1.0 - p_true)):
            if observed[i] is not None and observed[i] is not value:
                continue
            if probability == 0.0:
                continue
            states[i] = value
            descend(i + 1, weight * probability)
        states[i] = False

    descend(0, 1.0)
    return total.total, {ids[j]: acc.total for j, acc in enumerate(true_mass)}
