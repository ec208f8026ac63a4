"""Compile a quantified fault tree into a binary Bayesian network.

Every fault-tree event becomes one binary node: basic events turn into root
nodes whose prior is the supplied failure probability, and every gate turns
into a node with a deterministic 0/1 conditional probability table (AND is
true only when all parents are true, OR is false only when all parents are
false).  Edges mirror the gate-input relation exactly, and parent order
inside a CPT is the gate's declared input order, so compiling the same tree
twice yields identical networks.

Deterministic CPTs are held symbolically and materialized to dense rows only
on demand (JSON emission), with a hard cap of 2^20 rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .tree import EventKind, FaultTree, GateKind, ensure_valid
from .quant import _check_basics

ROW_CAP = 1 << 20


class CptSizeError(Exception):
    """Materializing a table would exceed the row cap."""

    def __init__(self, node: str, rows: int):
        self.node = node
        self.rows = rows
        super().__init__(
            f"CPT for {node} would need {rows} rows, above the materialization cap of {ROW_CAP}"
        )


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table of a binary node.

    Either ``rows`` holds the dense table (probability of node=true, indexed
    by the binary parent-state number with false=0, true=1 and the first
    parent most significant), or ``gate`` names a deterministic AND/OR whose
    rows are computed on demand.  Root nodes have no parents and a one-entry
    ``rows`` holding the prior.
    """

    parents: tuple[str, ...]
    rows: tuple[float, ...] | None = None
    gate: GateKind | None = None

    def __post_init__(self):
        if (self.rows is None) == (self.gate is None):
            raise ValueError("exactly one of rows/gate must be given")
        if self.rows is not None:
            if len(self.rows) != 1 << len(self.parents):
                raise ValueError(
                    f"expected {1 << len(self.parents)} rows for {len(self.parents)} parents,"
                    f" got {len(self.rows)}"
                )
            if any(not 0.0 <= p <= 1.0 for p in self.rows):
                raise ValueError("CPT entries must lie in [0, 1]")

    def prob_true(self, parent_states: tuple[bool, ...]) -> float:
        """P(node=true | parents in ``parent_states``), ordered like ``parents``."""
        if len(parent_states) != len(self.parents):
            raise ValueError(f"expected {len(self.parents)} parent states, got {len(parent_states)}")
        if self.gate is GateKind.AND:
            return 1.0 if all(parent_states) else 0.0
        if self.gate is GateKind.OR:
            return 1.0 if any(parent_states) else 0.0
        index = 0
        for state in parent_states:
            index = (index << 1) | int(state)
        return self.rows[index]

    def materialize(self, name: str = "?") -> tuple[float, ...]:
        """Dense rows in binary parent-state order; capped at 2^20 rows."""
        if self.rows is not None:
            return self.rows
        k = len(self.parents)
        if 1 << k > ROW_CAP:
            raise CptSizeError(name, 1 << k)
        return tuple(
            self.prob_true(tuple(bool((i >> (k - 1 - j)) & 1) for j in range(k)))
            for i in range(1 << k)
        )


def cpt_for_gate(kind: GateKind, input_count: int, parents: tuple[str, ...] | None = None) -> Cpt:
    """Deterministic CPT for an AND/OR gate over ``input_count`` parents.

    ``parents`` defaults to placeholder names ``in1..inK`` for standalone
    tables; the compiler passes the real gate inputs.
    """
    if input_count < 1:
        raise ValueError(f"gate needs at least one input, got {input_count}")
    if parents is None:
        parents = tuple(f"in{i + 1}" for i in range(input_count))
    elif len(parents) != input_count:
        raise ValueError("parents length must equal input_count")
    return Cpt(parents=parents, gate=kind)


@dataclass(frozen=True)
class BayesianNetwork:
    """Binary-node DAG; ``nodes`` is in topological order, ``query`` is the
    image of the fault tree's top event."""

    nodes: dict[str, Cpt]
    query: str

    def __post_init__(self):
        seen: set[str] = set()
        for node_id, cpt in self.nodes.items():
            for parent in cpt.parents:
                if parent not in seen:
                    raise ValueError(f"node {node_id}: parent {parent} not declared before use")
            seen.add(node_id)
        if self.query not in self.nodes:
            raise ValueError(f"query node {self.query} is not in the network")

    def node_ids(self) -> list[str]:
        return list(self.nodes)

    def roots(self) -> list[str]:
        return [nid for nid, cpt in self.nodes.items() if not cpt.parents]


def to_bayesian_network(tree: FaultTree, basics: Mapping[str, float]) -> BayesianNetwork:
    """One BN node per fault-tree event, per the graphical/numerical mapping.

    Basic events become roots with the given prior; intermediate and top
    events become deterministic gate nodes whose parents are the gate inputs
    in declared order.
    """
    ensure_valid(tree)
    _check_basics(tree, basics)

    nodes: dict[str, Cpt] = {}
    for eid in tree.topological_order():
        event = tree.events[eid]
        if event.kind is EventKind.BASIC:
            nodes[eid] = Cpt(parents=(), rows=(float(basics[eid]),))
        else:
            gate = tree.gates[eid]
            nodes[eid] = cpt_for_gate(gate.kind, len(gate.inputs), gate.inputs)
    return BayesianNetwork(nodes=nodes, query=tree.top)


def network_to_json(bn: BayesianNetwork) -> dict:
    """Wire format: nodes in topological order, dense rows per the binary
    parent-state index contract (false=0, true=1, first parent most
    significant)."""
    return {
        "query": bn.query,
        "nodes": [
            {
                "id": node_id,
                "parents": list(cpt.parents),
                "cpt_rows": list(cpt.materialize(node_id)),
            }
            for node_id, cpt in bn.nodes.items()
        ],
    }
