"""Qualitative fault-tree analysis: minimal cut sets and failure classification.

Cut sets are enumerated by top-down gate substitution (MOCUS style): an OR
gate splits a working row into one row per input, an AND gate extends the
row with all inputs.  Rows are sets of event ids, so repeated events collapse
idempotently, and subset absorption after every expansion sweep keeps the
collection minimal.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .tree import EventKind, FaultTree, ensure_valid

DEFAULT_ROW_CAP = 1_000_000


class CutSetLimitError(Exception):
    """Intermediate row count exceeded the configured cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"cut-set expansion exceeded the row cap of {cap}")


@dataclass(frozen=True)
class CutSetCollection:
    """Minimal cut sets of a tree, in deterministic (order, members) order."""

    sets: tuple[frozenset[str], ...]
    top: str

    def to_lists(self) -> list[list[str]]:
        return [sorted(s) for s in self.sets]


def minimal_cut_sets(tree: FaultTree, max_rows: int = DEFAULT_ROW_CAP) -> CutSetCollection:
    """Exactly the minimal cut sets of the tree's structure function.

    Output order is deterministic: ascending cardinality, then lexicographic
    member list.  Raises :class:`CutSetLimitError` if the working row count
    ever exceeds ``max_rows``.
    """
    ensure_valid(tree)
    basics = {eid for eid, e in tree.events.items() if e.kind is EventKind.BASIC}

    rows: set[frozenset[str]] = {frozenset({tree.top})}
    while True:
        expandable = [row for row in rows if not row <= basics]
        if not expandable:
            break
        next_rows: set[frozenset[str]] = {row for row in rows if row <= basics}
        for row in expandable:
            event = min(e for e in row if e not in basics)
            gate = tree.gates[event]
            rest = row - {event}
            if gate.kind.value == "and":
                next_rows.add(rest | set(gate.inputs))
            else:
                for src in gate.inputs:
                    next_rows.add(rest | {src})
            if len(next_rows) > max_rows:
                raise CutSetLimitError(max_rows)
        rows = _absorb(next_rows)

    ordered = sorted(rows, key=lambda s: (len(s), sorted(s)))
    return CutSetCollection(tuple(ordered), tree.top)


def _absorb(rows: set[frozenset[str]]) -> set[frozenset[str]]:
    """Drop every row that is a superset of another row."""
    minimal: list[frozenset[str]] = []
    for row in sorted(rows, key=len):
        if not any(kept <= row for kept in minimal):
            minimal.append(row)
    return set(minimal)


def single_points_of_failure(cutsets: CutSetCollection) -> list[str]:
    """Members of all order-1 cut sets, sorted by event id."""
    return sorted(next(iter(s)) for s in cutsets.sets if len(s) == 1)


def order_histogram(cutsets: CutSetCollection) -> dict[int, int]:
    """Count of cut sets per cardinality."""
    return dict(sorted(Counter(len(s) for s in cutsets.sets).items()))
