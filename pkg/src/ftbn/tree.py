"""Fault-tree domain model, text/JSON parsing, and structural validation.

A fault tree is a DAG of events connected by AND/OR gates with a single top
event.  Repeated basic events (one event feeding several gates) are allowed.

Text format, one statement per line, ``#`` starts a comment::

    top <EventId> "<label>"
    event <EventId> basic "<label>" [subsystem=<tag>] [rate=<fit>]
    event <EventId> intermediate "<label>" [subsystem=<tag>]
    gate <EventId> = AND(<id>, <id>, ...)
    gate <EventId> = OR(<id>, <id>, ...)

A structurally equivalent JSON document (objects ``events``, ``gates``,
``top``) is accepted by :func:`parse_fault_tree` and emitted by
:func:`tree_to_json`; both forms round-trip losslessly.

Trees are immutable after construction; parsing, serialization, and
validation are pure functions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping


class FaultTreeError(Exception):
    """Base class for fault-tree domain errors."""


class FaultTreeParseError(FaultTreeError):
    """Malformed fault-tree document; carries the source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class InvalidTreeError(FaultTreeError):
    """An operation required a valid tree but validation found errors."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = next((f for f in report.findings if f.severity is Severity.ERROR), None)
        detail = f"{first.code}: {first.message}" if first else "unknown error"
        super().__init__(f"tree failed validation ({detail})")


class EventKind(Enum):
    BASIC = "basic"
    INTERMEDIATE = "intermediate"
    TOP = "top"


class GateKind(Enum):
    AND = "and"
    OR = "or"


ID_PATTERN = re.compile(r"[A-Za-z0-9_]+")


@dataclass(frozen=True)
class Event:
    id: str
    kind: EventKind
    label: str = ""
    subsystem: str | None = None
    rate_fit: float | None = None  # declared prior failure rate, basic events only


@dataclass(frozen=True)
class Gate:
    output: str
    kind: GateKind
    inputs: tuple[str, ...]


@dataclass(frozen=True)
class FaultTree:
    """Events keyed by id, gates keyed by their output event, and the top id.

    Treat as immutable: the dicts are never mutated after construction.
    """

    events: dict[str, Event]
    gates: dict[str, Gate]
    top: str

    def basic_ids(self) -> list[str]:
        return sorted(e.id for e in self.events.values() if e.kind is EventKind.BASIC)

    def gate_ids(self) -> list[str]:
        return sorted(self.gates)

    def topological_order(self) -> list[str]:
        """Event ids ordered so every gate input precedes the gate's output.

        Deterministic (ready nodes processed in sorted order).  Raises
        ``ValueError`` if the gate graph has a cycle.
        """
        indegree = {eid: 0 for eid in self.events}
        consumers: dict[str, list[str]] = {eid: [] for eid in self.events}
        for gate in self.gates.values():
            if gate.output not in indegree:
                continue
            for src in gate.inputs:
                if src in indegree:
                    indegree[gate.output] += 1
                    consumers[src].append(gate.output)
        ready = sorted(eid for eid, deg in indegree.items() if deg == 0)
        order: list[str] = []
        while ready:
            eid = ready.pop(0)
            order.append(eid)
            inserted = False
            for out in consumers[eid]:
                indegree[out] -= 1
                if indegree[out] == 0:
                    ready.append(out)
                    inserted = True
            if inserted:
                ready.sort()
        if len(order) != len(self.events):
            raise ValueError("fault tree contains a cycle; no topological order exists")
        return order

    def fan_out(self) -> dict[str, int]:
        """How many gate-input slots each event occupies (duplicates counted)."""
        counts = {eid: 0 for eid in self.events}
        for gate in self.gates.values():
            for src in gate.inputs:
                if src in counts:
                    counts[src] += 1
        return counts

    def has_shared_events(self) -> bool:
        """True when any event feeds more than one gate-input slot.

        Gate-formula propagation assumes independent inputs and is only exact
        when this is False.
        """
        return any(n > 1 for n in self.fan_out().values())


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    events: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not any(f.severity is Severity.ERROR for f in self.findings)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [
                {
                    "severity": f.severity.value,
                    "code": f.code,
                    "message": f.message,
                    "events": list(f.events),
                }
                for f in self.findings
            ],
        }


# --- parsing ---------------------------------------------------------------

_TOP_RE = re.compile(r'^top\s+([A-Za-z0-9_]+)\s+"([^"]*)"\s*$')
_EVENT_RE = re.compile(r'^event\s+([A-Za-z0-9_]+)\s+(basic|intermediate)\s+"([^"]*)"\s*(.*)$')
_GATE_RE = re.compile(r"^gate\s+([A-Za-z0-9_]+)\s*=\s*(AND|OR)\s*\(([^)]*)\)\s*$")
_ATTR_RE = re.compile(r"^(subsystem|rate)=(\S+)$")


def _strip_comment(line: str) -> str:
    """Drop everything from the first ``#`` that is not inside a quoted label."""
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


def parse_fault_tree(source: str) -> FaultTree:
    """Parse a fault-tree document in either the text or JSON format.

    The format is sniffed: documents whose first non-blank character is ``{``
    are treated as JSON.  Raises :class:`FaultTreeParseError` on syntax
    errors, duplicate ids, unknown references, or a missing top declaration.
    """
    if source.lstrip().startswith("{"):
        return _parse_json(source)
    return _parse_text(source)


def _parse_text(source: str) -> FaultTree:
    events: dict[str, Event] = {}
    gates: dict[str, Gate] = {}
    top_id: str | None = None
    pending_gates: list[tuple[int, str, Gate]] = []  # (line_no, raw line, gate)

    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        keyword = line.split(None, 1)[0]

        if keyword == "top":
            m = _TOP_RE.match(line)
            if not m:
                raise FaultTreeParseError("malformed top statement", line_no, 1)
            if top_id is not None:
                raise FaultTreeParseError("duplicate top declaration", line_no, 1)
            eid, label = m.group(1), m.group(2)
            if eid in events:
                raise FaultTreeParseError(f"duplicate event id {eid}", line_no, _col(raw, eid))
            top_id = eid
            events[eid] = Event(eid, EventKind.TOP, label)

        elif keyword == "event":
            m = _EVENT_RE.match(line)
            if not m:
                raise FaultTreeParseError("malformed event statement", line_no, 1)
            eid, kind_word, label, attr_text = m.groups()
            if eid in events:
                raise FaultTreeParseError(f"duplicate event id {eid}", line_no, _col(raw, eid))
            kind = EventKind.BASIC if kind_word == "basic" else EventKind.INTERMEDIATE
            subsystem, rate = _parse_attrs(attr_text, kind, line_no, raw)
            events[eid] = Event(eid, kind, label, subsystem, rate)

        elif keyword == "gate":
            m = _GATE_RE.match(line)
            if not m:
                raise FaultTreeParseError("malformed gate statement", line_no, 1)
            out, kind_word, inputs_text = m.groups()
            inputs = tuple(tok.strip() for tok in inputs_text.split(",") if tok.strip())
            if not inputs:
                raise FaultTreeParseError("gate has no inputs", line_no, _col(raw, "("))
            for tok in inputs:
                if not ID_PATTERN.fullmatch(tok):
                    raise FaultTreeParseError(f"invalid event id {tok!r}", line_no, _col(raw, tok))
            kind = GateKind.AND if kind_word == "AND" else GateKind.OR
            if out in gates or any(g.output == out for _, _, g in pending_gates):
                raise FaultTreeParseError(f"duplicate gate for {out}", line_no, _col(raw, out))
            pending_gates.append((line_no, raw, Gate(out, kind, inputs)))

        else:
            raise FaultTreeParseError(f"unknown statement {keyword!r}", line_no, 1)

    if top_id is None:
        raise FaultTreeParseError("missing top declaration", None, None)

    # Gates may reference events declared later in the file, so resolve last.
    for line_no, raw, gate in pending_gates:
        if gate.output not in events:
            raise FaultTreeParseError(
                f"unknown reference {gate.output}", line_no, _col(raw, gate.output)
            )
        for src in gate.inputs:
            if src not in events:
                raise FaultTreeParseError(f"unknown reference {src}", line_no, _col(raw, src))
        gates[gate.output] = gate

    return FaultTree(events=events, gates=gates, top=top_id)


def _col(raw_line: str, token: str) -> int:
    pos = raw_line.find(token)
    return pos + 1 if pos >= 0 else 1


def _parse_attrs(
    attr_text: str, kind: EventKind, line_no: int, raw: str
) -> tuple[str | None, float | None]:
    subsystem: str | None = None
    rate: float | None = None
    for tok in attr_text.split():
        m = _ATTR_RE.match(tok)
        if not m:
            raise FaultTreeParseError(f"unexpected token {tok!r}", line_no, _col(raw, tok))
        key, value = m.groups()
        if key == "subsystem":
            if subsystem is not None:
                raise FaultTreeParseError("duplicate subsystem attribute", line_no, _col(raw, tok))
            subsystem = value
        else:
            if kind is not EventKind.BASIC:
                raise FaultTreeParseError(
                    "rate is only allowed on basic events", line_no, _col(raw, tok)
                )
            if rate is not None:
                raise FaultTreeParseError("duplicate rate attribute", line_no, _col(raw, tok))
            try:
                rate = float(value)
            except ValueError:
                raise FaultTreeParseError(f"bad rate value {value!r}", line_no, _col(raw, tok))
            if not rate >= 0:
                raise FaultTreeParseError(f"rate must be non-negative, got {value}", line_no, _col(raw, tok))
    return subsystem, rate


def _parse_json(source: str) -> FaultTree:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise FaultTreeParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno)
    if not isinstance(doc, dict):
        raise FaultTreeParseError("JSON document must be an object")
    for key in ("events", "gates", "top"):
        if key not in doc:
            raise FaultTreeParseError(f"JSON document missing {key!r}")

    events: dict[str, Event] = {}
    for eid, spec in doc["events"].items():
        if not ID_PATTERN.fullmatch(eid):
            raise FaultTreeParseError(f"invalid event id {eid!r}")
        try:
            kind = EventKind(spec["kind"])
        except (KeyError, ValueError):
            raise FaultTreeParseError(f"event {eid}: bad or missing kind")
        rate = spec.get("rate")
        if rate is not None:
            if kind is not EventKind.BASIC:
                raise FaultTreeParseError(f"event {eid}: rate is only allowed on basic events")
            rate = float(rate)
            if not rate >= 0:
                raise FaultTreeParseError(f"event {eid}: rate must be non-negative")
        events[eid] = Event(eid, kind, spec.get("label", ""), spec.get("subsystem"), rate)

    gates: dict[str, Gate] = {}
    for out, spec in doc["gates"].items():
        if out not in events:
            raise FaultTreeParseError(f"unknown reference {out}")
        try:
            kind = GateKind(spec["kind"])
        except (KeyError, ValueError):
            raise FaultTreeParseError(f"gate {out}: bad or missing kind")
        inputs = tuple(spec.get("inputs", ()))
        if not inputs:
            raise FaultTreeParseError(f"gate {out} has no inputs")
        for src in inputs:
            if src not in events:
                raise FaultTreeParseError(f"unknown reference {src}")
        gates[out] = Gate(out, kind, inputs)

    top = doc["top"]
    if top not in events:
        raise FaultTreeParseError(f"unknown reference {top}")
    declared_tops = [eid for eid, e in events.items() if e.kind is EventKind.TOP]
    if declared_tops != [top]:
        raise FaultTreeParseError("top field must match exactly one event of kind 'top'")
    return FaultTree(events=events, gates=gates, top=top)


# --- serialization ---------------------------------------------------------

def tree_to_text(tree: FaultTree) -> str:
    """Serialize to the text format; ``parse_fault_tree`` round-trips it."""
    lines: list[str] = []
    top = tree.events[tree.top]
    lines.append(f'top {top.id} "{top.label}"')
    for event in tree.events.values():
        if event.kind is EventKind.TOP:
            continue
        parts = [f'event {event.id} {event.kind.value} "{event.label}"']
        if event.subsystem is not None:
            parts.append(f"subsystem={event.subsystem}")
        if event.rate_fit is not None:
            parts.append(f"rate={event.rate_fit!r}")
        lines.append(" ".join(parts))
    for gate in tree.gates.values():
        inputs = ", ".join(gate.inputs)
        lines.append(f"gate {gate.output} = {gate.kind.value.upper()}({inputs})")
    return "\n".join(lines) + "\n"


def tree_to_json(tree: FaultTree) -> dict:
    """Serialize to the JSON object form accepted by ``parse_fault_tree``."""
    events: dict[str, dict] = {}
    for event in tree.events.values():
        spec: dict = {"kind": event.kind.value, "label": event.label}
        if event.subsystem is not None:
            spec["subsystem"] = event.subsystem
        if event.rate_fit is not None:
            spec["rate"] = event.rate_fit
        events[event.id] = spec
    gates = {
        g.output: {"kind": g.kind.value, "inputs": list(g.inputs)} for g in tree.gates.values()
    }
    return {"top": tree.top, "events": events, "gates": gates}


# --- validation ------------------------------------------------------------

def validate(tree: FaultTree) -> ValidationReport:
    """Check every structural invariant; violations become report findings.

    ``report.ok`` is True iff no Error-severity finding was recorded.
    Warnings (single-input gates, unreachable events, duplicated gate
    inputs) do not affect ``ok``.
    """
    findings: list[Finding] = []

    def error(code: str, message: str, *events: str) -> None:
        findings.append(Finding(Severity.ERROR, code, message, tuple(events)))

    def warning(code: str, message: str, *events: str) -> None:
        findings.append(Finding(Severity.WARNING, code, message, tuple(events)))

    for eid, event in sorted(tree.events.items()):
        if not ID_PATTERN.fullmatch(eid):
            error("invalid-id", f"event id {eid!r} is not letters/digits/underscore", eid)
        if event.rate_fit is not None and event.kind is not EventKind.BASIC:
            error("rate-on-non-basic", f"{eid} carries a rate but is not a basic event", eid)
        if event.rate_fit is not None and not event.rate_fit >= 0:
            error("negative-rate", f"{eid} has a negative declared rate", eid)

    tops = sorted(eid for eid, e in tree.events.items() if e.kind is EventKind.TOP)
    if tree.top not in tree.events:
        error("missing-top", f"top event {tree.top} is not declared", tree.top)
    elif tops != [tree.top]:
        error(
            "top-mismatch",
            f"expected exactly one top event {tree.top}, found {tops or 'none'}",
            *tops,
        )

    for eid, event in sorted(tree.events.items()):
        if event.kind is EventKind.BASIC:
            if eid in tree.gates:
                error("basic-with-gate", f"basic event {eid} has a gate attached", eid)
        elif eid not in tree.gates:
            error("missing-gate", f"{event.kind.value} event {eid} has no gate", eid)

    for out, gate in sorted(tree.gates.items()):
        if out not in tree.events:
            error("unknown-reference", f"gate output {out} is not a declared event", out)
        for src in gate.inputs:
            if src not in tree.events:
                error("unknown-reference", f"gate {out} references undeclared event {src}", out, src)
        if len(gate.inputs) == 0:
            error("empty-gate", f"gate {out} has no inputs", out)
        elif len(gate.inputs) == 1:
            warning(
                "single-input-gate",
                f"gate {out} has a single input and acts as identity pass-through",
                out,
            )
        if len(set(gate.inputs)) != len(gate.inputs):
            dupes = sorted({s for s in gate.inputs if gate.inputs.count(s) > 1})
            warning("duplicate-gate-input", f"gate {out} lists {', '.join(dupes)} more than once", out, *dupes)
        if tree.top in gate.inputs:
            error("top-used-as-input", f"top event {tree.top} is an input to gate {out}", tree.top, out)

    for cycle in _find_cycles(tree):
        error("cycle-detected", "cycle through " + " -> ".join(cycle), *cycle)

    reachable = _reachable_from_top(tree)
    unreachable = sorted(set(tree.events) - reachable)
    if unreachable and tree.top in tree.events:
        warning(
            "unreachable-event",
            "not reachable from the top event: " + ", ".join(unreachable),
            *unreachable,
        )

    return ValidationReport(tuple(findings))


def ensure_valid(tree: FaultTree) -> None:
    """Raise :class:`InvalidTreeError` unless ``validate(tree).ok``."""
    report = validate(tree)
    if not report.ok:
        raise InvalidTreeError(report)


def _find_cycles(tree: FaultTree) -> list[tuple[str, ...]]:
    """Cycles in the input->output gate graph, via three-state DFS."""
    adjacency: dict[str, list[str]] = {eid: [] for eid in tree.events}
    for gate in tree.gates.values():
        for src in gate.inputs:
            if src in adjacency and gate.output in tree.events:
                adjacency[src].append(gate.output)

    cycles: list[tuple[str, ...]] = []
    seen_cycles: set[frozenset[str]] = set()
    state: dict[str, int] = {}  # 0 unvisited, 1 on stack, 2 done
    stack: list[str] = []

    def visit(node: str) -> None:
        state[node] = 1
        stack.append(node)
        for nxt in sorted(adjacency[node]):
            mark = state.get(nxt, 0)
            if mark == 1:
                cycle = tuple(stack[stack.index(nxt):])
                key = frozenset(cycle)
                if key not in seen_cycles:
                    seen_cycles.add(key)
                    cycles.append(cycle)
            elif mark == 0:
                visit(nxt)
        stack.pop()
        state[node] = 2

    for eid in sorted(tree.events):
        if state.get(eid, 0) == 0:
            visit(eid)
    return cycles


def _reachable_from_top(tree: FaultTree) -> set[str]:
    if tree.top not in tree.events:
        return set()
    seen = {tree.top}
    frontier = [tree.top]
    while frontier:
        eid = frontier.pop()
        gate = tree.gates.get(eid)
        if gate is None:
            continue
        for src in gate.inputs:
            if src in tree.events and src not in seen:
                seen.add(src)
                frontier.append(src)
    return seen
