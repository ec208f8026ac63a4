import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftbn.tree import (
    Event,
    EventKind,
    FaultTree,
    FaultTreeParseError,
    Gate,
    GateKind,
    Severity,
    parse_fault_tree,
    tree_to_json,
    tree_to_text,
    validate,
)
from treegen import random_tree

MINIMAL = """
# smallest useful tree
top COLLISION "Collision"
event A basic "first cause"
event B basic "second cause"
gate COLLISION = OR(A, B)
"""


def test_parse_minimal_tree():
    tree = parse_fault_tree(MINIMAL)
    assert len(tree.events) == 3
    assert tree.top == "COLLISION"
    assert tree.events["COLLISION"].kind is EventKind.TOP
    assert tree.events["A"].kind is EventKind.BASIC
    assert list(tree.gates) == ["COLLISION"]
    assert tree.gates["COLLISION"].kind is GateKind.OR
    assert tree.gates["COLLISION"].inputs == ("A", "B")


def test_parse_attributes_and_comments():
    tree = parse_fault_tree(
        'top T "top"  # trailing comment\n'
        'event A basic "with # in label" subsystem=left rate=5.25\n'
        "\n"
        'gate T = OR(A, A)\n'
    )
    a = tree.events["A"]
    assert a.subsystem == "left"
    assert a.rate_fit == 5.25
    assert a.label == "with # in label"


def test_parse_unknown_reference_names_the_event():
    doc = MINIMAL + "\ngate B = OR(PF99, A)\n"
    with pytest.raises(FaultTreeParseError, match="PF99") as exc_info:
        parse_fault_tree(doc)
    assert exc_info.value.line is not None


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ('top T "t"\nevent T basic "dup"\ngate T = OR(A)\n', "duplicate event id"),
        ('event A basic "a"\n', "missing top"),
        ('top T "t"\ntop U "u"\n', "duplicate top"),
        ('top T "t"\nevent A basic "a"\ngate T = OR()\n', "no inputs"),
        ('top T "t"\nevent A basic "a"\ngate T = XOR(A)\n', "malformed gate"),
        ('top T "t"\nevent A basic "a" rate=fast\ngate T = OR(A)\n', "bad rate"),
        ('top T "t"\nevent A intermediate "a" rate=5\n', "only allowed on basic"),
        ('top T "t"\nevent A basic "a" color=red\ngate T = OR(A)\n', "unexpected token"),
        ("frobnicate T\n", "unknown statement"),
    ],
)
def test_parse_errors(doc, fragment):
    with pytest.raises(FaultTreeParseError, match=fragment):
        parse_fault_tree(doc)


def test_parse_error_reports_line_number():
    doc = 'top T "t"\nevent A basic "a"\ngate T = OR(A,\n'
    with pytest.raises(FaultTreeParseError) as exc_info:
        parse_fault_tree(doc)
    assert exc_info.value.line == 3
    assert exc_info.value.column is not None


def test_text_round_trip():
    tree = parse_fault_tree(MINIMAL)
    again = parse_fault_tree(tree_to_text(tree))
    assert again == tree


def test_json_round_trip():
    tree = parse_fault_tree(
        'top T "top"\n'
        'event A basic "a" subsystem=s1 rate=3.5\n'
        'event B basic "b"\n'
        'event M intermediate "m" subsystem=s1\n'
        "gate M = AND(A, B)\n"
        "gate T = OR(M, B)\n"
    )
    doc = json.dumps(tree_to_json(tree))
    again = parse_fault_tree(doc)
    assert again == tree
    assert tree_to_json(again) == tree_to_json(tree)


def test_json_parse_errors():
    with pytest.raises(FaultTreeParseError, match="invalid JSON"):
        parse_fault_tree("{not json")
    with pytest.raises(FaultTreeParseError, match="missing 'top'"):
        parse_fault_tree(json.dumps({"events": {}, "gates": {}}))
    bad = {
        "top": "T",
        "events": {"T": {"kind": "top"}, "A": {"kind": "basic"}},
        "gates": {"T": {"kind": "or", "inputs": ["A", "GHOST"]}},
    }
    with pytest.raises(FaultTreeParseError, match="GHOST"):
        parse_fault_tree(json.dumps(bad))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**9), shared=st.booleans())
def test_random_trees_round_trip_and_validate(seed, shared):
    tree = random_tree(random.Random(seed), max_basics=10, share_prob=0.3 if shared else 0.0)
    assert validate(tree).ok
    assert parse_fault_tree(tree_to_text(tree)) == tree
    assert parse_fault_tree(json.dumps(tree_to_json(tree))) == tree


def test_validate_clean_tree_has_no_findings():
    report = validate(parse_fault_tree(MINIMAL))
    assert report.ok
    assert report.findings == ()


def _codes(report, severity=None):
    return {
        f.code
        for f in report.findings
        if severity is None or f.severity is severity
    }


def test_validate_top_used_as_input():
    tree = parse_fault_tree(
        'top T "t"\nevent A basic "a"\nevent M intermediate "m"\n'
        "gate M = OR(A, T)\ngate T = OR(M, A)\n"
    )
    report = validate(tree)
    assert not report.ok
    assert "top-used-as-input" in _codes(report, Severity.ERROR)


def test_validate_cycle_detected_lists_both_ids():
    events = {
        "T": Event("T", EventKind.TOP, "t"),
        "A": Event("A", EventKind.INTERMEDIATE, "a"),
        "B": Event("B", EventKind.INTERMEDIATE, "b"),
        "X": Event("X", EventKind.BASIC, "x"),
    }
    gates = {
        "T": Gate("T", GateKind.OR, ("A", "X")),
        "A": Gate("A", GateKind.OR, ("B", "X")),
        "B": Gate("B", GateKind.OR, ("A", "X")),
    }
    report = validate(FaultTree(events, gates, "T"))
    finding = next(f for f in report.findings if f.code == "cycle-detected")
    assert {"A", "B"} <= set(finding.events)
    with pytest.raises(ValueError, match="cycle"):
        FaultTree(events, gates, "T").topological_order()


def test_validate_structural_errors_on_hand_built_trees():
    events = {
        "T": Event("T", EventKind.TOP, "t"),
        "A": Event("A", EventKind.BASIC, "a"),
        "M": Event("M", EventKind.INTERMEDIATE, "m"),
    }
    # M has no gate; A has one; gate references an undeclared event.
    gates = {
        "A": Gate("A", GateKind.OR, ("T",)),
        "T": Gate("T", GateKind.OR, ("A", "GHOST")),
    }
    report = validate(FaultTree(events, gates, "T"))
    codes = _codes(report, Severity.ERROR)
    assert {"basic-with-gate", "missing-gate", "unknown-reference", "top-used-as-input"} <= codes


def test_validate_bad_id_and_rate_on_hand_built_events():
    events = {
        "T": Event("T", EventKind.TOP, "t"),
        "A-B": Event("A-B", EventKind.BASIC, "bad token"),
        "M": Event("M", EventKind.INTERMEDIATE, "m", rate_fit=4.0),
    }
    gates = {
        "T": Gate("T", GateKind.OR, ("A-B", "M")),
        "M": Gate("M", GateKind.OR, ("A-B", "A-B")),
    }
    report = validate(FaultTree(events, gates, "T"))
    codes = _codes(report, Severity.ERROR)
    assert {"invalid-id", "rate-on-non-basic"} <= codes
    assert "duplicate-gate-input" in _codes(report, Severity.WARNING)


def test_validate_single_input_gate_is_warning_only():
    tree = parse_fault_tree(
        'top T "t"\nevent A basic "a"\nevent M intermediate "m"\n'
        "gate M = OR(A)\ngate T = OR(M, A)\n"
    )
    report = validate(tree)
    assert report.ok
    assert "single-input-gate" in _codes(report, Severity.WARNING)


def test_validate_unreachable_event_is_warning():
    tree = parse_fault_tree(MINIMAL + 'event ORPHAN basic "unused"\n')
    report = validate(tree)
    assert report.ok
    assert "unreachable-event" in _codes(report, Severity.WARNING)


def test_topological_order_puts_inputs_first():
    tree = parse_fault_tree(
        'top T "t"\nevent A basic "a"\nevent B basic "b"\nevent M intermediate "m"\n'
        "gate M = AND(A, B)\ngate T = OR(M, B)\n"
    )
    order = tree.topological_order()
    assert set(order) == set(tree.events)
    position = {eid: i for i, eid in enumerate(order)}
    for gate in tree.gates.values():
        assert all(position[src] < position[gate.output] for src in gate.inputs)


def test_shared_event_detection():
    plain = parse_fault_tree(MINIMAL)
    assert not plain.has_shared_events()
    shared = parse_fault_tree(
        'top T "t"\nevent A basic "a"\nevent B basic "b"\nevent M intermediate "m"\n'
        "gate M = AND(A, B)\ngate T = OR(M, A)\n"
    )
    assert shared.has_shared_events()
