"""Quantitative fault-tree analysis.

Failure rates are expressed in FIT (failures per 10^9 operating hours) at
the user-facing surface and converted to per-hour internally, so the
exponential-life conversions are

    p = 1 - exp(-rate * 1e-9 * hours)        rate = -ln(1 - p) / (1e-9 * hours)

Gate probabilities propagate bottom-up with the product rule for AND and the
complement-of-complements rule for OR.  Those formulas assume independent
gate inputs, which breaks as soon as one event feeds two gates; when that
happens :func:`propagate` routes the query through exact Bayesian-network
inference instead and tags the result accordingly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping

from .tree import EventKind, FaultTree, GateKind, ensure_valid

FIT_PER_HOUR = 1e-9

METHOD_GATE_FORMULAS = "gate-formulas"
METHOD_BN_EXACT = "bn-exact"


def rate_to_probability(rate_fit: float, hours: float) -> float:
    """Failure probability over ``hours`` for an exponential life at ``rate_fit``."""
    if not (math.isfinite(rate_fit) and rate_fit >= 0):
        raise ValueError(f"failure rate must be finite and non-negative, got {rate_fit}")
    if not hours > 0:
        raise ValueError(f"time horizon must be positive, got {hours}")
    return -math.expm1(-rate_fit * FIT_PER_HOUR * hours)


def probability_to_rate(p: float, hours: float) -> float:
    """Exact inverse of :func:`rate_to_probability`, in FIT."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"probability {p} has no finite failure rate over a finite horizon")
    if not hours > 0:
        raise ValueError(f"time horizon must be positive, got {hours}")
    return -math.log1p(-p) / (FIT_PER_HOUR * hours)


@dataclass(frozen=True)
class PropagationResult:
    """Per-event probabilities plus the method that produced them.

    ``method`` is ``"gate-formulas"`` for tree-shaped models and
    ``"bn-exact"`` when shared events forced the Bayesian-network fallback.
    """

    probabilities: dict[str, float]
    method: str

    def __getitem__(self, event_id: str) -> float:
        return self.probabilities[event_id]


def _check_basics(tree: FaultTree, basics: Mapping[str, float]) -> None:
    for eid in tree.basic_ids():
        if eid not in basics:
            raise ValueError(f"missing probability for basic event {eid}")
    for eid, p in basics.items():
        if eid not in tree.events or tree.events[eid].kind is not EventKind.BASIC:
            raise ValueError(f"{eid} is not a basic event of the tree")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability for {eid} is outside [0, 1]: {p}")


def propagate(tree: FaultTree, basics: Mapping[str, float]) -> PropagationResult:
    """Probability of every event given basic-event probabilities.

    Bottom-up gate formulas on tree-shaped models; exact BN forward
    marginals when any event feeds more than one gate.
    """
    ensure_valid(tree)
    _check_basics(tree, basics)

    if tree.has_shared_events():
        from .inference import posterior_all
        from .network import to_bayesian_network

        bn = to_bayesian_network(tree, basics)
        report = posterior_all(bn, {})
        return PropagationResult(dict(report.posteriors), METHOD_BN_EXACT)

    values: dict[str, float] = {}
    for eid in tree.topological_order():
        gate = tree.gates.get(eid)
        if gate is None:
            values[eid] = float(basics[eid])
        elif gate.kind is GateKind.AND:
            values[eid] = math.prod(values[src] for src in gate.inputs)
        else:
            values[eid] = 1.0 - math.prod(1.0 - values[src] for src in gate.inputs)
    return PropagationResult(values, METHOD_GATE_FORMULAS)


@dataclass(frozen=True)
class RateAssignment:
    """Basic-event failure rates in FIT summing to ``budget``."""

    rates: dict[str, float]
    budget: float
    seed: int

    def total(self) -> float:
        return math.fsum(self.rates.values())


def allocate_budget(
    tree: FaultTree, budget: float, seed: int, concentration: float = 25.0
) -> RateAssignment:
    """Randomly split ``budget`` FIT over the tree's basic events.

    Rates are a symmetric Dirichlet draw (all parameters equal to
    ``concentration``) scaled to the budget, built from stdlib gamma variates
    so a fixed seed reproduces bit-identical assignments across library
    versions.  Larger concentration means rates cluster tighter around
    ``budget / n``.
    """
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if not concentration > 0:
        raise ValueError(f"concentration must be positive, got {concentration}")
    basics = tree.basic_ids()
    if not basics:
        raise ValueError("tree has no basic events")

    rng = random.Random(seed)
    draws = [rng.gammavariate(concentration, 1.0) for _ in basics]
    total = math.fsum(draws)
    rates = {eid: budget * draw / total for eid, draw in zip(basics, draws)}
    # Nudge the largest entry so the sum hits the budget to the last bit.
    largest = max(rates, key=lambda eid: (rates[eid], eid))
    rates[largest] += budget - math.fsum(rates.values())
    return RateAssignment(rates, budget, seed)
