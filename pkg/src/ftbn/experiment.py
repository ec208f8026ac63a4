"""Repeated-allocation posterior study over a fault tree.

Each repetition draws a fresh random split of the failure-rate budget,
converts rates to probabilities at the time horizon, compiles the tree to a
Bayesian network, conditions on the configured evidence (by default: top
event observed true), and converts the per-basic posteriors back to FIT.
Across repetitions every basic event gets a mean posterior rate with a
Student-t confidence interval, plus per-subsystem roll-ups.

Everything is deterministic for a fixed seed: repetition ``r`` uses
``seed + r``, and report rows are sorted by event id.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from scipy.stats import t as student_t

from .cutsets import CutSetCollection, minimal_cut_sets, single_points_of_failure
from .inference import posterior_all
from .network import to_bayesian_network
from .quant import allocate_budget, probability_to_rate, propagate, rate_to_probability
from .tree import FaultTree, ensure_valid


@dataclass(frozen=True)
class ExperimentConfig:
    tree: FaultTree
    budget_fit: float = 100.0
    time_hours: float = 10_000.0
    repetitions: int = 10
    confidence: float = 0.95
    seed: int = 0
    concentration: float = 25.0
    evidence: dict[str, bool] | None = None  # None means {top: True}
    tree_ref: str = "inline"

    def __post_init__(self):
        if self.repetitions < 2:
            raise ValueError("need at least 2 repetitions to form a confidence interval")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if not self.budget_fit > 0:
            raise ValueError("budget must be positive")
        if not self.time_hours > 0:
            raise ValueError("time horizon must be positive")


@dataclass(frozen=True)
class EventStatistics:
    event: str
    mean_posterior_rate: float
    half_width: float
    sample_sd: float
    samples: tuple[float, ...]
    mean_prior_rate: float


@dataclass(frozen=True)
class ExperimentReport:
    events: tuple[EventStatistics, ...]
    subsystem_totals: dict[str, float]
    single_point_totals: dict[str, float]
    top_event_prior_probability: float
    config: dict = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "labels": self.labels,
            "top_event_prior_probability": self.top_event_prior_probability,
            "events": [
                {
                    "event": s.event,
                    "mean_posterior_rate": s.mean_posterior_rate,
                    "half_width": s.half_width,
                    "sample_sd": s.sample_sd,
                    "samples": list(s.samples),
                    "mean_prior_rate": s.mean_prior_rate,
                }
                for s in self.events
            ],
            "subsystem_totals": self.subsystem_totals,
            "single_point_totals": self.single_point_totals,
        }


def report_from_json(doc: dict) -> ExperimentReport:
    return ExperimentReport(
        events=tuple(
            EventStatistics(
                event=row["event"],
                mean_posterior_rate=row["mean_posterior_rate"],
                half_width=row["half_width"],
                sample_sd=row["sample_sd"],
                samples=tuple(row["samples"]),
                mean_prior_rate=row["mean_prior_rate"],
            )
            for row in doc["events"]
        ),
        subsystem_totals=dict(doc["subsystem_totals"]),
        single_point_totals=dict(doc["single_point_totals"]),
        top_event_prior_probability=doc["top_event_prior_probability"],
        config=dict(doc.get("config", {})),
        labels=dict(doc.get("labels", {})),
    )


def confidence_interval(samples: list[float], confidence: float) -> tuple[float, float]:
    """Mean and Student-t half-width at the given two-sided confidence level."""
    if len(samples) < 2:
        raise ValueError("confidence interval needs at least 2 samples")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    mean = statistics.fmean(samples)
    sd = statistics.stdev(samples)
    quantile = float(student_t.ppf((1.0 + confidence) / 2.0, len(samples) - 1))
    return mean, quantile * sd / math.sqrt(len(samples))


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    tree = config.tree
    ensure_valid(tree)
    evidence = dict(config.evidence) if config.evidence is not None else {tree.top: True}
    basics = tree.basic_ids()

    prior_samples: dict[str, list[float]] = {eid: [] for eid in basics}
    posterior_samples: dict[str, list[float]] = {eid: [] for eid in basics}
    top_priors: list[float] = []

    for rep in range(config.repetitions):
        assignment = allocate_budget(
            tree, config.budget_fit, config.seed + rep, config.concentration
        )
        probabilities = {
            eid: rate_to_probability(fit, config.time_hours)
            for eid, fit in assignment.rates.items()
        }
        top_priors.append(propagate(tree, probabilities)[tree.top])
        bn = to_bayesian_network(tree, probabilities)
        posteriors = posterior_all(bn, evidence).posteriors
        for eid in basics:
            prior_samples[eid].append(assignment.rates[eid])
            posterior_samples[eid].append(
                probability_to_rate(posteriors[eid], config.time_hours)
            )

    rows = []
    for eid in basics:
        samples = posterior_samples[eid]
        mean, half_width = confidence_interval(samples, config.confidence)
        rows.append(
            EventStatistics(
                event=eid,
                mean_posterior_rate=mean,
                half_width=half_width,
                sample_sd=statistics.stdev(samples),
                samples=tuple(samples),
                mean_prior_rate=statistics.fmean(prior_samples[eid]),
            )
        )

    mean_rows = [(row.event, row.mean_posterior_rate) for row in rows]
    grouping = {eid: tree.events[eid].subsystem for eid in basics}
    if all(tag is not None for tag in grouping.values()):
        cutsets = minimal_cut_sets(tree)
        totals = subsystem_rollup(mean_rows, grouping)
        spof_totals = subsystem_rollup(mean_rows, grouping, mode="single-points", cutsets=cutsets)
    else:
        totals, spof_totals = {}, {}

    config_echo = {
        "tree_ref": config.tree_ref,
        "budget_fit": config.budget_fit,
        "time_hours": config.time_hours,
        "repetitions": config.repetitions,
        "confidence": config.confidence,
        "seed": config.seed,
        "concentration": config.concentration,
        "evidence": {k: bool(v) for k, v in sorted(evidence.items())},
    }
    return ExperimentReport(
        events=tuple(rows),
        subsystem_totals=totals,
        single_point_totals=spof_totals,
        top_event_prior_probability=statistics.fmean(top_priors),
        config=config_echo,
        labels={eid: tree.events[eid].label for eid in basics},
    )


def subsystem_rollup(
    rows: list[tuple[str, float]],
    grouping: dict[str, str],
    mode: str = "all",
    cutsets: CutSetCollection | None = None,
) -> dict[str, float]:
    """Sum per-event rates by subsystem tag.

    ``mode="single-points"`` keeps only events that form order-1 cut sets
    (``cutsets`` required for that mode).
    """
    if mode in ("single-points", "single-points-only"):
        if cutsets is None:
            raise ValueError("single-points roll-up needs a CutSetCollection")
        keep = set(single_points_of_failure(cutsets))
        rows = [(eid, rate) for eid, rate in rows if eid in keep]
    elif mode != "all":
        raise ValueError(f"unknown roll-up mode {mode!r}")

    buckets: dict[str, list[float]] = {}
    for eid, rate in rows:
        tag = grouping.get(eid)
        if tag is None:
            raise ValueError(f"no subsystem tag for event {eid}")
        buckets.setdefault(tag, []).append(rate)
    return {tag: math.fsum(values) for tag, values in sorted(buckets.items())}
