"""Bundled autonomous-vehicle collision model.

The tree ships as a data file in the standard text format
(``models/av_collision.ft``); nothing is hardcoded here.  A companion CSV
(``models/av_table1.csv``) carries the published reference posterior rates
for the 29 basic events, used by regression tests and report comparisons
only, never as inference inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .tree import FaultTree, parse_fault_tree

SUBSYSTEMS = ("sensors", "perception", "decision-making", "motion-control", "external")


@dataclass(frozen=True)
class AvCatalogEntry:
    id: str
    name: str
    subsystem: str
    table1_mean: float
    table1_halfwidth: float


def _read_model_text(name: str) -> str:
    return resources.files("ftbn").joinpath("models", name).read_text(encoding="utf-8")


def builtin_av_tree() -> FaultTree:
    """The 38-event collision fault tree (29 basics, 8 intermediates, top)."""
    return parse_fault_tree(_read_model_text("av_collision.ft"))


def table1_reference() -> list[AvCatalogEntry]:
    """Reference posterior rates (FIT) and 95% half-widths for every basic event."""
    reader = csv.DictReader(_read_model_text("av_table1.csv").splitlines())
    return [
        AvCatalogEntry(
            id=row["id"],
            name=row["name"],
            subsystem=row["subsystem"],
            table1_mean=float(row["mean_fit"]),
            table1_halfwidth=float(row["halfwidth_fit"]),
        )
        for row in reader
    ]
