#!/usr/bin/env python3
"""Run the bundled collision study end to end and write every artifact.

Produces, under --outdir (default ./av_study):

    report.json   full experiment report (loadable by `ftbn report --load`)
    table.csv     per-event means and half-widths (reference-table columns)
    report.md     ranked markdown summary with subsystem roll-ups
    ci_bounds.csv plot-ready series: id, mean_fit, ci_low, ci_high
    cutsets.json  the qualitative cut-set collection
"""

import argparse
import sys
from pathlib import Path

from ftbn.cli import main as ftbn


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="av_study")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--budget-fit", type=float, default=100.0)
    parser.add_argument("--time-hours", type=float, default=10_000.0)
    parser.add_argument("--confidence", type=float, default=0.95)
    parser.add_argument("--concentration", type=float, default=25.0)
    args = parser.parse_args(argv)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    common = [
        "--builtin", "av",
        "--seed", str(args.seed),
        "--reps", str(args.reps),
        "--budget-fit", str(args.budget_fit),
        "--time-hours", str(args.time_hours),
        "--confidence", str(args.confidence),
        "--concentration", str(args.concentration),
    ]
    report_json = outdir / "report.json"

    steps = [
        ["cutsets", "--builtin", "av", "--out", str(outdir / "cutsets.json")],
        ["experiment", *common, "--out", str(report_json), "--save", str(report_json)],
        ["experiment", *common, "--format", "csv", "--out", str(outdir / "table.csv")],
        ["report", "--load", str(report_json), "--format", "table", "--out", str(outdir / "report.md")],
        ["report", "--load", str(report_json), "--format", "csv", "--out", str(outdir / "ci_bounds.csv")],
    ]
    for step in steps:
        code = ftbn(step)
        if code != 0:
            print(f"step failed ({code}): {' '.join(step)}", file=sys.stderr)
            return code

    print(f"wrote {len(steps)} artifacts to {outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
