"""Render simulation CSV outputs as figure images.

Usage:
    qosched-figures --family zeta_sweep --in results/zeta_sweep/aggregate.csv \
        --out zeta_sweep.png

Families needing several inputs (join_leave_service, feedback_snapshot) take
repeated --in arguments, labeled by each file's parent directory name.
Rendering is deterministic: identical inputs produce identical image bytes,
and inputs are never modified.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .families import FAMILIES
from .schema import SchemaError, load_csv

DPI = 110


def render(family: str, inputs, out_path) -> None:
    if family not in FAMILIES:
        raise SchemaError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    fn, n_inputs, size = FAMILIES[family]
    if len(inputs) != n_inputs:
        raise SchemaError(f"family {family!r} needs {n_inputs} input CSV(s), got {len(inputs)}")
    frames = [load_csv(p) for p in inputs]
    fig = plt.figure(figsize=size)
    try:
        fn(frames, [str(p) for p in inputs], fig)
        fig.tight_layout()
        fig.savefig(out_path, dpi=DPI)
    finally:
        plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qosched-figures", description=__doc__)
    parser.add_argument("--family", required=True, choices=sorted(FAMILIES))
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True, help="input CSV (repeatable)"
    )
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(args.family, args.inputs, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
