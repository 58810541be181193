#!/usr/bin/env python3
"""Run every preset at full horizon and render all figure families.

Produces the complete set of experiment CSVs under results/ (several
minutes of compute), then, if qosched-figures is installed, one image per
family under results/figures/.
"""

import argparse
import sys
from pathlib import Path

from qosched.presets import PRESET_NAMES, run_preset

FAMILY_INPUTS = {
    "zeta_sweep": ["zeta_sweep/aggregate.csv"],
    "v_sweep_drops": ["policy_compare_v_sweep/aggregate.csv"],
    "wait_time": ["policy_compare_v_sweep/aggregate.csv"],
    "isolation_bursty": ["isolation_bursty/aggregate.csv"],
    "join_leave_service": ["join_leave/pi_hat/run.csv", "join_leave/pi_static/run.csv"],
    "feedback_delay": ["feedback_delay_sweep/aggregate.csv"],
    "feedback_snapshot": [
        "feedback_snapshot/d_0000/run.csv",
        "feedback_snapshot/d_0050/run.csv",
        "feedback_snapshot/d_0500/run.csv",
    ],
}


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--horizon", type=int, default=None)
    args = parser.parse_args()

    out = Path(args.out)
    for name in PRESET_NAMES:
        print(f"running preset {name} ...")
        run_preset(name, out, seed=args.seed, horizon=args.horizon)

    try:
        from qosched_figures.render import render
    except ImportError:
        print("qosched-figures not installed; skipping figure rendering")
        return 0

    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    for family, inputs in FAMILY_INPUTS.items():
        render(family, [out / rel for rel in inputs], fig_dir / f"{family}.png")
        print(f"rendered {fig_dir / (family + '.png')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
