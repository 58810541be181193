#!/usr/bin/env python3
"""Regenerate figures/sample_data from reduced-horizon preset runs.

The figures package ships small sample CSVs so its tests and demos run
without a full simulation. This script documents exactly how they were
produced; rerunning it reproduces them byte for byte.
"""

import shutil
import tempfile
from pathlib import Path

from qosched.presets import run_preset

SEED = 7
HORIZON = 5000
ROOT = Path(__file__).resolve().parent.parent
SAMPLE_DIR = ROOT / "figures" / "sample_data"

# preset -> files to ship (relative to the preset output directory)
KEEP = {
    "zeta_sweep": ["aggregate.csv"],
    "policy_compare_v_sweep": ["aggregate.csv"],
    "isolation_bursty": ["aggregate.csv"],
    "join_leave": ["aggregate.csv", "pi_hat/run.csv", "pi_static/run.csv"],
    "feedback_delay_sweep": ["aggregate.csv"],
    "feedback_snapshot": [
        "aggregate.csv",
        "d_0000/run.csv",
        "d_0050/run.csv",
        "d_0500/run.csv",
    ],
}


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        for preset, files in KEEP.items():
            base = run_preset(preset, tmp, seed=SEED, horizon=HORIZON)
            for rel in files:
                dst = SAMPLE_DIR / preset / rel
                dst.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(base / rel, dst)
                print(f"wrote {dst.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
