"""Preset experiments.

Each preset expands into a list of fully specified scenarios (sweep points).
Defaults mirror the base setup used throughout: constant capacity 50
packets/slot, horizon 1e5 slots, weight 1 and zeta 1 for every flow, with
the preset overriding whatever it sweeps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .arrivals import AimdSourceSpec, BurstySourceSpec
from .engine import RunResult, run
from .model import ChannelModel, FlowConfig, ScenarioSpec

DEFAULT_HORIZON = 10**5
DEFAULT_CAPACITY = 50
DEFAULT_V = 1000.0

PRESET_NAMES = (
    "zeta_sweep",
    "policy_compare_v_sweep",
    "isolation_bursty",
    "join_leave",
    "feedback_delay_sweep",
    "feedback_snapshot",
)

# V grid for the policy comparison; the low end is where the policies differ
# most, the high end shows convergence.
V_GRID = (50, 100, 150, 200, 400, 700, 1000)
ZETA_GRID = (1, 4, 7, 10, 13, 16, 19, 22, 25, 28, 31)
DELAY_GRID = (0, 25, 50, 100, 200, 350, 500)
SNAPSHOT_DELAYS = (0, 50, 500)

# Flow join/leave pattern used by the dynamic presets: the first flow runs
# alone for 3e4 slots, the second joins at 3e4, the first leaves at 7e4.
JOIN_SLOT = 3 * 10**4
LEAVE_SLOT = 7 * 10**4


@dataclass(frozen=True)
class PresetPoint:
    label: str
    keys: dict
    spec: ScenarioSpec
    thin: int


def _channel() -> ChannelModel:
    return ChannelModel.constant(DEFAULT_CAPACITY)


def _bursty_flows(params, v_param: float, zeta: float = 1.0, drop_cap=None):
    """params: list of (alpha, (eta, lam, nu))."""
    return tuple(
        FlowConfig(
            id=i,
            alpha=alpha,
            source=BurstySourceSpec(eta, lam, nu),
            zeta=zeta,
            v_param=v_param,
            drop_cap=drop_cap,
        )
        for i, (alpha, (eta, lam, nu)) in enumerate(params)
    )


def table1_row(row: int, v_param: float, zeta: float = 1.0, eta: int = 1, drop_cap=None):
    """The three service-requirement / arrival-process combinations."""
    if row == 1:
        params = [(0.2, (1, 10.0, 300)), (0.8, (1, 40.0, 300))]
    elif row == 2:
        params = [(0.2, (1, 30.0, 300)), (0.4, (1, 70.0, 300))]
    elif row == 3:
        params = [
            (0.2, (eta, 10.0 / eta, 300 // eta)),
            (0.6, (eta, 30.0 / eta, 300 // eta)),
        ]
    else:
        raise ValueError(f"unknown combination {row}")
    return _bursty_flows(params, v_param, zeta, drop_cap)


def _dynamic_flows(source_for, v_param: float, horizon: int):
    """Two flows with the join/leave pattern, scaled to the horizon."""
    join = min(JOIN_SLOT, max(1, horizon // 3))
    leave = min(LEAVE_SLOT, max(join + 1, (horizon * 7) // 10))
    return (
        FlowConfig(id=0, alpha=0.2, source=source_for(0), v_param=v_param, leave_slot=leave),
        FlowConfig(id=1, alpha=0.6, source=source_for(1), v_param=v_param, join_slot=join),
    )


def build_preset(name: str, seed: int = 0, horizon: int | None = None) -> list[PresetPoint]:
    T = horizon if horizon is not None else DEFAULT_HORIZON
    ch = _channel()
    points: list[PresetPoint] = []

    if name == "zeta_sweep":
        for z in ZETA_GRID:
            spec = ScenarioSpec(
                flows=table1_row(1, DEFAULT_V, zeta=float(z)),
                channel=ch,
                policy="pi_hat",
                horizon=T,
                seed=seed,
            )
            points.append(PresetPoint(f"zeta_{z:02d}", {"zeta": z}, spec, thin=100))
    elif name == "policy_compare_v_sweep":
        for policy in ("pi_bar", "pi_hat"):
            cap = 300 if policy == "pi_bar" else None
            for v in V_GRID:
                spec = ScenarioSpec(
                    flows=table1_row(2, float(v), drop_cap=cap),
                    channel=ch,
                    policy=policy,
                    horizon=T,
                    seed=seed,
                )
                points.append(
                    PresetPoint(f"{policy}_v_{v:04d}", {"policy": policy, "v": v}, spec, thin=100)
                )
    elif name == "isolation_bursty":
        for policy in ("pi_hat", "pi_static"):
            for eta in (1, 10):
                spec = ScenarioSpec(
                    flows=table1_row(3, DEFAULT_V, eta=eta),
                    channel=ch,
                    policy=policy,
                    horizon=T,
                    seed=seed,
                )
                points.append(
                    PresetPoint(
                        f"{policy}_eta_{eta:02d}", {"policy": policy, "eta": eta}, spec, thin=100
                    )
                )
    elif name == "join_leave":
        def bursty(_i):
            return BurstySourceSpec(1, 20.0, 300)

        for policy in ("pi_hat", "pi_static"):
            spec = ScenarioSpec(
                flows=_dynamic_flows(bursty, DEFAULT_V, T),
                channel=ch,
                policy=policy,
                horizon=T,
                seed=seed,
            )
            points.append(PresetPoint(policy, {"policy": policy}, spec, thin=10))
    elif name == "feedback_delay_sweep":
        def aimd(_i):
            return AimdSourceSpec()

        for policy in ("pi_hat", "pi_static"):
            for d in DELAY_GRID:
                spec = ScenarioSpec(
                    flows=_dynamic_flows(aimd, DEFAULT_V, T),
                    channel=ch,
                    policy=policy,
                    horizon=T,
                    feedback_delay=d,
                    seed=seed,
                )
                points.append(
                    PresetPoint(f"{policy}_d_{d:04d}", {"policy": policy, "d": d}, spec, thin=100)
                )
    elif name == "feedback_snapshot":
        def aimd(_i):
            return AimdSourceSpec()

        for d in SNAPSHOT_DELAYS:
            spec = ScenarioSpec(
                flows=_dynamic_flows(aimd, DEFAULT_V, T),
                channel=ch,
                policy="pi_hat",
                horizon=T,
                feedback_delay=d,
                seed=seed,
            )
            points.append(PresetPoint(f"d_{d:04d}", {"d": d}, spec, thin=1))
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")

    return points


def aggregate_header(points: list[PresetPoint]) -> list[str]:
    key_cols = list(points[0].keys)
    flow_ids = [f.id for f in points[0].spec.flows]
    cols = key_cols + ["seed", "epoch_index", "epoch_start", "epoch_end"]
    cols += ["wdrop_decision_avg", "wdrop_actual_avg"]
    for fid in flow_ids:
        cols += [
            f"f{fid}_arrival_avg",
            f"f{fid}_served_avg",
            f"f{fid}_wdrop_decision_avg",
            f"f{fid}_wdrop_actual_avg",
            f"f{fid}_q_mean",
            f"f{fid}_q_std",
            f"f{fid}_max_wait",
            f"f{fid}_mean_wait",
            f"f{fid}_lam_avg",
            f"f{fid}_y_over_t",
        ]
    return cols


def aggregate_rows(point: PresetPoint, result: RunResult) -> list[list]:
    """One aggregate row per epoch of the run."""
    report = result.report
    flow_ids = [f.id for f in point.spec.flows]
    rows = []
    for idx, epoch in enumerate(report.epochs):
        row: list = [point.keys[k] for k in point.keys]
        row += [point.spec.seed, idx, epoch.start, epoch.end]
        row += [epoch.wdrop_decision_avg, epoch.wdrop_actual_avg]
        for fid in flow_ids:
            pf = epoch.per_flow.get(fid)
            if pf is None:
                row += [""] * 10
            else:
                row += [
                    pf["arrival_avg"],
                    pf["served_avg"],
                    pf["wdrop_decision_avg"],
                    pf["wdrop_actual_avg"],
                    pf["q_mean"],
                    pf["q_std"],
                    pf["max_wait"],
                    pf["mean_wait"],
                    pf["lam_avg"],
                    report.y_over_t[fid],
                ]
        rows.append(row)
    return rows


def run_preset(
    name: str,
    out_dir,
    seed: int = 0,
    horizon: int | None = None,
    thin: int | None = None,
) -> Path:
    """Run every point of a preset; returns the preset output directory.

    Writes ``<out>/<name>/<point>/run.csv`` and ``summary.json`` per point,
    plus ``<out>/<name>/aggregate.csv`` keyed by the swept parameters.
    Points execute sequentially so outputs are byte-stable for a seed.
    """
    import json

    points = build_preset(name, seed=seed, horizon=horizon)
    base = Path(out_dir) / name
    base.mkdir(parents=True, exist_ok=True)

    agg_rows: list[list] = []
    for point in points:
        result = run(point.spec)
        point_dir = base / point.label
        point_dir.mkdir(parents=True, exist_ok=True)
        result.trace.write_csv(point_dir / "run.csv", thin=thin or point.thin)
        with open(point_dir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(result.report.to_dict(), fh, indent=2)
            fh.write("\n")
        agg_rows.extend(aggregate_rows(point, result))

    with open(base / "aggregate.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(aggregate_header(points))
        writer.writerows(agg_rows)
    return base
