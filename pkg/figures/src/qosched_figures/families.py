"""One renderer per figure family.

Each renderer takes the DataFrames loaded from the preset's CSV outputs and
draws onto a fresh matplotlib figure. Renderers only read the documented
columns; anything missing is reported as a schema error naming the column.
"""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

from .schema import SchemaError, require

FLOW_COL = re.compile(r"^f(\d+)_")
TRACE_FLOW_COL = re.compile(r"^q_(\d+)$")


def agg_flow_ids(df: pd.DataFrame) -> list[int]:
    return sorted({int(m.group(1)) for c in df.columns if (m := FLOW_COL.match(c))})


def trace_flow_ids(df: pd.DataFrame) -> list[int]:
    return sorted({int(m.group(1)) for c in df.columns if (m := TRACE_FLOW_COL.match(c))})


def _label_from_path(path) -> str:
    return Path(path).parent.name or Path(path).stem


def render_zeta_sweep(frames, paths, fig):
    (df,) = frames
    require(df, ["zeta", "wdrop_decision_avg", "wdrop_actual_avg"], paths[0])
    flows = agg_flow_ids(df)
    axes = fig.subplots(1, 3)
    for fid in flows:
        require(df, [f"f{fid}_served_avg", f"f{fid}_max_wait"], paths[0])
        axes[0].plot(df["zeta"], df[f"f{fid}_served_avg"], marker="o", label=f"flow {fid}")
        axes[1].plot(df["zeta"], df[f"f{fid}_max_wait"], marker="o", label=f"flow {fid}")
        axes[2].plot(
            df["zeta"], df[f"f{fid}_wdrop_actual_avg"], marker="o", label=f"flow {fid}"
        )
    axes[2].plot(df["zeta"], df["wdrop_actual_avg"], marker="s", color="k", label="total")
    axes[0].set_ylabel("average service rate (pkts/slot)")
    axes[1].set_ylabel("max wait (slots)")
    axes[2].set_ylabel("weighted time-avg drops")
    for ax in axes:
        ax.set_xlabel("zeta")
        ax.legend()


def _per_policy(df):
    for policy, group in df.groupby("policy", sort=True):
        yield policy, group.sort_values(group.columns[1])


def render_v_sweep_drops(frames, paths, fig):
    (df,) = frames
    require(df, ["policy", "v", "wdrop_decision_avg", "wdrop_actual_avg"], paths[0])
    axes = fig.subplots(1, 2)
    for policy, group in df.groupby("policy", sort=True):
        g = group.sort_values("v")
        axes[0].plot(g["v"], g["wdrop_decision_avg"], marker="o", label=policy)
        axes[1].plot(g["v"], g["wdrop_actual_avg"], marker="o", label=policy)
    axes[0].set_ylabel("weighted time-avg drop decisions")
    axes[1].set_ylabel("weighted time-avg actual drops")
    for ax in axes:
        ax.set_xlabel("V")
        ax.legend()


def render_wait_time(frames, paths, fig):
    (df,) = frames
    require(df, ["policy", "v"], paths[0])
    flows = agg_flow_ids(df)
    axes = fig.subplots(1, max(len(flows), 1), squeeze=False)[0]
    for ax, fid in zip(axes, flows):
        col = f"f{fid}_max_wait"
        require(df, [col], paths[0])
        for policy, group in df.groupby("policy", sort=True):
            g = group.sort_values("v")
            ax.plot(g["v"], g[col], marker="o", label=policy)
        ax.set_xlabel("V")
        ax.set_ylabel(f"flow {fid} max wait (slots)")
        ax.legend()


def render_isolation_bursty(frames, paths, fig):
    (df,) = frames
    require(df, ["policy", "eta", "wdrop_actual_avg"], paths[0])
    flows = agg_flow_ids(df)
    axes = fig.subplots(1, 1 + len(flows), squeeze=False)[0]
    etas = sorted(df["eta"].unique())
    width = 0.35
    for k, (policy, group) in enumerate(df.groupby("policy", sort=True)):
        g = group.set_index("eta").loc[etas]
        xs = [i + (k - 0.5) * width for i in range(len(etas))]
        axes[0].bar(xs, g["wdrop_actual_avg"], width=width, label=policy)
        for ax, fid in zip(axes[1:], flows):
            ax.plot(etas, g[f"f{fid}_max_wait"], marker="o", label=policy)
    axes[0].set_xticks(range(len(etas)), [str(e) for e in etas])
    axes[0].set_xlabel("burst size eta")
    axes[0].set_ylabel("weighted time-avg drops")
    for ax, fid in zip(axes[1:], flows):
        ax.set_xlabel("burst size eta")
        ax.set_ylabel(f"flow {fid} max wait (slots)")
    for ax in axes:
        ax.legend()


def render_join_leave_service(frames, paths, fig):
    ax = fig.subplots()
    for df, path in zip(frames, paths):
        require(df, ["t"], path)
        label = _label_from_path(path)
        for fid in trace_flow_ids(df):
            require(df, [f"cum_served_avg_{fid}", f"present_{fid}"], path)
            present = df[df[f"present_{fid}"] == 1]
            ax.plot(
                present["t"],
                present[f"cum_served_avg_{fid}"],
                label=f"{label} flow {fid}",
            )
    ax.set_xlabel("slot")
    ax.set_ylabel("time-averaged service rate (pkts/slot)")
    ax.legend()


def _weighted_epoch_mean(group, cols):
    """Epoch-length-weighted mean of the summed per-flow columns."""
    lengths = group["epoch_end"] - group["epoch_start"] + 1
    total = group[cols].fillna(0.0).sum(axis=1)
    return float((total * lengths).sum() / lengths.sum())


def render_feedback_delay(frames, paths, fig):
    (df,) = frames
    require(df, ["policy", "d", "epoch_start", "epoch_end"], paths[0])
    flows = agg_flow_ids(df)
    drop_cols = [f"f{fid}_wdrop_actual_avg" for fid in flows]
    served_cols = [f"f{fid}_served_avg" for fid in flows]
    arrival_cols = [f"f{fid}_arrival_avg" for fid in flows]
    require(df, drop_cols + served_cols + arrival_cols, paths[0])
    axes = fig.subplots(1, 3)
    for policy, group in df.groupby("policy", sort=True):
        rows = []
        for d, by_d in group.groupby("d", sort=True):
            rows.append(
                (
                    d,
                    _weighted_epoch_mean(by_d, drop_cols),
                    _weighted_epoch_mean(by_d, served_cols),
                    _weighted_epoch_mean(by_d, arrival_cols),
                )
            )
        ds, drops, served, arrivals = zip(*rows)
        axes[0].plot(ds, drops, marker="o", label=policy)
        axes[1].plot(ds, served, marker="o", label=policy)
        axes[2].plot(ds, arrivals, marker="o", label=policy)
    axes[0].set_ylabel("avg drop rate (pkts/slot)")
    axes[1].set_ylabel("avg packets served (pkts/slot)")
    axes[2].set_ylabel("avg arrival rate (pkts/slot)")
    for ax in axes:
        ax.set_xlabel("feedback delay d (slots)")
        ax.legend()


def _snapshot_window(df, fid: int, width: int = 2000) -> pd.DataFrame:
    """A window from the middle of the multi-flow phase (whole run if none)."""
    ids = trace_flow_ids(df)
    mask = None
    for other in ids:
        col = df[f"present_{other}"] == 1
        mask = col if mask is None else (mask & col)
    region = df[mask] if mask is not None and mask.any() else df
    if len(region) > width:
        start = (len(region) - width) // 2
        region = region.iloc[start : start + width]
    return region


def render_feedback_snapshot(frames, paths, fig):
    axes = fig.subplots(len(frames), 3, squeeze=False)
    for row, (df, path) in enumerate(zip(frames, paths)):
        require(df, ["t"], path)
        fid = trace_flow_ids(df)[0]
        require(df, [f"a_{fid}", f"dropped_{fid}", f"served_{fid}"], path)
        window = _snapshot_window(df, fid)
        label = _label_from_path(path)
        for col_idx, (col, name) in enumerate(
            [(f"a_{fid}", "arrivals"), (f"dropped_{fid}", "drops"), (f"served_{fid}", "served")]
        ):
            ax = axes[row][col_idx]
            ax.plot(window["t"], window[col], linewidth=0.6)
            ax.set_ylabel(f"{label}: {name}")
            ax.set_xlabel("slot")


FAMILIES = {
    "zeta_sweep": (render_zeta_sweep, 1, (15, 4)),
    "v_sweep_drops": (render_v_sweep_drops, 1, (10, 4)),
    "wait_time": (render_wait_time, 1, (10, 4)),
    "isolation_bursty": (render_isolation_bursty, 1, (15, 4)),
    "join_leave_service": (render_join_leave_service, 2, (8, 5)),
    "feedback_delay": (render_feedback_delay, 1, (15, 4)),
    "feedback_snapshot": (render_feedback_snapshot, 3, (13, 9)),
}
