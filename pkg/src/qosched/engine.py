"""Slotted simulation loop.

Per slot, in order: membership changes, channel draw, arrivals (closed-loop
sources first fold in any feedback due this slot), policy decision, service
from the queue head, drops per the configured discipline, admission of the
slot's arrivals, virtual/persistent queue updates using the *decided*
quantities, feedback emission, then metric recording and bound checks.

Packets admitted in slot t are servable from slot t+1, so the minimum wait
is one slot. Cumulative averages reset whenever a flow joins or leaves.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .arrivals import AimdSource, AimdSourceSpec, sample_bursty
from .bounds import BoundSet, compute_bounds
from .model import (
    FlowConfig,
    FlowState,
    ScenarioSpec,
    SlotDecision,
    validate_scenario,
)
from .policies import FlowSnapshot, PolicyInput, step_policy

SCHEMA_VERSION = 1


class BoundViolation(RuntimeError):
    """Raised in strict mode when a proved bound fails at runtime."""


def update_data_queue(q: int, served_actual: int, dropped_actual: int, a_t: int) -> int:
    """Backlog after one slot: realized service and drops out, arrivals in."""
    return q - served_actual - dropped_actual + a_t


def update_virtual_queue(y: float, alpha: float, s_t: int, s_i: int) -> float:
    """Service-share debt: grows by the guaranteed share, shrinks by the
    decided allocation, clamped at zero."""
    return max(y + alpha * s_t - s_i, 0.0)


def update_persistent_queue(
    z: float, zeta: float, alpha: float, s_t: int, indicator: int, s_i: int, d_i: int
) -> float:
    """Unserved-backlog pressure: grows while the flow is backlogged but
    unserved, shrinks with decided service and drops, clamped at zero."""
    return max(z + zeta * (alpha * s_t * indicator - s_i - d_i), 0.0)


@dataclass
class Violation:
    slot: int
    flow_id: int | None
    bound: str
    value: float
    limit: float

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "flow_id": self.flow_id,
            "bound": self.bound,
            "value": self.value,
            "limit": self.limit,
        }


def check_invariants(
    state: FlowState,
    config: FlowConfig,
    policy: str,
    bound_set: BoundSet,
    slot: int,
) -> list[Violation]:
    """Compare one flow's state against its proved bounds.

    Bounds whose inputs are unknown (e.g. unbounded arrivals) are skipped.
    The flow-isolating policy additionally requires z == 0; its y process
    carries no proved bound, so y is only checked for the dynamic policies.
    """
    out: list[Violation] = []
    q = len(state.queue)
    zeta = config.zeta
    if bound_set.q_bound is not None and q > bound_set.q_bound:
        out.append(Violation(slot, config.id, "q_bound", q, bound_set.q_bound))
    if policy == "pi_static":
        if state.z != 0.0:
            out.append(Violation(slot, config.id, "z_zero_pi_static", state.z, 0.0))
        return out
    if state.z > bound_set.z_bound:
        out.append(Violation(slot, config.id, "z_bound", state.z, bound_set.z_bound))
    if bound_set.qz_bound is not None and zeta * state.z + q > bound_set.qz_bound:
        out.append(
            Violation(slot, config.id, "qz_bound", zeta * state.z + q, bound_set.qz_bound)
        )
    if bound_set.y_bound is not None and state.y > bound_set.y_bound:
        out.append(Violation(slot, config.id, "y_bound", state.y, bound_set.y_bound))
    return out


@dataclass
class FlowEpochMetrics:
    """Per-flow averages over one epoch (interval between membership events)."""

    slots: int = 0
    arrivals: int = 0
    served: int = 0
    drop_decisions: int = 0
    dropped: int = 0
    q_sum: float = 0.0
    q_sqsum: float = 0.0
    lam_sum: float = 0.0
    max_wait: int = 0
    wait_sum: int = 0
    wait_count: int = 0
    wait_hist: dict[int, int] = field(default_factory=dict)

    def record_waits(self, runs: list[tuple[int, int]], t: int) -> None:
        for arrival_slot, n in runs:
            wait = t - arrival_slot
            self.wait_hist[wait] = self.wait_hist.get(wait, 0) + n
            self.wait_sum += wait * n
            self.wait_count += n
            if wait > self.max_wait:
                self.max_wait = wait

    def to_dict(self, weight: float) -> dict:
        slots = max(self.slots, 1)
        mean_q = self.q_sum / slots
        var_q = max(self.q_sqsum / slots - mean_q * mean_q, 0.0)
        return {
            "slots": self.slots,
            "arrival_avg": self.arrivals / slots,
            "served_avg": self.served / slots,
            "drop_decision_avg": self.drop_decisions / slots,
            "drop_actual_avg": self.dropped / slots,
            "wdrop_decision_avg": weight * self.drop_decisions / slots,
            "wdrop_actual_avg": weight * self.dropped / slots,
            "q_mean": mean_q,
            "q_std": math.sqrt(var_q),
            "lam_avg": self.lam_sum / slots,
            "max_wait": self.max_wait,
            "mean_wait": self.wait_sum / self.wait_count if self.wait_count else 0.0,
            "wait_hist": {str(k): v for k, v in sorted(self.wait_hist.items())},
        }


@dataclass
class EpochReport:
    start: int
    end: int
    flow_ids: list[int]
    per_flow: dict[int, dict]
    wdrop_decision_avg: float
    wdrop_actual_avg: float


@dataclass
class MetricsReport:
    """Summaries of one run: per-epoch averages, terminal state, totals,
    theoretical bounds, and any bound violations observed."""

    spec: ScenarioSpec
    epochs: list[EpochReport]
    y_final: dict[int, float]
    y_over_t: dict[int, float]
    z_final: dict[int, float]
    final_queue: dict[int, int]
    totals: dict[int, dict]
    abandoned: dict[int, int]
    violations: list[Violation]
    bound_checks_skipped: dict[int, list[str]]
    theoretical_bounds: dict[int, dict]
    runtime_seconds: float = 0.0

    def epoch_for(self, flow_id: int, index: int) -> dict:
        return self.epochs[index].per_flow[flow_id]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "policy": self.spec.policy,
            "horizon": self.spec.horizon,
            "seed": self.spec.seed,
            "feedback_delay": self.spec.feedback_delay,
            "epochs": [
                {
                    "start": e.start,
                    "end": e.end,
                    "flows": e.flow_ids,
                    "wdrop_decision_avg": e.wdrop_decision_avg,
                    "wdrop_actual_avg": e.wdrop_actual_avg,
                    "per_flow": {str(k): v for k, v in e.per_flow.items()},
                }
                for e in self.epochs
            ],
            "y_final": {str(k): v for k, v in self.y_final.items()},
            "y_over_t": {str(k): v for k, v in self.y_over_t.items()},
            "z_final": {str(k): v for k, v in self.z_final.items()},
            "final_queue": {str(k): v for k, v in self.final_queue.items()},
            "totals": {str(k): v for k, v in self.totals.items()},
            "abandoned": {str(k): v for k, v in self.abandoned.items()},
            "violations": [v.to_dict() for v in self.violations],
            "bound_checks_skipped": {
                str(k): v for k, v in self.bound_checks_skipped.items()
            },
            # runtime_seconds stays off the wire so outputs are byte-stable
            "theoretical_bounds": {
                str(k): v for k, v in self.theoretical_bounds.items()
            },
        }


class SlotTraceArrays:
    """Full per-slot trace, one row per slot, flows in spec order."""

    INT_FIELDS = ("a", "s_alloc", "d_drop", "served", "dropped", "q")
    FLOAT_FIELDS = ("y", "z", "lam", "cum_arr", "cum_served")

    def __init__(self, horizon: int, flow_ids: list[int]):
        self.horizon = horizon
        self.flow_ids = flow_ids
        self.t = np.arange(1, horizon + 1, dtype=np.int64)
        self.s_t = np.zeros(horizon, dtype=np.int64)
        self.present = {
            fid: np.zeros(horizon, dtype=np.int64) for fid in flow_ids
        }
        for name in self.INT_FIELDS:
            setattr(
                self,
                name,
                {fid: np.zeros(horizon, dtype=np.int64) for fid in flow_ids},
            )
        for name in self.FLOAT_FIELDS:
            setattr(
                self,
                name,
                {fid: np.zeros(horizon, dtype=np.float64) for fid in flow_ids},
            )
        self.cum_wdrop_dec = np.zeros(horizon, dtype=np.float64)
        self.cum_wdrop_act = np.zeros(horizon, dtype=np.float64)

    def header(self) -> list[str]:
        cols = ["t", "s_t"]
        for fid in self.flow_ids:
            cols += [
                f"present_{fid}",
                f"a_{fid}",
                f"s_alloc_{fid}",
                f"d_drop_{fid}",
                f"served_{fid}",
                f"dropped_{fid}",
                f"q_{fid}",
                f"y_{fid}",
                f"z_{fid}",
                f"lambda_{fid}",
                f"cum_arr_avg_{fid}",
                f"cum_served_avg_{fid}",
            ]
        cols += ["cum_wdrop_decision_avg", "cum_wdrop_actual_avg"]
        return cols

    def row(self, i: int) -> list:
        out: list = [int(self.t[i]), int(self.s_t[i])]
        for fid in self.flow_ids:
            out += [
                int(self.present[fid][i]),
                int(self.a[fid][i]),
                int(self.s_alloc[fid][i]),
                int(self.d_drop[fid][i]),
                int(self.served[fid][i]),
                int(self.dropped[fid][i]),
                int(self.q[fid][i]),
                float(self.y[fid][i]),
                float(self.z[fid][i]),
                float(self.lam[fid][i]),
                float(self.cum_arr[fid][i]),
                float(self.cum_served[fid][i]),
            ]
        out += [float(self.cum_wdrop_dec[i]), float(self.cum_wdrop_act[i])]
        return out

    def write_csv(self, path, thin: int = 1) -> None:
        """One row per recorded slot; ``thin`` keeps every k-th slot."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for i in range(0, self.horizon, thin):
                writer.writerow(self.row(i))


@dataclass
class RunResult:
    report: MetricsReport
    trace: SlotTraceArrays | None


class _FlowRuntime:
    __slots__ = (
        "cfg",
        "state",
        "rng",
        "aimd",
        "active",
        "epoch",
        "total_arrivals",
        "total_served",
        "total_dropped",
        "abandoned",
        "a_t",
    )

    def __init__(self, cfg: FlowConfig, seed: int, feedback_delay: int):
        self.cfg = cfg
        self.state = FlowState()
        self.rng = np.random.default_rng([seed, cfg.id])
        self.aimd = (
            AimdSource(cfg.source, feedback_delay)
            if isinstance(cfg.source, AimdSourceSpec)
            else None
        )
        self.active = False
        self.epoch = FlowEpochMetrics()
        self.total_arrivals = 0
        self.total_served = 0
        self.total_dropped = 0
        self.abandoned = 0
        self.a_t = 0


def run(
    spec: ScenarioSpec,
    record_trace: bool = True,
    check_bounds: bool = True,
    strict: bool = False,
    max_logged_violations: int = 1000,
    slot_hook=None,
) -> RunResult:
    """Simulate ``spec`` for its whole horizon.

    Deterministic given the spec (including its seed). ``slot_hook(t, flows)``
    is a test-only callback invoked after each slot's state update, before
    bound checks. Strict mode raises BoundViolation on the first failed check.
    """
    import time as _time

    t0 = _time.monotonic()
    validate_scenario(spec)

    horizon = spec.horizon
    flow_ids = [f.id for f in spec.flows]
    flows = {f.id: _FlowRuntime(f, spec.seed, spec.feedback_delay) for f in spec.flows}
    channel_rng = np.random.default_rng([spec.seed, 0x5EED])

    # Membership events, precomputed: slot -> (joins, leaves).
    joins: dict[int, list[int]] = {}
    leaves: dict[int, list[int]] = {}
    for f in spec.flows:
        joins.setdefault(f.join_slot, []).append(f.id)
        if f.leave_slot is not None and f.leave_slot <= horizon:
            leaves.setdefault(f.leave_slot, []).append(f.id)

    # Per-flow bound values, fixed for the whole run.
    n = len(spec.flows)
    a_maxes = [f.effective_a_max() for f in spec.flows]
    max_a_max = None if any(a is None for a in a_maxes) else max(a_maxes)
    bound_sets: dict[int, BoundSet] = {}
    skipped: dict[int, list[str]] = {}
    for f in spec.flows:
        bs = compute_bounds(
            f, n, spec.channel.s_max, spec.channel.s_min, f.effective_a_max(), max_a_max
        )
        bound_sets[f.id] = bs
        not_applicable = []
        if bs.q_bound is None:
            not_applicable += ["q_bound", "qz_bound"]
        if bs.y_bound is None:
            not_applicable.append("y_bound")
        skipped[f.id] = not_applicable

    trace = SlotTraceArrays(horizon, flow_ids) if record_trace else None

    epochs: list[EpochReport] = []
    epoch_start = 1
    epoch_wdrop_dec = 0.0
    epoch_wdrop_act = 0.0
    violations: list[Violation] = []

    def close_epoch(end_slot: int) -> None:
        nonlocal epoch_wdrop_dec, epoch_wdrop_act
        if end_slot < epoch_start:
            return
        length = end_slot - epoch_start + 1
        present = [fid for fid in flow_ids if flows[fid].active]
        epochs.append(
            EpochReport(
                start=epoch_start,
                end=end_slot,
                flow_ids=present,
                per_flow={
                    fid: flows[fid].epoch.to_dict(flows[fid].cfg.weight)
                    for fid in present
                },
                wdrop_decision_avg=epoch_wdrop_dec / length,
                wdrop_actual_avg=epoch_wdrop_act / length,
            )
        )
        epoch_wdrop_dec = 0.0
        epoch_wdrop_act = 0.0

    for t in range(1, horizon + 1):
        # (0) membership changes define epoch boundaries; averaging restarts
        if t in joins or t in leaves:
            if t > 1:
                close_epoch(t - 1)
                epoch_start = t
            for fid in leaves.get(t, ()):  # leave before join, same slot
                fr = flows[fid]
                fr.abandoned += fr.state.queue.clear()
                fr.active = False
            for fid in joins.get(t, ()):
                flows[fid].active = True
            for fid in flow_ids:
                flows[fid].epoch = FlowEpochMetrics()

        present = [flows[fid] for fid in flow_ids if flows[fid].active]

        # (1) channel capacity for this slot
        s_t = spec.channel.capacity(t, channel_rng)

        # (2) arrivals; closed-loop sources apply feedback due this slot first
        for fr in present:
            if fr.aimd is not None:
                fr.aimd.advance(t)
                fr.state.lam = fr.aimd.lam
                fr.a_t = fr.aimd.sample(fr.rng)
            else:
                fr.a_t = sample_bursty(fr.cfg.source, fr.rng)

        # (3) policy decision on start-of-slot state
        snapshot = PolicyInput(
            tuple(
                FlowSnapshot(
                    config=fr.cfg,
                    q=len(fr.state.queue),
                    y=fr.state.y,
                    z=fr.state.z,
                    a_t=fr.a_t,
                )
                for fr in present
            ),
            s_t,
        )
        decision = step_policy(spec.policy, snapshot)
        assert sum(decision.s_alloc.values()) <= s_t

        for fr in present:
            fid = fr.cfg.id
            st = fr.state
            q_before = len(st.queue)
            indicator = 1 if q_before > 0 else 0
            alloc = decision.s_alloc[fid]
            drop_decision = decision.d_drop[fid]

            # (4) serve from the head; waits measured on served packets only
            served_runs = st.queue.take_head(min(q_before, alloc))
            served = sum(c for _, c in served_runs)
            fr.epoch.record_waits(served_runs, t)

            # (5) drop from the surplus backlog per the configured discipline
            droppable = q_before - served
            dropped = min(droppable, drop_decision)
            if dropped > 0:
                if spec.drop_discipline == "head":
                    st.queue.take_head(dropped)
                else:
                    st.queue.take_tail(dropped)

            # (6) admit this slot's arrivals
            st.queue.append(t, fr.a_t)

            # (7) bookkeeping queues use the decided quantities
            st.y = update_virtual_queue(st.y, fr.cfg.alpha, s_t, alloc)
            st.z = update_persistent_queue(
                st.z, fr.cfg.zeta, fr.cfg.alpha, s_t, indicator, alloc, drop_decision
            )

            # (8) feedback to closed-loop sources
            if fr.aimd is not None:
                if fr.cfg.source.nack_granularity == "packet":
                    nacks = dropped
                else:
                    nacks = 1 if drop_decision > 0 else 0
                if served or nacks:
                    fr.aimd.feedback.push(t, served, nacks)

            # (9) metrics
            w = fr.cfg.weight
            em = fr.epoch
            em.slots += 1
            em.arrivals += fr.a_t
            em.served += served
            em.drop_decisions += drop_decision
            em.dropped += dropped
            q_after = len(st.queue)
            em.q_sum += q_after
            em.q_sqsum += q_after * q_after
            em.lam_sum += st.lam
            epoch_wdrop_dec += w * drop_decision
            epoch_wdrop_act += w * dropped
            fr.total_arrivals += fr.a_t
            fr.total_served += served
            fr.total_dropped += dropped

            if trace is not None:
                i = t - 1
                trace.present[fid][i] = 1
                trace.a[fid][i] = fr.a_t
                trace.s_alloc[fid][i] = alloc
                trace.d_drop[fid][i] = drop_decision
                trace.served[fid][i] = served
                trace.dropped[fid][i] = dropped
                trace.q[fid][i] = q_after
                trace.y[fid][i] = st.y
                trace.z[fid][i] = st.z
                trace.lam[fid][i] = st.lam if fr.aimd is not None else 0.0
                denom = t - epoch_start + 1
                trace.cum_arr[fid][i] = em.arrivals / denom
                trace.cum_served[fid][i] = em.served / denom

        if trace is not None:
            i = t - 1
            trace.s_t[i] = s_t
            denom = t - epoch_start + 1
            trace.cum_wdrop_dec[i] = epoch_wdrop_dec / denom
            trace.cum_wdrop_act[i] = epoch_wdrop_act / denom

        if slot_hook is not None:
            slot_hook(t, flows)

        if check_bounds:
            for fr in present:
                found = check_invariants(
                    fr.state, fr.cfg, spec.policy, bound_sets[fr.cfg.id], t
                )
                if found:
                    if strict:
                        v = found[0]
                        raise BoundViolation(
                            f"slot {v.slot} flow {v.flow_id}: {v.bound} "
                            f"value {v.value} exceeds {v.limit}"
                        )
                    if len(violations) < max_logged_violations:
                        violations.extend(found)

    close_epoch(horizon)

    report = MetricsReport(
        spec=spec,
        epochs=epochs,
        y_final={fid: flows[fid].state.y for fid in flow_ids},
        y_over_t={fid: flows[fid].state.y / horizon for fid in flow_ids},
        z_final={fid: flows[fid].state.z for fid in flow_ids},
        final_queue={fid: len(flows[fid].state.queue) for fid in flow_ids},
        totals={
            fid: {
                "arrivals": flows[fid].total_arrivals,
                "served": flows[fid].total_served,
                "dropped": flows[fid].total_dropped,
            }
            for fid in flow_ids
        },
        abandoned={fid: flows[fid].abandoned for fid in flow_ids},
        violations=violations,
        bound_checks_skipped=skipped,
        theoretical_bounds={fid: bound_sets[fid].to_dict() for fid in flow_ids},
        runtime_seconds=_time.monotonic() - t0,
    )
    return RunResult(report=report, trace=trace)
