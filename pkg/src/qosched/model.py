"""Domain types shared across the simulator.

A scenario describes a set of flows served by one base station. Per slot the
station observes a service capacity ``S(t)``, admits packet arrivals into
per-flow FIFO queues, and decides how much to serve and how much to drop.
Each flow additionally carries two pieces of bookkeeping state: a virtual
queue ``y`` whose rate stability enforces the guaranteed service-rate share
``alpha``, and a persistent queue ``z`` that grows while a backlogged flow
goes unserved and thereby forces bounded decision delay.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .arrivals import AimdSourceSpec, BurstySourceSpec, SourceSpec

POLICY_KINDS = ("pi_bar", "pi_hat", "pi_static")
DROP_DISCIPLINES = ("head", "tail")
CHANNEL_KINDS = ("constant", "sequence", "seeded-random")

# Slack absorbing IEEE-754 artifacts when alpha * S is an intended integer
# (e.g. 0.2 * 50): genuine fractions are far coarser than this.
_ROUND_EPS = 1e-9


def int_floor(x: float) -> int:
    """floor() that treats values within 1e-9 of an integer as that integer."""
    return math.floor(x + _ROUND_EPS)


def int_ceil(x: float) -> int:
    """ceil() that treats values within 1e-9 of an integer as that integer."""
    return math.ceil(x - _ROUND_EPS)


class ScenarioError(ValueError):
    """Base class for scenario validation failures."""


class AdmissionViolation(ScenarioError):
    """Aggregate guaranteed shares of concurrently present flows exceed 1."""


class MissingDropCap(ScenarioError):
    """Policy pi_bar requires a per-flow drop cap covering the worst slot."""


class InvalidParameter(ScenarioError):
    """A field is outside its allowed range."""


@dataclass(frozen=True)
class Packet:
    """One queued packet; only its arrival slot matters (wait accounting)."""

    arrival_slot: int


class PacketQueue:
    """FIFO packet backlog, run-length encoded as (arrival_slot, count) runs.

    Packets arriving in the same slot are indistinguishable, so a run per
    slot keeps per-slot work constant even under heavy traffic.
    """

    __slots__ = ("_runs", "_size")

    def __init__(self):
        self._runs: deque[list[int]] = deque()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def append(self, arrival_slot: int, count: int) -> None:
        if count <= 0:
            return
        if self._runs and self._runs[-1][0] == arrival_slot:
            self._runs[-1][1] += count
        else:
            self._runs.append([arrival_slot, count])
        self._size += count

    def take_head(self, count: int) -> list[tuple[int, int]]:
        """Remove up to ``count`` oldest packets; returns (slot, n) runs."""
        taken: list[tuple[int, int]] = []
        remaining = min(count, self._size)
        self._size -= remaining
        while remaining > 0:
            slot, n = self._runs[0]
            if n <= remaining:
                taken.append((slot, n))
                remaining -= n
                self._runs.popleft()
            else:
                taken.append((slot, remaining))
                self._runs[0][1] = n - remaining
                remaining = 0
        return taken

    def take_tail(self, count: int) -> list[tuple[int, int]]:
        """Remove up to ``count`` newest packets; returns (slot, n) runs."""
        taken: list[tuple[int, int]] = []
        remaining = min(count, self._size)
        self._size -= remaining
        while remaining > 0:
            slot, n = self._runs[-1]
            if n <= remaining:
                taken.append((slot, n))
                remaining -= n
                self._runs.pop()
            else:
                taken.append((slot, remaining))
                self._runs[-1][1] = n - remaining
                remaining = 0
        return taken

    def clear(self) -> int:
        """Discard everything; returns the number of packets discarded."""
        n = self._size
        self._runs.clear()
        self._size = 0
        return n

    def packets(self) -> Iterator[Packet]:
        for slot, n in self._runs:
            for _ in range(n):
                yield Packet(slot)


@dataclass
class FlowState:
    """Mutable per-flow runtime state."""

    queue: PacketQueue = field(default_factory=PacketQueue)
    y: float = 0.0  # virtual queue (service-share debt)
    z: float = 0.0  # persistent queue (unserved-backlog pressure)
    lam: float = 1.0  # closed-loop mean rate; unused for bursty sources


@dataclass(frozen=True)
class FlowConfig:
    """Immutable per-flow parameters.

    ``alpha`` is the guaranteed fraction of capacity, ``weight`` scales the
    flow's drop penalty, ``zeta`` trades worst-case delay against drop
    optimality, and ``v_param`` trades drops against queue length / delay.
    ``drop_cap`` is the fixed drop-decision magnitude used by policy pi_bar.
    The flow is present in slots [join_slot, leave_slot); ``leave_slot=None``
    means it stays to the end of the horizon.
    """

    id: int
    alpha: float
    source: SourceSpec
    weight: float = 1.0
    zeta: float = 1.0
    v_param: float = 0.0
    drop_cap: int | None = None
    a_max: int | None = None
    join_slot: int = 1
    leave_slot: int | None = None

    def effective_a_max(self) -> int | None:
        """Largest possible per-slot arrival count; None when unbounded."""
        if isinstance(self.source, BurstySourceSpec):
            return self.source.a_max
        return self.a_max

    def is_closed_loop(self) -> bool:
        return isinstance(self.source, AimdSourceSpec)


@dataclass(frozen=True)
class ChannelModel:
    """Per-slot service capacity process, bounded by [s_min, s_max]."""

    kind: str
    s_max: int
    s_min: int
    sequence: tuple[int, ...] | None = None

    @staticmethod
    def constant(value: int) -> "ChannelModel":
        return ChannelModel("constant", s_max=value, s_min=value)

    @staticmethod
    def from_sequence(values) -> "ChannelModel":
        values = tuple(int(v) for v in values)
        return ChannelModel(
            "sequence", s_max=max(values), s_min=min(values), sequence=values
        )

    @staticmethod
    def seeded_random(s_min: int, s_max: int) -> "ChannelModel":
        return ChannelModel("seeded-random", s_max=s_max, s_min=s_min)

    def capacity(self, t: int, rng: np.random.Generator) -> int:
        if self.kind == "constant":
            return self.s_max
        if self.kind == "sequence":
            return self.sequence[(t - 1) % len(self.sequence)]
        return int(rng.integers(self.s_min, self.s_max + 1))


@dataclass
class SlotDecision:
    """Per-flow outcome of one slot: decided allocation and drop magnitude,
    plus the realized served/dropped counts (capped by the actual backlog)."""

    s_alloc: int
    d_drop: int
    served_actual: int = 0
    dropped_actual: int = 0


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one simulation run."""

    flows: tuple[FlowConfig, ...]
    channel: ChannelModel
    policy: str
    horizon: int
    feedback_delay: int = 0
    seed: int = 0
    drop_discipline: str = "head"

    def flow_by_id(self, flow_id: int) -> FlowConfig:
        for f in self.flows:
            if f.id == flow_id:
                return f
        raise KeyError(flow_id)


def _flow_interval(flow: FlowConfig, horizon: int) -> tuple[int, int]:
    """Present-slot interval [join, leave) with leave defaulted past the end."""
    leave = flow.leave_slot if flow.leave_slot is not None else horizon + 1
    return flow.join_slot, leave


def scenario_errors(spec: ScenarioSpec) -> list[ScenarioError]:
    """Collect every validation failure in ``spec`` (empty list = valid)."""
    errors: list[ScenarioError] = []

    if spec.horizon < 1:
        errors.append(InvalidParameter(f"horizon must be >= 1, got {spec.horizon}"))
    if spec.policy not in POLICY_KINDS:
        errors.append(InvalidParameter(f"unknown policy {spec.policy!r}"))
    if spec.drop_discipline not in DROP_DISCIPLINES:
        errors.append(
            InvalidParameter(f"unknown drop discipline {spec.drop_discipline!r}")
        )
    if spec.feedback_delay < 0:
        errors.append(InvalidParameter("feedback_delay must be >= 0"))

    ch = spec.channel
    if ch.kind not in CHANNEL_KINDS:
        errors.append(InvalidParameter(f"unknown channel kind {ch.kind!r}"))
    if ch.s_max < 1 or ch.s_min < 0 or ch.s_min > ch.s_max:
        errors.append(
            InvalidParameter(f"channel bounds invalid: s_min={ch.s_min} s_max={ch.s_max}")
        )
    if ch.kind == "sequence":
        if not ch.sequence:
            errors.append(InvalidParameter("sequence channel needs values"))
        elif any(v < ch.s_min or v > ch.s_max for v in ch.sequence):
            errors.append(InvalidParameter("sequence values outside [s_min, s_max]"))
    if ch.kind == "constant" and ch.s_min != ch.s_max:
        errors.append(InvalidParameter("constant channel requires s_min == s_max"))

    seen_ids = set()
    for f in spec.flows:
        tag = f"flow {f.id}"
        if f.id in seen_ids:
            errors.append(InvalidParameter(f"duplicate flow id {f.id}"))
        seen_ids.add(f.id)
        if not 0.0 <= f.alpha <= 1.0:
            errors.append(InvalidParameter(f"{tag}: alpha must be in [0, 1]"))
        if not 0.0 <= f.weight <= 1.0:
            errors.append(InvalidParameter(f"{tag}: weight must be in [0, 1]"))
        if f.zeta <= 0.0:
            errors.append(InvalidParameter(f"{tag}: zeta must be > 0"))
        if f.v_param < 0.0:
            errors.append(InvalidParameter(f"{tag}: v_param must be >= 0"))
        if f.drop_cap is not None and f.drop_cap < 0:
            errors.append(InvalidParameter(f"{tag}: drop_cap must be >= 0"))
        if isinstance(f.source, BurstySourceSpec):
            src = f.source
            if src.eta < 1 or src.nu < 1 or src.lam < 0:
                errors.append(InvalidParameter(f"{tag}: bad bursty source {src}"))
            if f.a_max is not None and f.a_max != src.a_max:
                errors.append(
                    InvalidParameter(
                        f"{tag}: a_max={f.a_max} contradicts source bound {src.a_max}"
                    )
                )
        elif isinstance(f.source, AimdSourceSpec):
            if f.source.nack_granularity not in ("event", "packet"):
                errors.append(
                    InvalidParameter(f"{tag}: bad nack_granularity")
                )
            if f.a_max is not None:
                errors.append(
                    InvalidParameter(f"{tag}: closed-loop arrivals are unbounded; a_max must be omitted")
                )
        else:
            errors.append(InvalidParameter(f"{tag}: unknown source {f.source!r}"))
        join, leave = _flow_interval(f, spec.horizon)
        if join < 1 or join > spec.horizon:
            errors.append(InvalidParameter(f"{tag}: join_slot outside [1, horizon]"))
        if leave <= join or leave > spec.horizon + 1:
            errors.append(
                InvalidParameter(f"{tag}: leave_slot must be in (join_slot, horizon+1]")
            )

    if errors:
        return errors  # interval/admission checks assume well-formed fields

    # Admission: the guaranteed shares of concurrently present flows must
    # never sum above 1. Only membership-change slots need checking.
    events = sorted(
        {1, spec.horizon}
        | {s for f in spec.flows for s in _flow_interval(f, spec.horizon)}
    )
    for slot in events:
        if slot > spec.horizon:
            continue
        present = [
            f
            for f in spec.flows
            if _flow_interval(f, spec.horizon)[0] <= slot < _flow_interval(f, spec.horizon)[1]
        ]
        total = sum(f.alpha for f in present)
        if total > 1.0 + _ROUND_EPS:
            errors.append(
                AdmissionViolation(
                    f"sum(alpha) = {total:g} > 1 for flows "
                    f"{[f.id for f in present]} at slot {slot}"
                )
            )
            break

    if spec.policy == "pi_bar":
        for f in spec.flows:
            a_max = f.effective_a_max()
            if a_max is None:
                errors.append(
                    MissingDropCap(
                        f"flow {f.id}: pi_bar needs a bounded source (a_max unknown)"
                    )
                )
                continue
            required = max(a_max, int_ceil(f.alpha * spec.channel.s_max))
            if f.drop_cap is None:
                errors.append(
                    MissingDropCap(f"flow {f.id}: pi_bar requires drop_cap >= {required}")
                )
            elif f.drop_cap < required:
                errors.append(
                    MissingDropCap(
                        f"flow {f.id}: drop_cap={f.drop_cap} < required {required}"
                    )
                )

    return errors


def validate_scenario(spec: ScenarioSpec) -> ScenarioSpec:
    """Return ``spec`` unchanged if valid, else raise the first error found.

    The full error list rides on the exception as ``all_errors``.
    """
    errors = scenario_errors(spec)
    if errors:
        err = errors[0]
        err.all_errors = errors
        raise err
    return spec


# --- JSON (de)serialization -------------------------------------------------


def _source_to_json(source: SourceSpec) -> dict:
    if isinstance(source, BurstySourceSpec):
        return {"bursty": {"eta": source.eta, "lambda": source.lam, "nu": source.nu}}
    body = {}
    if source.nack_granularity != "event":
        body["nack_granularity"] = source.nack_granularity
    return {"aimd": body}


def _source_from_json(obj: dict) -> SourceSpec:
    if "bursty" in obj:
        b = obj["bursty"]
        return BurstySourceSpec(eta=int(b["eta"]), lam=float(b["lambda"]), nu=int(b["nu"]))
    if "aimd" in obj:
        a = obj["aimd"] or {}
        return AimdSourceSpec(nack_granularity=a.get("nack_granularity", "event"))
    raise InvalidParameter(f"unknown source spec {obj!r}")


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    flows = []
    for f in spec.flows:
        entry = {
            "id": f.id,
            "alpha": f.alpha,
            "weight": f.weight,
            "zeta": f.zeta,
            "v_param": f.v_param,
            "join_slot": f.join_slot,
            "source": _source_to_json(f.source),
        }
        if f.drop_cap is not None:
            entry["drop_cap"] = f.drop_cap
        if f.a_max is not None:
            entry["a_max"] = f.a_max
        if f.leave_slot is not None:
            entry["leave_slot"] = f.leave_slot
        flows.append(entry)
    channel: dict = {"kind": spec.channel.kind, "s_max": spec.channel.s_max, "s_min": spec.channel.s_min}
    if spec.channel.sequence is not None:
        channel["sequence"] = list(spec.channel.sequence)
    return {
        "flows": flows,
        "channel": channel,
        "policy": spec.policy,
        "horizon": spec.horizon,
        "feedback_delay": spec.feedback_delay,
        "seed": spec.seed,
        "drop_discipline": spec.drop_discipline,
    }


def scenario_from_dict(data: dict) -> ScenarioSpec:
    flows = tuple(
        FlowConfig(
            id=int(f["id"]),
            alpha=float(f["alpha"]),
            source=_source_from_json(f["source"]),
            weight=float(f.get("weight", 1.0)),
            zeta=float(f.get("zeta", 1.0)),
            v_param=float(f.get("v_param", 0.0)),
            drop_cap=None if f.get("drop_cap") is None else int(f["drop_cap"]),
            a_max=None if f.get("a_max") is None else int(f["a_max"]),
            join_slot=int(f.get("join_slot", 1)),
            leave_slot=None if f.get("leave_slot") is None else int(f["leave_slot"]),
        )
        for f in data["flows"]
    )
    ch = data["channel"]
    channel = ChannelModel(
        kind=ch["kind"],
        s_max=int(ch["s_max"]),
        s_min=int(ch["s_min"]),
        sequence=tuple(int(v) for v in ch["sequence"]) if "sequence" in ch else None,
    )
    return ScenarioSpec(
        flows=flows,
        channel=channel,
        policy=data["policy"],
        horizon=int(data["horizon"]),
        feedback_delay=int(data.get("feedback_delay", 0)),
        seed=int(data.get("seed", 0)),
        drop_discipline=data.get("drop_discipline", "head"),
    )


def scenario_to_json(spec: ScenarioSpec, indent: int = 2) -> str:
    return json.dumps(scenario_to_dict(spec), indent=indent)


def scenario_from_json(text: str) -> ScenarioSpec:
    return scenario_from_dict(json.loads(text))


def load_scenario(path) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(spec: ScenarioSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_json(spec))
        fh.write("\n")
