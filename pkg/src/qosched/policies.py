"""Per-slot scheduling and drop policies.

All three policies decompose into a service-rate allocation and a drop
decision:

* ``pi_bar``  -- winner-take-all allocation plus a fixed-magnitude threshold
  drop (one-step optimal for the drift-plus-penalty bound; needs drop_cap),
* ``pi_hat``  -- same allocation, but the drop magnitude only needs the
  current slot's arrivals (near-optimal, no arrival bound required),
* ``pi_static`` -- strict flow isolation: every flow gets its guaranteed
  share of capacity and drops its own arrivals past a queue threshold.

``oracle_min_drift`` certifies the closed-form rules by exhaustively
minimizing the decision-dependent part of the one-slot drift-plus-penalty
bound on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np

from .model import FlowConfig, int_ceil, int_floor

# Tractability guard for the exhaustive oracle.
ORACLE_MAX_CAPACITY = 12
ORACLE_MAX_DROP_CAP = 6
ORACLE_MAX_FLOWS = 3


class PolicyError(ValueError):
    pass


class MissingArrivalCount(PolicyError):
    """Policy needs the current slot's arrival counts but none were given."""


class MissingDropCap(PolicyError):
    """Policy pi_bar needs a configured drop_cap."""


class InstanceTooLarge(PolicyError):
    """Instance exceeds the exhaustive oracle's tractability guard."""


@dataclass(frozen=True)
class FlowSnapshot:
    """One flow's state as seen by a policy at the start of a slot."""

    config: FlowConfig
    q: int
    y: float
    z: float
    a_t: int | None = None


@dataclass(frozen=True)
class PolicyInput:
    flows: tuple[FlowSnapshot, ...]
    s_t: int


@dataclass(frozen=True)
class PolicyOutput:
    """Decided allocation and drop magnitude per flow id."""

    s_alloc: dict[int, int]
    d_drop: dict[int, int]


def _service_weight(fs: FlowSnapshot) -> float:
    return fs.config.zeta * fs.z + fs.q + fs.y


def sra_allocate(inp: PolicyInput) -> dict[int, int]:
    """Give the whole capacity to the flow with the largest service weight.

    The weight is zeta*z + q + y; ties go to the lowest flow id so traces
    are reproducible.
    """
    if not inp.flows:
        return {}
    best = min(inp.flows, key=lambda fs: (-_service_weight(fs), fs.config.id))
    return {fs.config.id: (inp.s_t if fs is best else 0) for fs in inp.flows}


def _drop_triggered(q: int, z: float, config: FlowConfig) -> bool:
    # Strict inequality: equality with the threshold does not drop.
    return q + config.zeta * z > config.v_param * config.weight


def drop_pi_bar(q: int, z: float, config: FlowConfig) -> int:
    """Fixed-magnitude threshold drop: the full cap once the weighted
    backlog q + zeta*z exceeds v_param * weight."""
    if config.drop_cap is None:
        raise MissingDropCap(f"flow {config.id} has no drop_cap")
    return config.drop_cap if _drop_triggered(q, z, config) else 0


def drop_pi_hat(q: int, z: float, a_t: int, s_t: int, config: FlowConfig) -> int:
    """Arrival-aware threshold drop: max(current arrivals, guaranteed share
    of this slot's capacity), rounded up so the drop covers the share."""
    if not _drop_triggered(q, z, config):
        return 0
    return max(a_t, int_ceil(config.alpha * s_t))


def step_pi_static(inp: PolicyInput) -> PolicyOutput:
    """Isolating policy: each flow gets floor(alpha * S(t)) regardless of the
    others, and sheds its own arrivals while its queue exceeds the threshold."""
    s_alloc: dict[int, int] = {}
    d_drop: dict[int, int] = {}
    for fs in inp.flows:
        cfg = fs.config
        if fs.a_t is None:
            raise MissingArrivalCount(f"flow {cfg.id}: pi_static needs a_t")
        s_alloc[cfg.id] = int_floor(cfg.alpha * inp.s_t)
        d_drop[cfg.id] = fs.a_t if fs.q > cfg.v_param * cfg.weight else 0
    return PolicyOutput(s_alloc, d_drop)


def step_policy(kind: str, inp: PolicyInput) -> PolicyOutput:
    """Run one policy for one slot."""
    if kind == "pi_static":
        return step_pi_static(inp)
    if kind == "pi_bar":
        alloc = sra_allocate(inp)
        drops = {fs.config.id: drop_pi_bar(fs.q, fs.z, fs.config) for fs in inp.flows}
        return PolicyOutput(alloc, drops)
    if kind == "pi_hat":
        alloc = sra_allocate(inp)
        drops = {}
        for fs in inp.flows:
            if fs.a_t is None:
                raise MissingArrivalCount(f"flow {fs.config.id}: pi_hat needs a_t")
            drops[fs.config.id] = drop_pi_hat(fs.q, fs.z, fs.a_t, inp.s_t, fs.config)
        return PolicyOutput(alloc, drops)
    raise PolicyError(f"unknown policy kind {kind!r}")


def drift_objective(inp: PolicyInput, out: PolicyOutput) -> float:
    """Decision-dependent part of the one-slot drift-plus-penalty bound.

    Lower is better; the decision-independent constants are omitted since
    they cancel in any argmin comparison.
    """
    total = 0.0
    for fs in inp.flows:
        cfg = fs.config
        s_i = out.s_alloc[cfg.id]
        d_i = out.d_drop[cfg.id]
        total += -(cfg.zeta * fs.z + fs.q + fs.y) * s_i
        total += (cfg.v_param * cfg.weight - cfg.zeta * fs.z - fs.q) * d_i
    return total


def _allocations(n: int, cap: int) -> np.ndarray:
    """All nonnegative integer n-vectors summing to at most cap."""
    rows = [c for c in product(range(cap + 1), repeat=n) if sum(c) <= cap]
    return np.array(rows, dtype=np.int64)


def oracle_min_drift(
    inp: PolicyInput, d_max: Mapping[int, int]
) -> tuple[PolicyOutput, float]:
    """Exhaustively minimize the drift objective over every feasible
    (allocation, drop) combination. Small instances only.

    Returns a minimizing decision and its objective value; the value is
    re-evaluated through :func:`drift_objective` so comparisons against the
    closed-form policies share one evaluator.
    """
    n = len(inp.flows)
    if n == 0:
        return PolicyOutput({}, {}), 0.0
    caps = [d_max[fs.config.id] for fs in inp.flows]
    if n > ORACLE_MAX_FLOWS or inp.s_t > ORACLE_MAX_CAPACITY or any(
        c > ORACLE_MAX_DROP_CAP for c in caps
    ):
        raise InstanceTooLarge(
            f"n={n}, s_t={inp.s_t}, caps={caps} exceed the oracle guard"
        )

    allocs = _allocations(n, inp.s_t)
    drops = np.array(list(product(*(range(c + 1) for c in caps))), dtype=np.int64)

    serve_coef = np.array([_service_weight(fs) for fs in inp.flows])
    drop_coef = np.array(
        [
            fs.config.v_param * fs.config.weight - fs.config.zeta * fs.z - fs.q
            for fs in inp.flows
        ]
    )
    # Objective of every combination, as an (allocations x drops) grid.
    grid = (allocs @ -serve_coef)[:, None] + (drops @ drop_coef)[None, :]
    ai, di = np.unravel_index(np.argmin(grid), grid.shape)

    ids = [fs.config.id for fs in inp.flows]
    best = PolicyOutput(
        {fid: int(allocs[ai, k]) for k, fid in enumerate(ids)},
        {fid: int(drops[di, k]) for k, fid in enumerate(ids)},
    )
    return best, drift_objective(inp, best)
