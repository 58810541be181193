"""Closed-form bounds on queue lengths and packet delay.

Every bound is an exact inequality guaranteed by the threshold-drop policies,
so the runtime checker compares state against these values with zero
tolerance. Delay bounds are finite only when the channel capacity has a
positive floor.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import FlowConfig


class UndefinedBound(ValueError):
    """Requested bound needs a parameter that is unknown (a_max) or
    degenerate (s_min = 0 for delay bounds)."""


@dataclass(frozen=True)
class BoundSet:
    """Per-flow bound values (packets, except the delay bounds in slots)."""

    q_bound: float | None
    z_bound: float
    qz_bound: float | None
    y_bound: float | None
    delay_bound_pi_hat: float | None
    delay_bound_pi_static: float | None

    def to_dict(self) -> dict:
        return {
            "q_bound": self.q_bound,
            "z_bound": self.z_bound,
            "qz_bound": self.qz_bound,
            "y_bound": self.y_bound,
            "delay_bound_pi_hat": self.delay_bound_pi_hat,
            "delay_bound_pi_static": self.delay_bound_pi_static,
        }


def compute_bounds(
    config: FlowConfig,
    n: int,
    s_max: int,
    s_min: int,
    a_max: int | None,
    max_a_max_over_flows: int | None,
    strict: bool = False,
) -> BoundSet:
    """Evaluate every bound for one flow.

    ``n`` is the number of flows sharing the station and
    ``max_a_max_over_flows`` the largest per-slot arrival bound among them.
    Bounds whose inputs are unavailable come back as None, or raise
    UndefinedBound when ``strict`` is set.
    """
    v, w, zeta, alpha = config.v_param, config.weight, config.zeta, config.alpha

    def unavailable(reason: str):
        if strict:
            raise UndefinedBound(reason)
        return None

    z_bound = v * w / zeta + zeta * alpha * s_max

    q_bound = qz_bound = None
    if a_max is None:
        q_bound = unavailable(f"flow {config.id}: a_max unknown")
        qz_bound = unavailable(f"flow {config.id}: a_max unknown")
    else:
        q_bound = v * w + a_max
        qz_bound = v * w + zeta * zeta * alpha * s_max + a_max

    if max_a_max_over_flows is None:
        y_bound = unavailable("max a_max over flows unknown")
    else:
        y_bound = n * (v + zeta * zeta * s_max + max_a_max_over_flows) + (n + 1) * s_max

    delay_hat = delay_static = None
    if s_min <= 0:
        delay_hat = unavailable("delay bounds need s_min > 0")
        delay_static = unavailable("delay bounds need s_min > 0")
    elif a_max is None:
        delay_hat = unavailable(f"flow {config.id}: a_max unknown")
        delay_static = unavailable(f"flow {config.id}: a_max unknown")
    elif alpha > 0:
        delay_hat = (
            s_max / s_min
            + (1.0 + 1.0 / zeta**2) * v * w / (alpha * s_min)
            + a_max / (alpha * s_min)
        )
        delay_static = 1.0 + v * w / (alpha * s_min) + a_max / (alpha * s_min)
    else:
        delay_hat = unavailable(f"flow {config.id}: alpha = 0 gives no delay bound")
        delay_static = unavailable(f"flow {config.id}: alpha = 0 gives no delay bound")

    return BoundSet(
        q_bound=q_bound,
        z_bound=z_bound,
        qz_bound=qz_bound,
        y_bound=y_bound,
        delay_bound_pi_hat=delay_hat,
        delay_bound_pi_static=delay_static,
    )


def drift_constants(flows, s_max: int) -> tuple[float, float]:
    """Decision-independent constants of the one-slot drift bound.

    Both need every flow's a_max and drop_cap; they have no effect on which
    decision minimizes the bound, only on its absolute value.
    """
    c1 = len(flows) * float(s_max) ** 2
    c2 = 0.0
    for f in flows:
        a_max = f.effective_a_max()
        if a_max is None or f.drop_cap is None:
            raise UndefinedBound(f"flow {f.id}: a_max and drop_cap required")
        c1 += (a_max + s_max + f.drop_cap) ** 2 / 2.0
        c2 += float(s_max + f.drop_cap) ** 2
    return c1, c2
