"""Packet arrival generators and the delayed ACK/NACK feedback channel.

Two source families are supported:

* an open-loop bursty source that emits bursts of ``eta`` packets, where the
  number of bursts per slot follows a Poisson law truncated at ``nu`` (all
  residual mass lands on ``nu``, so samples never exceed ``eta * nu``), and
* a closed-loop source that emits ``Poisson(lam)`` packets per slot and
  adapts ``lam`` by additive-increase / multiplicative-decrease from delayed
  ACK/NACK counts.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

# Additive gain per ACK in the closed-loop rate update.
AIMD_ACK_GAIN = 0.05
# Floor for the closed-loop mean rate; the update never goes below this.
AIMD_MIN_RATE = 1.0


@dataclass(frozen=True)
class BurstySourceSpec:
    """Bursty source parameters: burst size ``eta``, Poisson mean ``lam``,
    truncation point ``nu``. Per-slot samples live on ``eta * {0, ..., nu}``."""

    eta: int
    lam: float
    nu: int

    @property
    def a_max(self) -> int:
        return self.eta * self.nu


@dataclass(frozen=True)
class AimdSourceSpec:
    """Closed-loop source driven by delayed feedback.

    ``nack_granularity`` selects what one NACK means: ``"event"`` sends one
    NACK per slot with a nonzero drop decision, ``"packet"`` sends one per
    actually dropped packet.
    """

    nack_granularity: str = "event"


SourceSpec = BurstySourceSpec | AimdSourceSpec


def sample_bursty(spec: BurstySourceSpec, rng: np.random.Generator, size=None):
    """Draw packet counts from the truncated-Poisson bursty source.

    A plain Poisson draw clamped at ``nu`` has exactly the target law: the
    clamp moves all mass above the truncation point onto ``nu``.
    """
    if size is None:
        return spec.eta * min(int(rng.poisson(spec.lam)), spec.nu)
    return spec.eta * np.minimum(rng.poisson(spec.lam, size=size), spec.nu)


def sample_poisson(lam: float, rng: np.random.Generator) -> int:
    """One unbounded Poisson draw with mean ``lam`` (exact sampling)."""
    return int(rng.poisson(lam))


def aimd_step(lam: float, acks: int, nacks: int) -> float:
    """Advance the closed-loop mean rate by one slot of feedback.

    Additive increase per ACK, halving per NACK, clamped below at 1.
    """
    if nacks >= 64:
        # 2**nacks would overflow; the clamp wins regardless.
        return AIMD_MIN_RATE
    return max((lam + AIMD_ACK_GAIN * acks) / 2.0**nacks, AIMD_MIN_RATE)


class FeedbackChannel:
    """Lossless FIFO channel delivering (ack, nack) counts ``delay`` slots
    after they are pushed.

    ``pop(t)`` drains every message due at or before ``t`` and returns the
    summed counts, so a message is never lost even if the consumer's pop for
    its exact due slot already happened.
    """

    def __init__(self, delay: int):
        if delay < 0:
            raise ValueError("feedback delay must be >= 0")
        self.delay = delay
        self._due: list[int] = []  # min-heap of due slots
        self._pending: dict[int, tuple[int, int]] = {}

    def push(self, t: int, acks: int, nacks: int) -> None:
        due = t + self.delay
        if due in self._pending:
            a, n = self._pending[due]
            self._pending[due] = (a + acks, n + nacks)
        else:
            self._pending[due] = (acks, nacks)
            heapq.heappush(self._due, due)

    def pop(self, t: int) -> tuple[int, int]:
        acks = nacks = 0
        while self._due and self._due[0] <= t:
            due = heapq.heappop(self._due)
            a, n = self._pending.pop(due)
            acks += a
            nacks += n
        return acks, nacks

    def in_flight(self) -> tuple[int, int]:
        """Totals not yet delivered (for conservation accounting)."""
        acks = sum(a for a, _ in self._pending.values())
        nacks = sum(n for _, n in self._pending.values())
        return acks, nacks


class AimdSource:
    """Mutable closed-loop source state: current mean rate plus its feedback
    channel. The rate starts at the clamp floor."""

    def __init__(self, spec: AimdSourceSpec, delay: int):
        self.spec = spec
        self.lam = AIMD_MIN_RATE
        self.feedback = FeedbackChannel(delay)

    def advance(self, t: int) -> float:
        """Apply feedback due at slot ``t`` and return the updated rate."""
        acks, nacks = self.feedback.pop(t)
        self.lam = aimd_step(self.lam, acks, nacks)
        return self.lam

    def sample(self, rng: np.random.Generator) -> int:
        return sample_poisson(self.lam, rng)
