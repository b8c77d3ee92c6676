"""Winning-rate estimators and two-sided Hoeffding intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .protocol import Transcript

DEFAULT_CONFIDENCE = 0.95


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    n_used: int
    epsilon: float
    confidence: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.rate - self.epsilon, self.rate + self.epsilon


def _check_open_unit(name: str, x: float) -> None:
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {x!r}")


def hoeffding_epsilon(n: int, delta: float) -> float:
    """Half-width ``eps`` with ``P(|R - P| > eps) <= delta`` for ``n`` Bernoulli trials.

    Values above 1 are returned unchanged even though the interval is then
    vacuous.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n!r}")
    _check_open_unit("delta", delta)
    return math.sqrt(math.log(2 / delta) / (2 * n))


def min_samples(epsilon: float, delta: float) -> int:
    """Smallest ``n`` with ``2 exp(-2 n eps^2) <= delta``."""
    _check_open_unit("epsilon", epsilon)
    _check_open_unit("delta", delta)
    return math.ceil(math.log(2 / delta) / (2 * epsilon**2))


def estimate(v: np.ndarray, confidence: float = DEFAULT_CONFIDENCE) -> RateEstimate:
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("no executions match the selection")
    n = int(v.size)
    return RateEstimate(
        rate=float(v.sum()) / n,
        n_used=n,
        epsilon=hoeffding_epsilon(n, 1 - confidence),
        confidence=confidence,
    )


def rate_overall(t: Transcript, confidence: float = DEFAULT_CONFIDENCE) -> RateEstimate:
    return estimate(t.v, confidence)


def rate_by_depth(t: Transcript, kappa: int, confidence: float = DEFAULT_CONFIDENCE) -> RateEstimate:
    return estimate(t.v[t.kappa == kappa], confidence)


def rate_by_string(
    t: Transcript, kappa: int, gate_idxs: Sequence[int], confidence: float = DEFAULT_CONFIDENCE
) -> RateEstimate:
    """Rate over executions of depth ``kappa`` that used exactly ``gate_idxs``."""
    if len(gate_idxs) != kappa:
        raise ValueError("gate string length must equal the depth")
    mask = t.kappa == kappa
    if kappa:
        mask &= np.all(t.gates[:, :kappa] == np.asarray(gate_idxs)[None, :], axis=1)
    return estimate(t.v[mask], confidence)
