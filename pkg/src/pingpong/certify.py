"""Closed-form certification bounds and the reports built from them."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import channels

SOUNDNESS_FLOOR = 5 / 6  # optimal 1->2 cloning fidelity
DIAMOND_CEILING = 2.0


class BoundInapplicableError(ValueError):
    """The hypotheses of a bound are not met by the supplied estimates."""


@dataclass(frozen=True)
class CertificationReport:
    kind: str
    inputs: dict
    threshold: float
    observed: float | None
    verdict: bool
    confidence: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class BoundConstants:
    d: int = 2
    cliff_size: int = 24

    @property
    def prefactor(self) -> float:
        return 2 * math.sqrt(self.d * (self.d + 1))


@dataclass(frozen=True)
class DeviceEstimates:
    """Per-round fidelity estimates of memories and gates, with their sample sizes."""

    r_mem: tuple[float, ...]
    r_gate: tuple[float, ...]
    n_mem: tuple[int, ...] | None = None
    n_gate: tuple[int, ...] | None = None
    eps_mem: tuple[float, ...] | None = None
    eps_gate: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.r_mem) != len(self.r_gate):
            raise ValueError("memory and gate estimate lists differ in length")
        for r in (*self.r_mem, *self.r_gate):
            if not 0 <= r <= 1:
                raise ValueError(f"fidelity estimate {r!r} outside [0, 1]")


# -- completeness -------------------------------------------------------------


def h_k(mu: float, k: int) -> float:
    """``(1/k) sum_{kappa=1..k} mu^kappa`` as an explicit power sum."""
    if not 0 <= mu <= 1:
        raise ValueError(f"mu must lie in [0, 1], got {mu!r}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k!r}")
    total = 0.0
    power = 1.0
    for _ in range(k):
        power *= mu
        total += power
    return total / k


def _check_threshold(t: float) -> None:
    if not SOUNDNESS_FLOOR < t <= 1:
        raise ValueError(f"winning threshold must lie in (5/6, 1], got {t!r}")


def h_inverse(t: float, k: int, tol: float = 1e-12) -> float:
    """The ``mu`` in [0, 1] with ``h_k(mu) = t``, by bisection."""
    _check_threshold(t)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if h_k(mid, k) < t:
            lo = mid
        else:
            hi = mid
    return hi


def completeness_verdict(mu_est: float, t: float, k: int, n: int, eps: float) -> CertificationReport:
    threshold = h_inverse(t, k) + eps
    return CertificationReport(
        kind="completeness",
        inputs={"mu_est": mu_est, "t": t, "k": k, "n": n, "eps": eps},
        threshold=threshold,
        observed=mu_est,
        verdict=mu_est >= threshold,
        confidence=1 - math.exp(-n * eps**2),
    )


# -- soundness ----------------------------------------------------------------


def soundness_rate_bound(m: int, k: int, eps: float) -> float:
    """Largest winning rate an m-cheating pair can reach (up to ``eps``)."""
    if not 0 <= m <= k:
        raise ValueError(f"need 0 <= m <= k, got m={m}, k={k}")
    return (m + SOUNDNESS_FLOOR * (k - m)) / k + eps


def soundness_m_lower(t: float, k: int) -> float:
    """Sending rounds certified by a rate above ``t``: ``k (6t - 5)``."""
    _check_threshold(t)
    return k * (6 * t - 5)


def soundness_report(rate: float, t: float, k: int, n: int, eps: float) -> CertificationReport:
    m_lower = soundness_m_lower(t, k)
    return CertificationReport(
        kind="soundness",
        inputs={"R": rate, "t": t, "k": k, "n": n, "eps": eps},
        threshold=t,
        observed=rate,
        verdict=rate > t,
        confidence=1 - math.exp(-n * eps**2),
        details={"m_lower": m_lower, "certified_sends": math.ceil(m_lower - 1e-12)},
    )


# -- consistency --------------------------------------------------------------


def _fidelity_angle(r: float) -> float:
    if r < 1 / 3:
        raise ValueError(f"fidelity estimate {r!r} is below 1/3")
    return math.acos(math.sqrt((3 * r - 1) / 2))


def consistency_angle(dev: DeviceEstimates, kappa: int) -> float:
    if not 1 <= kappa <= len(dev.r_mem):
        raise ValueError(f"kappa={kappa} outside 1..{len(dev.r_mem)}")
    return sum(_fidelity_angle(dev.r_mem[j]) + _fidelity_angle(dev.r_gate[j]) for j in range(kappa))


def consistency_threshold(
    dev: DeviceEstimates, kappa: int, eps_rate: float = 0.0, extra_fidelities: Sequence[float] = ()
) -> float:
    """Lowest test fidelity compatible with the device estimates, minus ``eps_rate``.

    ``extra_fidelities`` adds further channels in the chain, e.g. a noisy
    input state.
    """
    angle = consistency_angle(dev, kappa) + sum(_fidelity_angle(r) for r in extra_fidelities)
    if angle > math.pi / 2:
        raise BoundInapplicableError(f"angle sum {angle:.6f} exceeds pi/2; the bound does not apply")
    return (2 * math.cos(angle) ** 2 + 1) / 3 - eps_rate


def consistency_confidence(dev: DeviceEstimates, kappa: int) -> float:
    if None in (dev.n_mem, dev.n_gate, dev.eps_mem, dev.eps_gate):
        raise ValueError("per-device sample counts and precisions are required")
    tail = sum(
        math.exp(-2 * dev.n_gate[j] * dev.eps_gate[j] ** 2) + math.exp(-2 * dev.n_mem[j] * dev.eps_mem[j] ** 2)
        for j in range(kappa)
    )
    return max(0.0, 1 - 2 * tail)


def consistency_report(
    dev: DeviceEstimates, kappa: int, rate: float, eps_rate: float
) -> CertificationReport:
    threshold = consistency_threshold(dev, kappa, eps_rate)
    confidence = consistency_confidence(dev, kappa) if dev.n_mem is not None else None
    return CertificationReport(
        kind="consistency",
        inputs={"r_mem": list(dev.r_mem), "r_gate": list(dev.r_gate), "kappa": kappa, "R": rate, "eps": eps_rate},
        threshold=threshold,
        observed=rate,
        verdict=rate >= threshold,
        confidence=confidence,
    )


# -- performance of k-round protocols -----------------------------------------


def performance_bound(
    R_k: float,
    eps_k: float,
    k: int,
    consts: BoundConstants = BoundConstants(),
    include_cliff_factor: bool = True,
) -> float:
    """Diamond-distance bound for a k-round protocol from the depth-k test rate."""
    radicand = 1 - R_k + eps_k
    if radicand < 0:
        raise ValueError(f"1 - R_k + eps_k = {radicand!r} is negative")
    if include_cliff_factor:
        radicand *= float(consts.cliff_size) ** k
    return consts.prefactor * math.sqrt(radicand)


def composed_performance_bound(
    parts: Sequence[tuple[int, float, float]],
    consts: BoundConstants = BoundConstants(),
    include_cliff_factor: bool = True,
) -> float:
    """Triangle-inequality bound for a protocol of depth ``sum(kappa)``."""
    return sum(performance_bound(r, e, kap, consts, include_cliff_factor) for kap, r, e in parts)


def is_vacuous(bound: float) -> bool:
    return bound > DIAMOND_CEILING


def performance_report(
    parts: Sequence[tuple[int, float, float]],
    consts: BoundConstants = BoundConstants(),
    include_cliff_factor: bool = True,
    observed: float | None = None,
) -> CertificationReport:
    bound = composed_performance_bound(parts, consts, include_cliff_factor)
    vacuous = is_vacuous(bound)
    return CertificationReport(
        kind="performance",
        inputs={
            "parts": [list(p) for p in parts],
            "d": consts.d,
            "cliff_size": consts.cliff_size,
            "include_cliff_factor": include_cliff_factor,
        },
        threshold=bound,
        observed=observed,
        verdict=not vacuous and (observed is None or observed <= bound),
        details={"vacuous": vacuous, "depth": sum(p[0] for p in parts)},
    )


# -- worked example -------------------------------------------------------------

QG_MEMORY_FIDELITY = 1 - 1e-5
# 1 - R_2 that reproduces the published bound values; back-solved from them
QG_INFIDELITY = 4e-5


def qg_worked_example(
    memory_fidelity: float = QG_MEMORY_FIDELITY, infidelity: float = QG_INFIDELITY
) -> dict:
    """Two-round storage protocol with depolarizing memory, exact and bounded.

    The exact distance composes the two memory uses as Pauli channels; the
    bounds use the depth-2 test with ``1 - R_2 + eps_2 = infidelity``.
    """
    p = 2 * memory_fidelity - 1
    mem = channels.PauliChannel.depolarizing(p)
    exact = channels.diamond_distance_pauli(mem.compose(mem), channels.PauliChannel((1.0, 0.0, 0.0, 0.0)))
    R = 1 - infidelity
    return {
        "memory_fidelity": memory_fidelity,
        "k": 2,
        "one_minus_R": infidelity,
        "exact": exact,
        "bound": performance_bound(R, 0.0, 2, include_cliff_factor=True),
        "gate_free": performance_bound(R, 0.0, 2, include_cliff_factor=False),
    }
