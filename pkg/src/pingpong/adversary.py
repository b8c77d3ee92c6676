"""Cheating provers for soundness experiments.

An m-cheating pair fixes in advance the rounds in which it really moves the
qubit across. Both parties' marginal states are tracked. In a sending round
the receiver gets the sender's state and the sender is left with nothing
(maximally mixed). In any other round the sender keeps its state and the
receiver has to make do with a substitute derived from it:

* ``clone``: one output of the optimal symmetric 1->2 cloner, i.e. the Bloch
  vector shrunk by 2/3 (fidelity 5/6);
* ``classical``: a Z-basis measure-and-prepare copy (average fidelity 2/3);
* ``mixed``: the maximally mixed state.

The receiver then applies the announced Clifford. Devices are noiseless,
which is the most favourable case for the cheaters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import qlin, stats
from .protocol import STATE_KETS, ExecutionRecord, TestConfig, Transcript, clifford_array
from .protocol import replay_execution, simulate, snap_probabilities

CLONE_SHRINK = 2 / 3


class Fallback(enum.Enum):
    OPTIMAL_CLONE = "clone"
    CLASSICAL_MEASURE_RESEND = "classical"
    FABRICATE_MIXED = "mixed"

    def substitute(self, rho: np.ndarray) -> np.ndarray:
        """Receiver's marginal for a batch of sender states ``rho``."""
        half_identity = np.broadcast_to(qlin.I2 / 2, rho.shape)
        if self is Fallback.OPTIMAL_CLONE:
            return CLONE_SHRINK * rho + (1 - CLONE_SHRINK) * half_identity
        if self is Fallback.CLASSICAL_MEASURE_RESEND:
            out = np.zeros_like(rho)
            out[:, 0, 0] = rho[:, 0, 0]
            out[:, 1, 1] = rho[:, 1, 1]
            return out
        return half_identity.copy()


@dataclass(frozen=True)
class CheatStrategy:
    send_rounds: frozenset[int]
    fallback: Fallback

    def __post_init__(self):
        object.__setattr__(self, "send_rounds", frozenset(int(r) for r in self.send_rounds))
        if any(r < 1 for r in self.send_rounds):
            raise ValueError("send rounds are numbered from 1")
        object.__setattr__(self, "fallback", Fallback(self.fallback))

    @property
    def m(self) -> int:
        return len(self.send_rounds)

    @classmethod
    def first_m(cls, m: int, fallback: Fallback | str) -> CheatStrategy:
        return cls(frozenset(range(1, m + 1)), Fallback(fallback))

    @classmethod
    def from_dict(cls, d: dict) -> CheatStrategy:
        """Parse ``{"m": 2, "send_rounds": "first_m" | [..], "fallback": "clone"}``."""
        unknown = set(d) - {"m", "send_rounds", "fallback"}
        if unknown:
            raise ValueError(f"unknown strategy keys: {sorted(unknown)}")
        rounds = d.get("send_rounds", "first_m")
        if rounds == "first_m":
            strat = cls.first_m(int(d["m"]), d["fallback"])
        else:
            strat = cls(frozenset(rounds), Fallback(d["fallback"]))
        if "m" in d and strat.m != int(d["m"]):
            raise ValueError(f"m={d['m']} but {strat.m} send rounds listed")
        return strat

    def validate_for(self, k: int) -> None:
        if any(r > k for r in self.send_rounds):
            raise ValueError(f"send rounds {sorted(self.send_rounds)} exceed k={k}")


def cheating_success_probs(k: int, strat: CheatStrategy, kappa, state_idx, gates) -> np.ndarray:
    cliffs = clifford_array()
    kets = STATE_KETS[state_idx]
    n = len(kappa)
    # parties[0] is A, parties[1] is B; A starts with the verifier's state
    parties = [np.einsum("na,nb->nab", kets, kets.conj()), np.broadcast_to(qlin.I2 / 2, (n, 2, 2)).copy()]
    ideal = kets
    out = np.empty(n)
    for j in range(1, k + 1):
        sender, receiver = (0, 1) if j % 2 else (1, 0)
        u = cliffs[gates[:, j - 1]]
        held = parties[sender]
        if j in strat.send_rounds:
            incoming = held
            parties[sender] = np.broadcast_to(qlin.I2 / 2, held.shape).copy()
        else:
            incoming = strat.fallback.substitute(held)
        parties[receiver] = u @ incoming @ qlin.dagger(u)
        ideal = np.einsum("nab,nb->na", u, ideal)
        done = kappa == j
        if done.any():
            rho = parties[receiver][done]
            out[done] = np.real(np.einsum("na,nab,nb->n", ideal[done].conj(), rho, ideal[done]))
    return snap_probabilities(out)


def run_cheating_test(cfg: TestConfig, strat: CheatStrategy, jobs: int = 1) -> Transcript:
    strat.validate_for(cfg.k)
    return simulate(cfg, lambda kap, st, g: cheating_success_probs(cfg.k, strat, kap, st, g), jobs)


def run_cheating_execution(cfg: TestConfig, strat: CheatStrategy, i: int) -> ExecutionRecord:
    strat.validate_for(cfg.k)
    return replay_execution(cfg, lambda kap, st, g: cheating_success_probs(cfg.k, strat, kap, st, g), i)


def soundness_bound(m: int, k: int, eps: float) -> float:
    return (m + 5 / 6 * (k - m)) / k + eps


@dataclass(frozen=True)
class SoundnessResult:
    rate: float
    bound: float
    epsilon: float
    violated: bool


def soundness_experiment(
    cfg: TestConfig, strat: CheatStrategy, delta: float = 0.01, jobs: int = 1
) -> SoundnessResult:
    """Run the cheaters and compare their winning rate with the m-cheating bound."""
    transcript = run_cheating_test(cfg, strat, jobs)
    rate = float(transcript.v.mean())
    eps = stats.hoeffding_epsilon(cfg.n, delta)
    bound = soundness_bound(strat.m, cfg.k, eps)
    return SoundnessResult(rate=rate, bound=bound, epsilon=eps, violated=rate > bound)
