"""The single-qubit 2-designs used by the test: six Pauli eigenstates and 24 Cliffords.

The orderings below are part of the transcript format. State indices:

    0 |0>   1 |1>   2 |+>   3 |->   4 |+i>   5 |-i>

Clifford indices follow :func:`enumerate_cliffords`: phase-canonical
matrices sorted by descending ``(re, im)`` of their row-major entries, which
puts the identity at index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import channels, qlin
from .qlin import PAULI_KETS

CLIFFORD_COUNT = 24


@dataclass(frozen=True)
class PauliStateSet:
    states: tuple[np.ndarray, ...] = PAULI_KETS
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        for s in self.states:
            qlin.check_pure_state(s)
        if self.weights is None:
            object.__setattr__(self, "weights", (1 / len(self.states),) * len(self.states))
        if len(self.weights) != len(self.states) or abs(sum(self.weights) - 1) > 1e-12:
            raise ValueError("weights must match the states and sum to 1")

    def __len__(self) -> int:
        return len(self.states)

    def projectors(self) -> list[np.ndarray]:
        return [qlin.projector(s) for s in self.states]


def canonical_phase(u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Multiply by a global phase so that the first nonzero entry is real positive."""
    flat = u.reshape(-1)
    lead = flat[np.argmax(np.abs(flat) > tol)]
    return u * (abs(lead) / lead)


def _key(u: np.ndarray) -> tuple:
    return tuple(x for z in u.reshape(-1) for x in (round(z.real, 9) + 0.0, round(z.imag, 9) + 0.0))


@dataclass(frozen=True)
class CliffordGroup:
    elements: tuple[np.ndarray, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {_key(canonical_phase(u)): i for i, u in enumerate(self.elements)})

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.elements[i]

    def index_of(self, u: np.ndarray) -> int:
        """Index of ``u`` up to global phase; ``KeyError`` if absent."""
        return self._index[_key(canonical_phase(np.asarray(u, dtype=complex)))]

    def multiplication_table(self) -> np.ndarray:
        n = len(self)
        table = np.empty((n, n), dtype=int)
        for a, ua in enumerate(self.elements):
            for b, ub in enumerate(self.elements):
                table[a, b] = self.index_of(ua @ ub)
        return table

    def as_array(self) -> np.ndarray:
        return np.stack(self.elements)


@lru_cache(maxsize=None)
def enumerate_cliffords() -> CliffordGroup:
    """Closure of ``{H, S}`` under multiplication, modulo global phase."""
    found = {_key(qlin.I2): qlin.I2.copy()}
    frontier = [qlin.I2.copy()]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (qlin.H, qlin.S):
                v = canonical_phase(g @ u)
                k = _key(v)
                if k not in found:
                    found[k] = v
                    nxt.append(v)
        frontier = nxt
    if len(found) != CLIFFORD_COUNT:
        raise RuntimeError(f"Clifford closure produced {len(found)} elements")
    ordered = [found[k] for k in sorted(found, reverse=True)]
    for u in ordered:
        u.setflags(write=False)
    return CliffordGroup(tuple(ordered))


def conjugates_paulis(u: np.ndarray) -> bool:
    """True if ``u P u^dagger`` lies in ``{+-X, +-Y, +-Z}`` for each of X, Y, Z."""
    signed = [s * p for p in (qlin.X, qlin.Y, qlin.Z) for s in (1, -1)]
    for p in (qlin.X, qlin.Y, qlin.Z):
        image = u @ p @ qlin.dagger(u)
        if not any(np.allclose(image, q, atol=1e-9) for q in signed):
            return False
    return True


def _symmetric_projector() -> np.ndarray:
    swap = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            swap[2 * b + a, 2 * a + b] = 1
    return (np.eye(4) + swap) / 2


def verify_state_2design(states: PauliStateSet | None = None, tol: float = 1e-12) -> bool:
    """Check that the weighted second moment equals the Haar value ``P_sym / 3``."""
    states = states or PauliStateSet()
    moment = sum(w * np.kron(p, p) for w, p in zip(states.weights, states.projectors()))
    return bool(np.max(np.abs(moment - _symmetric_projector() / 3)) <= tol)


def verify_unitary_2design(
    group: CliffordGroup | Sequence[np.ndarray], probe: channels.QuantumChannel, tol: float = 1e-9
) -> bool:
    """Check that twirling ``probe`` over ``group`` gives its depolarizing equivalent."""
    elements = group.elements if isinstance(group, CliffordGroup) else tuple(group)
    twirled = channels.twirl(probe, elements)
    return channels.action_equal(twirled, channels.clifford_twirl(probe), tol)


def discrete_avg_fidelity(ch: channels.QuantumChannel, states: PauliStateSet | None = None) -> float:
    """``Tr[ch(psi) psi]`` averaged over a finite state set."""
    states = states or PauliStateSet()
    return float(
        sum(w * np.real(np.trace(ch.apply(p) @ p)) for w, p in zip(states.weights, states.projectors()))
    )


def tetrahedral_states() -> PauliStateSet:
    """The four-state SIC set, whose Bloch vectors form a regular tetrahedron."""
    kets = []
    for x, y, z in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]:
        theta = np.arccos(z / np.sqrt(3))
        phi = np.arctan2(y, x)
        kets.append(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))
    return PauliStateSet(tuple(kets))


def haar_random_state(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random qubit state(s): normalized complex Gaussian vectors."""
    shape = (2,) if size is None else (size, 2)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def haar_random_unitary(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random 2x2 unitary (or a stack of them) via phase-fixed QR."""
    shape = (2, 2) if size is None else (size, 2, 2)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]
