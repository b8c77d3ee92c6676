"""Qubit channels in Kraus form.

Besides the basic constructors this module holds the fidelity and distance
measures used throughout the package, the Clifford and Pauli twirls, and the
rewriting of teleportation imperfections as an effective memory channel.

Channels are compared by their action on the six Pauli eigenstates, which
fixes a qubit channel completely.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Sequence

import numpy as np

from . import qlin
from .qlin import PAULI_KETS, PAULIS, dagger

CPTP_TOL = 1e-9


class QuantumChannel:
    """A CPTP map on a qubit given by its Kraus operators."""

    __slots__ = ("kraus",)

    def __init__(self, kraus: Iterable, *, check: bool = True):
        ops = tuple(qlin.as_matrix(k, dim=2) for k in kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        if check:
            total = sum(dagger(k) @ k for k in ops)
            if np.max(np.abs(total - np.eye(2))) > CPTP_TOL:
                raise ValueError("Kraus operators are not trace preserving")
        self.kraus = ops

    @property
    def dim(self) -> int:
        return 2

    def __repr__(self) -> str:
        return f"QuantumChannel(<{len(self.kraus)} Kraus operators>)"

    @classmethod
    def unitary(cls, u) -> QuantumChannel:
        u = qlin.as_matrix(u, dim=2)
        if not qlin.is_unitary(u, CPTP_TOL):
            raise ValueError("matrix is not unitary")
        return cls([u])

    @classmethod
    def from_choi(cls, choi, tol: float = 1e-12) -> QuantumChannel:
        """Minimal Kraus representation recovered from a Choi state."""
        w, v = np.linalg.eigh(qlin.as_matrix(choi, dim=4))
        ops = [sqrt(2 * lam) * v[:, i].reshape(2, 2) for i, lam in enumerate(w) if lam > tol]
        return cls(ops)

    def apply(self, rho) -> np.ndarray:
        rho = qlin.as_matrix(rho, dim=2)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def apply_batch(self, rhos: np.ndarray) -> np.ndarray:
        """Apply to a stack of density matrices with shape ``(n, 2, 2)``."""
        ks = np.stack(self.kraus)
        return np.einsum("kab,nbc,kdc->nad", ks, rhos, ks.conj(), optimize=True)

    def compose(self, inner: QuantumChannel) -> QuantumChannel:
        """``self o inner``: apply ``inner`` first."""
        return compose(self, inner)

    def choi(self) -> np.ndarray:
        return choi(self)

    def compacted(self) -> QuantumChannel:
        """Equivalent channel with at most four Kraus operators."""
        if len(self.kraus) <= 4:
            return self
        return QuantumChannel.from_choi(self.choi())

    def is_unitary(self) -> bool:
        return len(self.kraus) == 1 and qlin.is_unitary(self.kraus[0], CPTP_TOL)

    def is_unital(self, tol: float = CPTP_TOL) -> bool:
        total = sum(k @ dagger(k) for k in self.kraus)
        return bool(np.max(np.abs(total - np.eye(2))) <= tol)


@dataclass(frozen=True)
class PauliChannel:
    """``rho -> sum_m probs[m] P_m rho P_m`` with ``P = (I, X, Y, Z)``."""

    probs: tuple[float, float, float, float]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != 4:
            raise ValueError("a Pauli channel has exactly four probabilities")
        if any(p < -1e-15 or p > 1 + 1e-15 for p in probs):
            raise ValueError(f"Pauli probabilities out of range: {probs}")
        if abs(sum(probs) - 1) > 1e-12:
            raise ValueError(f"Pauli probabilities sum to {sum(probs)!r}")
        object.__setattr__(self, "probs", tuple(min(max(p, 0.0), 1.0) for p in probs))

    @classmethod
    def depolarizing(cls, p: float) -> PauliChannel:
        """Pauli form of ``p rho + (1 - p) I/2``; valid for ``-1/3 <= p <= 1``."""
        e = (1 - p) / 4
        return cls((p + e, e, e, e))

    @classmethod
    def from_channel(cls, ch: QuantumChannel) -> PauliChannel:
        """Pauli-twirled version of an arbitrary channel."""
        probs = [sum(abs(np.trace(pm @ k)) ** 2 for k in ch.kraus) / 4 for pm in PAULIS]
        return cls(tuple(probs))

    def to_channel(self) -> QuantumChannel:
        return QuantumChannel([sqrt(p) * pm for p, pm in zip(self.probs, PAULIS) if p > 0])

    def compose(self, inner: PauliChannel) -> PauliChannel:
        out = [0.0] * 4
        for a, pa in enumerate(self.probs):
            for b, pb in enumerate(inner.probs):
                out[_PAULI_PRODUCT[a][b]] += pa * pb
        return PauliChannel(tuple(out))

    def avg_fidelity(self) -> float:
        return (2 * self.probs[0] + 1) / 3


def _pauli_product_table() -> list[list[int]]:
    table = []
    for a in PAULIS:
        row = []
        for b in PAULIS:
            prod = a @ b
            row.append(int(np.argmax([abs(np.trace(dagger(c) @ prod)) for c in PAULIS])))
        table.append(row)
    return table


_PAULI_PRODUCT = _pauli_product_table()


def identity_channel() -> QuantumChannel:
    return QuantumChannel([qlin.I2])


def unitary_channel(u) -> QuantumChannel:
    return QuantumChannel.unitary(u)


def _check_unit_interval(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def depolarizing(p: float) -> QuantumChannel:
    """``D(rho) = p rho + (1 - p) I/2``."""
    p = _check_unit_interval("p", p)
    return PauliChannel.depolarizing(p).to_channel()


def dephasing(q: float) -> QuantumChannel:
    """``F(rho) = q rho + (1 - q) Z rho Z``."""
    q = _check_unit_interval("q", q)
    return PauliChannel((q, 0.0, 0.0, 1 - q)).to_channel()


def depolarizing_from_fidelity(f: float) -> QuantumChannel:
    return depolarizing(2 * f - 1)


def dephasing_from_fidelity(f: float) -> QuantumChannel:
    return dephasing((3 * f - 1) / 2)


def mixed_unitary(pairs: Sequence[tuple[float, np.ndarray]]) -> QuantumChannel:
    """``rho -> sum_l p_l U_l rho U_l^dagger``."""
    if not pairs:
        raise ValueError("mixed_unitary needs at least one term")
    total = 0.0
    ops = []
    for prob, u in pairs:
        prob = _check_unit_interval("probability", prob)
        u = qlin.as_matrix(u, dim=2)
        if not qlin.is_unitary(u, CPTP_TOL):
            raise ValueError("mixed_unitary element is not unitary")
        total += prob
        if prob > 0:
            ops.append(sqrt(prob) * u)
    if abs(total - 1) > 1e-12:
        raise ValueError(f"mixed_unitary probabilities sum to {total!r}")
    return QuantumChannel(ops)


def apply(ch: QuantumChannel, rho) -> np.ndarray:
    return ch.apply(rho)


def compose(outer: QuantumChannel, inner: QuantumChannel) -> QuantumChannel:
    """``outer o inner`` with Kraus set ``{K_o K_i}``."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    return QuantumChannel([ko @ ki for ko in outer.kraus for ki in inner.kraus], check=False)


def compose_all(channels: Iterable[QuantumChannel]) -> QuantumChannel:
    """Compose in application order: the first channel acts first."""
    out = identity_channel()
    for ch in channels:
        out = compose(ch, out).compacted()
    return out


def choi(ch: QuantumChannel) -> np.ndarray:
    """``(ch (x) id)(|Phi+><Phi+|)``, ordered (output, input copy)."""
    out = np.zeros((4, 4), dtype=complex)
    for k in ch.kraus:
        v = np.kron(k, qlin.I2) @ qlin.PHI_PLUS
        out += np.outer(v, v.conj())
    return out


def entanglement_fidelity(ch: QuantumChannel) -> float:
    return float(sum(abs(np.trace(k)) ** 2 for k in ch.kraus).real / 4)


def avg_fidelity(ch: QuantumChannel) -> float:
    """Haar-averaged ``Tr[ch(psi) psi]``."""
    return (2 * entanglement_fidelity(ch) + 1) / 3


def avg_fidelity_analytic(ch: QuantumChannel, ideal: QuantumChannel) -> float:
    """Average fidelity of ``ch`` against a unitary target ``ideal``."""
    if not ideal.is_unitary():
        raise ValueError("the ideal channel must be unitary")
    undo = QuantumChannel([dagger(ideal.kraus[0])], check=False)
    return avg_fidelity(compose(undo, ch))


def depolarizing_parameter(ch: QuantumChannel) -> float:
    """Parameter ``p`` of the depolarizing channel with the same average fidelity."""
    return 2 * avg_fidelity(ch) - 1


def twirl(ch: QuantumChannel, unitaries: Sequence[np.ndarray]) -> QuantumChannel:
    """Uniform average of ``U^dagger o ch o U`` over ``unitaries``."""
    w = 1 / sqrt(len(unitaries))
    return QuantumChannel([w * dagger(u) @ k @ u for u in unitaries for k in ch.kraus]).compacted()


def clifford_twirl(ch: QuantumChannel) -> QuantumChannel:
    """Clifford twirl of ``ch``, returned as the depolarizing channel it equals."""
    return PauliChannel.depolarizing(depolarizing_parameter(ch)).to_channel()


def teleport_memory(memory: QuantumChannel) -> QuantumChannel:
    """Effective channel seen by a qubit teleported through a stored EPR half.

    Bell outcomes ``m`` occur with probability 1/4 and are undone by the
    Pauli correction, so the memory gets Pauli-twirled.
    """
    return PauliChannel.from_channel(memory).to_channel()


def pushed_epr_noise(noise: QuantumChannel | PauliChannel) -> QuantumChannel:
    """Single-sided channel equivalent to ``noise (x) noise`` acting on ``|Phi+>``.

    Uses ``(A (x) I)|Phi+> = (I (x) A^T)|Phi+>``; the result is trace
    preserving only for unital noise.
    """
    if isinstance(noise, PauliChannel):
        return noise.compose(noise).to_channel()
    if not noise.is_unital():
        raise ValueError("EPR noise must be unital (mixed-unitary)")
    return QuantumChannel([kb @ ka.T for ka in noise.kraus for kb in noise.kraus]).compacted()


def absorb_teleportation_noise(
    bell_noise: QuantumChannel,
    memory: QuantumChannel,
    recovery_noise: QuantumChannel,
    epr_noise: QuantumChannel | PauliChannel,
) -> QuantumChannel:
    """Fold Bell-measurement, recovery and EPR-pair noise into one teleported memory."""
    effective = compose_all([pushed_epr_noise(epr_noise), bell_noise, memory, recovery_noise])
    return teleport_memory(effective)


def diamond_distance_pauli(a: PauliChannel, b: PauliChannel) -> float:
    return float(sum(abs(x - y) for x, y in zip(a.probs, b.probs)))


def diamond_bounds_general(a: QuantumChannel, b: QuantumChannel) -> tuple[float, float]:
    """Lower and upper bounds on the diamond distance between ``a`` and unitary ``b``.

    Lower: trace norm of the Choi difference. Upper: ``2 sqrt(6) sqrt(1 - F)``.
    """
    lower = qlin.trace_norm(choi(a) - choi(b))
    infidelity = max(0.0, 1 - avg_fidelity_analytic(a, b))
    return lower, 2 * sqrt(6) * sqrt(infidelity)


def action_equal(a: QuantumChannel, b: QuantumChannel, tol: float = 1e-9) -> bool:
    for ket in PAULI_KETS:
        rho = qlin.projector(ket)
        if np.max(np.abs(a.apply(rho) - b.apply(rho))) > tol:
            return False
    return True


# Channel literals, e.g. {"kind": "depolarizing", "p": 0.9}.

_NAMED_UNITARIES = {"I": qlin.I2, "X": qlin.X, "Y": qlin.Y, "Z": qlin.Z, "H": qlin.H, "S": qlin.S}


def _matrix_from_literal(value) -> np.ndarray:
    if isinstance(value, str):
        try:
            return _NAMED_UNITARIES[value]
        except KeyError:
            raise ValueError(f"unknown named unitary {value!r}") from None
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2, 2, 2):
        raise ValueError("matrices are written as 2x2 nested lists of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _param(spec: dict, name: str, from_fidelity) -> float:
    if (name in spec) == ("fidelity" in spec):
        raise ValueError(f"{spec['kind']} literal needs exactly one of {name!r} or 'fidelity'")
    if name in spec:
        return float(spec[name])
    return from_fidelity(float(spec["fidelity"]))


def channel_from_literal(spec: dict) -> QuantumChannel:
    """Build a channel from its JSON literal."""
    kind = spec.get("kind")
    allowed = {
        "identity": {"kind"},
        "depolarizing": {"kind", "p", "fidelity"},
        "dephasing": {"kind", "q", "fidelity"},
        "pauli": {"kind", "probs"},
        "mixed_unitary": {"kind", "terms"},
        "unitary": {"kind", "unitary"},
        "kraus": {"kind", "operators"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown channel kind {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ValueError(f"unknown keys for {kind} channel: {sorted(extra)}")
    if kind == "identity":
        return identity_channel()
    if kind == "depolarizing":
        return depolarizing(_param(spec, "p", lambda f: 2 * f - 1))
    if kind == "dephasing":
        return dephasing(_param(spec, "q", lambda f: (3 * f - 1) / 2))
    if kind == "pauli":
        return PauliChannel(tuple(spec["probs"])).to_channel()
    if kind == "mixed_unitary":
        return mixed_unitary([(t["prob"], _matrix_from_literal(t["unitary"])) for t in spec["terms"]])
    if kind == "unitary":
        return unitary_channel(_matrix_from_literal(spec["unitary"]))
    return QuantumChannel([_matrix_from_literal(m) for m in spec["operators"]])
