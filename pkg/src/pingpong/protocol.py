"""Teleportation-based ping-pong test: sampling, noisy evolution and transcripts.

An execution samples a depth ``kappa`` in ``1..k``, a Pauli eigenstate and a
string of ``kappa`` Cliffords. Round ``j`` passes the qubit through the
effective teleported memory, then the gate noise, then the ideal Clifford.
The verifier's accept probability is the overlap with the ideally evolved
state, and the recorded bit is drawn from it.

Randomness is counter based: record ``i`` draws from a Philox stream keyed
by ``(seed, (i - 1) // BLOCK_SIZE)`` at a fixed offset, so a record does not
depend on ``n``, on other records, or on how blocks are scheduled.
"""

from __future__ import annotations

import hashlib
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from . import channels, designs, qlin
from .channels import QuantumChannel

BLOCK_SIZE = 8192
N_STATES = 6
N_CLIFFORDS = designs.CLIFFORD_COUNT
# accept probabilities this close to 0 or 1 are snapped to the endpoint
SNAP_TOL = 1e-12
MAX_SEED = 2**64 - 1

STATE_KETS = np.stack(qlin.PAULI_KETS)


def clifford_array() -> np.ndarray:
    return designs.enumerate_cliffords().as_array()


@dataclass(frozen=True)
class RoundNoise:
    memory: QuantumChannel = field(default_factory=channels.identity_channel)
    gate_noise: QuantumChannel = field(default_factory=channels.identity_channel)

    def combined(self) -> QuantumChannel:
        """``gate_noise o memory``."""
        return channels.compose(self.gate_noise, self.memory).compacted()


@dataclass(frozen=True)
class TestConfig:
    """Parameters of one run of the test.

    ``rounds`` may be given with a single entry, which is then used for every
    round. ``timing`` is opaque metadata and only enters the digest.
    """

    __test__ = False  # not a pytest class

    k: int
    n: int
    seed: int = 0
    rounds: tuple[RoundNoise, ...] = (RoundNoise(),)
    input_noise: QuantumChannel | None = None
    measurement_noise: QuantumChannel | None = None
    timing: dict | None = None

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError("seed must be an unsigned 64-bit integer")
        rounds = tuple(self.rounds)
        if len(rounds) == 1:
            rounds = rounds * self.k
        if len(rounds) != self.k:
            raise ValueError(f"expected {self.k} rounds of noise, got {len(rounds)}")
        object.__setattr__(self, "rounds", rounds)

    @classmethod
    def from_dict(cls, d: dict) -> TestConfig:
        """Build from the JSON form used in config files."""
        allowed = {"k", "n", "seed", "rounds", "round", "input_noise", "measurement_noise", "timing"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "rounds" in d and "round" in d:
            raise ValueError("give either 'rounds' or 'round', not both")

        def parse_round(r: dict, where: str) -> RoundNoise:
            unknown = set(r) - {"memory", "gate_noise"}
            if unknown:
                raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
            try:
                return RoundNoise(
                    memory=channels.channel_from_literal(r.get("memory", {"kind": "identity"})),
                    gate_noise=channels.channel_from_literal(r.get("gate_noise", {"kind": "identity"})),
                )
            except ValueError as exc:
                raise ValueError(f"{where}: {exc}") from None

        if "rounds" in d:
            rounds = tuple(parse_round(r, f"rounds[{j}]") for j, r in enumerate(d["rounds"]))
        else:
            rounds = (parse_round(d.get("round", {}), "round"),)
        optional = {}
        for key in ("input_noise", "measurement_noise"):
            if d.get(key) is not None:
                try:
                    optional[key] = channels.channel_from_literal(d[key])
                except ValueError as exc:
                    raise ValueError(f"{key}: {exc}") from None
        return cls(
            k=d["k"], n=d["n"], seed=d.get("seed", 0), rounds=rounds, timing=d.get("timing"), **optional
        )

    def with_seed(self, seed: int) -> TestConfig:
        return TestConfig(self.k, self.n, seed, self.rounds, self.input_noise, self.measurement_noise, self.timing)

    def digest(self) -> str:
        """SHA-256 over a canonical rendering of every field."""

        def chan(c: QuantumChannel | None):
            if c is None:
                return None
            m = c.choi()
            return [f"{x:.12e}" for x in np.concatenate([m.real.ravel(), m.imag.ravel()]) + 0.0]

        payload = {
            "k": int(self.k),
            "n": int(self.n),
            "seed": int(self.seed),
            "rounds": [[chan(r.memory), chan(r.gate_noise)] for r in self.rounds],
            "input_noise": chan(self.input_noise),
            "measurement_noise": chan(self.measurement_noise),
            "timing": self.timing,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class ExecutionRecord:
    i: int
    kappa: int
    state_idx: int
    gate_idxs: tuple[int, ...]
    success_prob: float
    v: int


@dataclass
class Transcript:
    """Column-oriented record of ``n`` executions.

    ``gates`` has shape ``(n, k)``; entries past a record's depth are -1.
    """

    config_digest: str
    seed: int
    k: int
    kappa: np.ndarray
    state_idx: np.ndarray
    gates: np.ndarray
    success_prob: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return len(self.kappa)

    @property
    def records(self) -> Iterator[ExecutionRecord]:
        for i in range(self.n):
            yield self.record(i + 1)

    def record(self, i: int) -> ExecutionRecord:
        r = i - 1
        kappa = int(self.kappa[r])
        return ExecutionRecord(
            i=i,
            kappa=kappa,
            state_idx=int(self.state_idx[r]),
            gate_idxs=tuple(int(g) for g in self.gates[r, :kappa]),
            success_prob=float(self.success_prob[r]),
            v=int(self.v[r]),
        )

    def header(self) -> str:
        return f"#config_digest={self.config_digest},seed={self.seed},k={self.k},n={self.n}"

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(self.header() + "\n")
        for r in range(self.n):
            kappa = int(self.kappa[r])
            gates = "-".join(str(int(g)) for g in self.gates[r, :kappa])
            buf.write(
                f"{r + 1},{kappa},{int(self.state_idx[r])},{gates},{self.success_prob[r]:.12g},{int(self.v[r])}\n"
            )
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), newline="\n")

    @classmethod
    def loads(cls, text: str) -> Transcript:
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("transcript is missing its header line")
        meta = dict(item.split("=", 1) for item in lines[0][1:].split(","))
        k, n = int(meta["k"]), int(meta["n"])
        rows = [line.split(",") for line in lines[1:] if line]
        if len(rows) != n:
            raise ValueError(f"header announces {n} records, found {len(rows)}")
        gates = np.full((n, k), -1, dtype=np.int64)
        for r, row in enumerate(rows):
            if int(row[0]) != r + 1:
                raise ValueError(f"record {r + 1} is out of order")
            g = [int(x) for x in row[3].split("-")]
            gates[r, : len(g)] = g
        return cls(
            config_digest=meta["config_digest"],
            seed=int(meta["seed"]),
            k=k,
            kappa=np.array([int(row[1]) for row in rows], dtype=np.int64),
            state_idx=np.array([int(row[2]) for row in rows], dtype=np.int64),
            gates=gates,
            success_prob=np.array([float(row[4]) for row in rows]),
            v=np.array([int(row[5]) for row in rows], dtype=np.int64),
        )

    @classmethod
    def read(cls, path: str | Path) -> Transcript:
        return cls.loads(Path(path).read_text())


# -- sampling ---------------------------------------------------------------


@dataclass(frozen=True)
class BlockDraws:
    kappa: np.ndarray
    state_idx: np.ndarray
    gates: np.ndarray
    uniform: np.ndarray


def draw_block(seed: int, block: int, k: int) -> BlockDraws:
    """All random choices for executions ``block*BLOCK_SIZE + 1 ..``."""
    key = np.array([seed, block], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    kappa = gen.integers(1, k + 1, BLOCK_SIZE)
    state_idx = gen.integers(0, N_STATES, BLOCK_SIZE)
    gates = gen.integers(0, N_CLIFFORDS, (BLOCK_SIZE, k))
    uniform = gen.random(BLOCK_SIZE)
    return BlockDraws(kappa, state_idx, gates, uniform)


def snap_probabilities(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    p[p > 1 - SNAP_TOL] = 1.0
    p[p < SNAP_TOL] = 0.0
    return p


def _conjugate(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return u @ rho @ qlin.dagger(u)


def _overlap(kets: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("na,nab,nb->n", kets.conj(), rho, kets))


def honest_success_probs(cfg: TestConfig, kappa, state_idx, gates) -> np.ndarray:
    """Accept probabilities for a batch of sampled executions."""
    cliffs = clifford_array()
    kets = STATE_KETS[state_idx]
    rho = np.einsum("na,nb->nab", kets, kets.conj())
    if cfg.input_noise is not None:
        rho = cfg.input_noise.apply_batch(rho)
    ideal = kets
    rows = np.arange(len(kappa))
    out = np.empty(len(kappa))
    for j, rnd in enumerate(cfg.rounds):
        if len(rows) == 0:
            break
        u = cliffs[gates[rows, j]]
        rho = _conjugate(u, rnd.gate_noise.apply_batch(rnd.memory.apply_batch(rho)))
        ideal = np.einsum("nab,nb->na", u, ideal)
        done = kappa[rows] == j + 1
        if done.any():
            final = rho[done]
            if cfg.measurement_noise is not None:
                final = cfg.measurement_noise.apply_batch(final)
            out[rows[done]] = _overlap(ideal[done], final)
        keep = ~done
        rows, rho, ideal = rows[keep], rho[keep], ideal[keep]
    return snap_probabilities(out)


SuccessFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def run_block(cfg: TestConfig, success_fn: SuccessFn, b: int):
    """Columns of block ``b``; both full runs and single-record replays go through here."""
    d = draw_block(cfg.seed, b, cfg.k)
    m = min(BLOCK_SIZE, cfg.n - b * BLOCK_SIZE)
    kappa, state_idx, gates = d.kappa[:m], d.state_idx[:m], d.gates[:m]
    p = success_fn(kappa, state_idx, gates)
    v = (d.uniform[:m] < p).astype(np.int64)
    gates = np.where(np.arange(cfg.k)[None, :] < kappa[:, None], gates, -1)
    return kappa, state_idx, gates, p, v


def simulate(cfg: TestConfig, success_fn: SuccessFn, jobs: int = 1) -> Transcript:
    """Run ``cfg.n`` executions, scoring each sampled tuple with ``success_fn``."""
    n_blocks = -(-cfg.n // BLOCK_SIZE)
    blocks = range(n_blocks)
    if jobs > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda b: run_block(cfg, success_fn, b), blocks))
    else:
        parts = [run_block(cfg, success_fn, b) for b in blocks]
    cols = [np.concatenate(c) for c in zip(*parts)]
    return Transcript(cfg.digest(), cfg.seed, cfg.k, *cols)


def replay_execution(cfg: TestConfig, success_fn: SuccessFn, i: int) -> ExecutionRecord:
    """Record ``i`` (1-based) bit-identical to its row in ``simulate``.

    The whole containing block is rescored, since batched arithmetic may
    round differently for a batch of one.
    """
    if not 1 <= i <= cfg.n:
        raise ValueError(f"execution index {i} outside 1..{cfg.n}")
    b, r = divmod(i - 1, BLOCK_SIZE)
    kappa, state_idx, gates, p, v = run_block(cfg, success_fn, b)
    kap = int(kappa[r])
    return ExecutionRecord(
        i=i,
        kappa=kap,
        state_idx=int(state_idx[r]),
        gate_idxs=tuple(int(g) for g in gates[r, :kap]),
        success_prob=float(p[r]),
        v=int(v[r]),
    )


def run_test(cfg: TestConfig, jobs: int = 1) -> Transcript:
    return simulate(cfg, lambda kap, st, g: honest_success_probs(cfg, kap, st, g), jobs)


def run_execution(cfg: TestConfig, i: int) -> ExecutionRecord:
    """Execution ``i`` (1-based) exactly as it appears in ``run_test(cfg)``."""
    return replay_execution(cfg, lambda kap, st, g: honest_success_probs(cfg, kap, st, g), i)


# -- exact success probabilities --------------------------------------------


def analytic_success_prob(cfg: TestConfig) -> float:
    """Exact average accept probability from the Clifford-twirl identity.

    Averaging over the Cliffords turns each round's noise into a depolarizing
    channel with parameter ``p_j = 2 F_j - 1``; depolarizing parameters
    multiply under composition, and a depolarizing channel with parameter
    ``P`` has fidelity ``(1 + P) / 2``.
    """
    chain = 1.0
    if cfg.measurement_noise is not None:
        chain = channels.depolarizing_parameter(cfg.measurement_noise)
    total = 0.0
    for j, rnd in enumerate(cfg.rounds):
        noise = rnd.combined()
        if j == 0 and cfg.input_noise is not None:
            # no Clifford separates the input noise from round 1, so they are twirled together
            noise = channels.compose(noise, cfg.input_noise)
        chain *= channels.depolarizing_parameter(noise)
        total += (1 + chain) / 2
    return total / cfg.k


def product_fidelity(cfg: TestConfig) -> float:
    """``(1/k) sum_kappa prod_j F_j``, the per-round fidelity product.

    This is a lower bound on :func:`analytic_success_prob`; the two agree
    only when every round is noiseless.
    """
    total = 0.0
    chain = 1.0
    for rnd in cfg.rounds:
        chain *= channels.avg_fidelity(rnd.combined())
        total += chain
    return total / cfg.k


def _liouville(ch: QuantumChannel) -> np.ndarray:
    # row-major vectorisation: vec(K rho K^+) = (K (x) conj K) vec(rho)
    return sum(np.kron(k, k.conj()) for k in ch.kraus)


def exact_depth_fidelity(
    rounds: Sequence[RoundNoise],
    kappa: int,
    input_noise: QuantumChannel | None = None,
    measurement_noise: QuantumChannel | None = None,
    max_strings: int = 24**3,
) -> float:
    """Accept probability at fixed depth, averaged over all states and Clifford strings.

    Enumerates every string directly; used as the reference for the
    twirl-based formula.
    """
    if N_CLIFFORDS**kappa > max_strings:
        raise ValueError(f"depth {kappa} is too large for enumeration")
    ident = np.eye(4, dtype=complex)
    cliff_l = [np.kron(u, u.conj()) for u in designs.enumerate_cliffords().elements]
    pre = _liouville(input_noise) if input_noise is not None else ident
    post = _liouville(measurement_noise) if measurement_noise is not None else ident
    noise_l = [_liouville(r.gate_noise) @ _liouville(r.memory) for r in rounds[:kappa]]
    cliffs = designs.enumerate_cliffords().elements
    kets = [qlin.projector(k).reshape(-1) for k in qlin.PAULI_KETS]
    total = 0.0
    for string in itertools.product(range(N_CLIFFORDS), repeat=kappa):
        sup = pre
        ideal = qlin.I2
        for j, g in enumerate(string):
            sup = cliff_l[g] @ noise_l[j] @ sup
            ideal = cliffs[g] @ ideal
        sup = post @ sup
        for vec, ket in zip(kets, qlin.PAULI_KETS):
            target = ideal @ ket
            out = (sup @ vec).reshape(2, 2)
            total += np.real(target.conj() @ out @ target)
    return total / (N_STATES * N_CLIFFORDS**kappa)


def exact_success_prob_bruteforce(cfg: TestConfig, max_k: int = 2) -> float:
    """Brute-force average accept probability over depths, states and strings."""
    if cfg.k > max_k:
        raise ValueError(f"k={cfg.k} exceeds the enumeration budget (k <= {max_k})")
    return sum(
        exact_depth_fidelity(cfg.rounds, kap, cfg.input_noise, cfg.measurement_noise)
        for kap in range(1, cfg.k + 1)
    ) / cfg.k
