import hashlib
import itertools

import numpy as np
import pytest

from pingpong import channels, designs, qlin

from conftest import random_channel

SIGNED_PAULIS = [s * p for p in (qlin.X, qlin.Y, qlin.Z) for s in (1, -1)]


@pytest.fixture(scope="module")
def group():
    return designs.enumerate_cliffords()


def test_size_and_identity(group):
    assert len(group) == 24 == designs.CLIFFORD_COUNT
    assert np.allclose(group[0], qlin.I2)
    assert group.index_of(qlin.I2) == 0


def test_each_element_permutes_signed_paulis(group):
    for u in group.elements:
        assert qlin.is_unitary(u)
        for p in (qlin.X, qlin.Y, qlin.Z):
            conj = u @ p @ u.conj().T
            assert any(np.allclose(conj, q) for q in SIGNED_PAULIS)


def test_z_images_cover_all_signed_paulis(group):
    images = set()
    for u in group.elements:
        conj = u @ qlin.Z @ u.conj().T
        images.add(next(i for i, q in enumerate(SIGNED_PAULIS) if np.allclose(conj, q)))
    assert images == set(range(6))


def test_elements_distinct_up_to_phase(group):
    for a, b in itertools.combinations(group.elements, 2):
        # |Tr(a^+ b)| = 2 iff equal up to phase
        assert abs(np.trace(a.conj().T @ b)) < 2 - 1e-9


def test_multiplication_table_is_latin_square(group):
    table = group.multiplication_table()
    assert table.shape == (24, 24)
    for row in table:
        assert sorted(row) == list(range(24))
    for col in table.T:
        assert sorted(col) == list(range(24))


def test_ordering_follows_canonical_rule(group):
    # independent closure: breadth-first over words in H and S
    found = {}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for u in frontier:
            c = designs.canonical_phase(u)
            key = tuple(np.round(np.concatenate([c.real.ravel(), c.imag.ravel()]), 9))
            if key in found:
                continue
            found[key] = c
            nxt += [qlin.H @ c, qlin.S @ c]
        frontier = nxt
    assert len(found) == 24
    for u in group.elements:
        assert np.allclose(designs.canonical_phase(u), u)
        assert any(np.allclose(u, v) for v in found.values())
    keys = [designs._key(u) for u in group.elements]
    assert keys == sorted(keys, reverse=True)


def test_ordering_is_frozen(group):
    # transcripts store gate indices, so the order must never change
    blob = ";".join(",".join(f"{x:.6f}" for x in designs._key(u)) for u in group.elements)
    assert hashlib.sha256(blob.encode()).hexdigest()[:16] == FROZEN_ORDER_DIGEST


FROZEN_ORDER_DIGEST = "1bd01f0e454bef62"


def test_state_2design_examples():
    assert designs.verify_state_2design(designs.PauliStateSet())
    broken = list(qlin.PAULI_KETS)
    broken[1] = qlin.KET_0
    assert not designs.verify_state_2design(designs.PauliStateSet(tuple(broken)))
    assert designs.verify_state_2design(designs.tetrahedral_states())


def test_pauli_state_pairwise_fidelities():
    for a, b in itertools.combinations(range(6), 2):
        f = abs(np.vdot(qlin.PAULI_KETS[a], qlin.PAULI_KETS[b])) ** 2
        expected = 0.0 if a // 2 == b // 2 else 0.5
        assert f == pytest.approx(expected, abs=1e-12)


def test_unitary_2design_examples(group):
    assert designs.verify_unitary_2design(group, channels.identity_channel())
    assert designs.verify_unitary_2design(group, channels.dephasing(0.3))
    truncated = [qlin.I2, qlin.H]
    assert not designs.verify_unitary_2design(truncated, channels.dephasing(0.3))


def test_pauli_group_is_not_a_unitary_2design():
    assert not designs.verify_unitary_2design(list(qlin.PAULIS), channels.dephasing(0.3))


def test_haar_state_norms(rng):
    states = designs.haar_random_state(rng, 1000)
    assert np.max(np.abs(np.linalg.norm(states, axis=1) - 1)) <= 1e-12
    assert abs(np.linalg.norm(designs.haar_random_state(rng)) - 1) <= 1e-12


def test_haar_state_moment(rng):
    n = 10**6
    x = np.abs(designs.haar_random_state(rng, n)[:, 0]) ** 2
    sigma = np.sqrt(1 / 12)  # |<0|psi>|^2 is uniform on [0, 1]
    assert abs(x.mean() - 0.5) <= 3 * sigma / np.sqrt(n)


def test_haar_unitary_moment(rng):
    n = 10**6
    u = designs.haar_random_unitary(rng, n)
    assert np.allclose(np.einsum("nij,nkj->nik", u, u.conj())[:5], np.eye(2))
    x = np.abs(u[:, 0, 0]) ** 2
    sigma = np.sqrt(1 / 12)
    assert abs(x.mean() - 0.5) <= 3 * sigma / np.sqrt(n)


def test_discrete_average_matches_analytic(rng):
    for _ in range(100):
        ch = random_channel(rng)
        assert abs(designs.discrete_avg_fidelity(ch) - channels.avg_fidelity(ch)) <= 1e-10


def test_monte_carlo_haar_average_matches_discrete(rng):
    ch = random_channel(rng)
    kets = designs.haar_random_state(rng, 10**5)
    rhos = np.einsum("na,nb->nab", kets, kets.conj())
    vals = np.real(np.einsum("na,nab,nb->n", kets.conj(), ch.apply_batch(rhos), kets))
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - designs.discrete_avg_fidelity(ch)) <= 5 * se
