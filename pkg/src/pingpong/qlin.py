"""Small dense complex linear algebra for qubit states, channels and Choi matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` with shape
``(2, 2)`` or ``(4, 4)``. Two-qubit objects are ordered (system, ancilla).
"""

from __future__ import annotations

import numpy as np

#: Tolerance for structural invariants of values produced by this package.
STRUCT_TOL = 1e-10
#: Tolerance for validating caller-supplied inputs.
INPUT_TOL = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
PAULIS = (I2, X, Y, Z)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
# |Phi+> = (|00> + |11>) / sqrt(2)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def as_matrix(a, dim: int | None = None) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def is_unitary(a, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(m @ dagger(m) - np.eye(m.shape[0]))) <= tol)


def is_psd(a, tol: float = STRUCT_TOL) -> bool:
    return is_hermitian(a, tol) and bool(hermitian_eigenvalues(a)[0] >= -tol)


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` of two square matrices of equal dimension."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def hermitian_eigenvalues(a) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, sorted ascending.

    The 2x2 case uses the closed-form roots of the characteristic
    polynomial; 4x4 goes through LAPACK.
    """
    m = as_matrix(a)
    if not is_hermitian(m, INPUT_TOL):
        raise ValueError("matrix is not Hermitian")
    m = (m + dagger(m)) / 2
    if m.shape[0] == 2:
        a00, a11 = m[0, 0].real, m[1, 1].real
        mean = (a00 + a11) / 2
        radius = np.hypot((a00 - a11) / 2, abs(m[0, 1]))
        return np.array([mean - radius, mean + radius])
    return np.linalg.eigvalsh(m)


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(hermitian_eigenvalues(a))))


def partial_trace_second(a) -> np.ndarray:
    """Trace out the second (ancilla) qubit of a 4x4 operator."""
    m = as_matrix(a, dim=4)
    return np.einsum("ikjk->ij", m.reshape(2, 2, 2, 2))


def projector(ket) -> np.ndarray:
    v = np.asarray(ket, dtype=complex)
    return np.outer(v, v.conj())


def check_density_matrix(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    """Return ``rho`` as an array after checking Hermiticity, unit trace and PSD."""
    m = as_matrix(rho)
    if not is_hermitian(m, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(m) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(m).real:.3g}")
    if hermitian_eigenvalues(m)[0] < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return m


def check_pure_state(ket, tol: float = 1e-12) -> np.ndarray:
    v = np.asarray(ket, dtype=complex)
    if v.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ValueError("state vector is not normalized")
    return v


# Pauli eigenstates in the fixed order |0>, |1>, |+>, |->, |+i>, |-i>.
PAULI_KETS = (
    KET_0,
    KET_1,
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, -1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
    np.array([1, -1j], dtype=complex) / np.sqrt(2),
)
