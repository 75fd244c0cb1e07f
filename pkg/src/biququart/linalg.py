"""Small dense complex linear algebra for 2- and 4-dimensional spaces.

Everything here works on plain numpy arrays whose shape is checked at the
boundary. Returned arrays are marked read-only so they can be shared freely.
"""

from __future__ import annotations

import numpy as np

ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (I2, I4, PAULI_X, PAULI_Y, PAULI_Z):
    _m.setflags(write=False)


def frozen(a) -> np.ndarray:
    """Return a read-only complex copy of ``a``."""
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def as_matrix(m, dim: int) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
    return m


def as_vector(v, dim: int = 4) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape != (dim,):
        raise ValueError(f"expected a length-{dim} vector, got shape {v.shape}")
    return v


def kron(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 matrices; block (i, j) is ``a[i, j] * b``."""
    a = as_matrix(a, 2)
    b = as_matrix(b, 2)
    out = np.empty((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = a[i, j] * b
    out.setflags(write=False)
    return out


def adjoint(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return frozen(m.conj().T)


def apply(m, v) -> np.ndarray:
    """Matrix-vector product on the ququart space."""
    return frozen(as_matrix(m, 4) @ as_vector(v, 4))


def unitarity_error(m) -> float:
    """max-abs entry of ``M^dagger M - I``."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    return float(np.max(np.abs(m.conj().T @ m - np.eye(n))))


def is_unitary(m, atol: float = ATOL) -> bool:
    return unitarity_error(m) <= atol


def is_hermitian(m, atol: float = ATOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T))) <= atol


def phase_insensitive_overlap(a, b) -> float:
    """|Tr(A^dagger B)| / n; equals 1 iff unitaries A and B agree up to a global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(abs(np.trace(a.conj().T @ b)) / a.shape[0])


def equal_up_to_phase(a, b, atol: float = 1e-9) -> bool:
    return abs(phase_insensitive_overlap(a, b) - 1.0) <= atol


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return frozen(q * (d / np.abs(d)))
