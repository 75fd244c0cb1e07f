import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biququart import linalg

X = np.array([[0, 1], [1, 0]], dtype=complex)


def gram_schmidt_unitary(rng, n):
    """Independent unitary: orthonormalize random complex columns by hand."""
    cols = []
    for _ in range(n):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for c in cols:
            v = v - np.vdot(c, v) * c
        cols.append(v / np.linalg.norm(v))
    return np.column_stack(cols)


mat2 = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4).map(lambda z: np.array(z).reshape(2, 2))


def test_kron_identity():
    assert np.array_equal(linalg.kron(linalg.I2, linalg.I2), np.eye(4))


def test_kron_x_identity_swaps_row_pairs():
    expected = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert np.array_equal(linalg.kron(X, linalg.I2), expected)


def test_kron_blocks(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    k = linalg.kron(a, b)
    for i in range(2):
        for j in range(2):
            assert np.array_equal(k[2 * i:2 * i + 2, 2 * j:2 * j + 2], a[i, j] * b)


def test_kron_rejects_wrong_shape():
    with pytest.raises(ValueError):
        linalg.kron(np.eye(3), np.eye(2))


def test_outputs_are_read_only():
    k = linalg.kron(X, X)
    with pytest.raises(ValueError):
        k[0, 0] = 5


def test_apply_identity(rng):
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert np.array_equal(linalg.apply(linalg.I4, v), v)


def test_apply_swap_matrix_on_vv():
    g = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert np.array_equal(linalg.apply(g, [0, 0, 0, 1]), [0, 1, 0, 0])


def test_apply_preserves_norm_for_unitary(rng):
    for _ in range(20):
        u = gram_schmidt_unitary(rng, 4)
        assert linalg.is_unitary(u)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        assert abs(np.linalg.norm(linalg.apply(u, v)) - 1) <= 1e-12


def test_random_unitary_is_unitary(rng):
    for dim in (2, 4):
        assert linalg.unitarity_error(linalg.random_unitary(dim, rng)) <= 1e-12


@given(mat2)
def test_adjoint_involution(m):
    assert np.array_equal(linalg.adjoint(linalg.adjoint(m)), m)


@settings(max_examples=50)
@given(mat2, mat2, mat2, mat2)
def test_mixed_product(a, b, c, d):
    lhs = linalg.kron(a, b) @ linalg.kron(c, d)
    rhs = linalg.kron(a @ c, b @ d)
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_kron_with_identity_padding_is_associative(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    left = np.kron(linalg.kron(a, linalg.I2), linalg.I2)
    right = np.kron(a, linalg.kron(linalg.I2, linalg.I2))
    assert np.array_equal(left, right)


def test_unitarity_preserved_under_kron_and_product(rng):
    u1, u2, u3, u4 = (gram_schmidt_unitary(rng, 2) for _ in range(4))
    k = linalg.kron(u1, u2) @ linalg.kron(u3, u4)
    assert linalg.is_unitary(k)


def test_equal_up_to_phase():
    assert linalg.equal_up_to_phase(np.exp(0.7j) * linalg.I4, linalg.I4)
    assert not linalg.equal_up_to_phase(linalg.kron(X, linalg.I2), linalg.I4)
