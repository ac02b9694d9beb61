import numpy as np
import pytest

from voidtherm.jacobi import eigh_jacobi, eigvalsh_jacobi


def test_diagonal_matrix():
    w, V = eigh_jacobi(np.diag([3.0, -1.0, 2.0]))
    assert np.allclose(w, [-1.0, 2.0, 3.0])
    assert np.allclose(np.abs(V), np.eye(3)[:, [1, 2, 0]])


def test_known_2x2():
    # [[1, 2], [2, 1]] has eigenvalues 3 and -1
    w = eigvalsh_jacobi([[1.0, 2.0], [2.0, 1.0]])
    assert np.allclose(w, [-1.0, 3.0], atol=1e-13)


def test_against_reference_solver():
    rng = np.random.default_rng(7)
    for n in (2, 3, 5, 10):
        for _ in range(20):
            A = rng.normal(size=(n, n))
            A = 0.5 * (A + A.T)
            w = eigvalsh_jacobi(A)
            ref = np.linalg.eigvalsh(A)
            assert np.abs(w - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())


def test_eigenvectors_reconstruct():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(6, 6))
    A = 0.5 * (A + A.T)
    w, V = eigh_jacobi(A)
    assert np.allclose(V @ np.diag(w) @ V.T, A, atol=1e-11)
    assert np.allclose(V.T @ V, np.eye(6), atol=1e-12)


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        eigh_jacobi([[0.0, 1.0], [0.0, 0.0]])


def test_zero_matrix():
    w, V = eigh_jacobi(np.zeros((4, 4)))
    assert np.all(w == 0.0)
    assert np.allclose(V, np.eye(4))
