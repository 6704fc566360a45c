import numpy as np
import pytest
from scipy.stats import ortho_group, unitary_group

from core.errors import DimensionError, FeedforwardError, InputError
from core.linalg import (compose_rotations, givens_factor, is_orthogonal, is_unitary, measure_general,
                         measure_symmetric, p_of_k, sigma_matrix, svd, transmittances, unitary_ofo)


def _symmetric(rng, n):
    A = rng.normal(size=(n, n))
    return (A + A.T) / 2


@pytest.mark.parametrize('shape', [(3, 2), (2, 3), (4, 4), (1, 3)])
def test_svd_reconstructs_and_orders(rng, shape):
    K = rng.normal(size=shape)
    O_prime, sigma, O = svd(K)
    assert is_orthogonal(O_prime)
    assert is_orthogonal(O)
    assert np.all(np.diff(sigma) <= 0)
    assert np.allclose(O_prime.T @ sigma_matrix(sigma, shape) @ O, K)


def test_svd_is_deterministic(rng):
    K = rng.normal(size=(3, 3))
    first = svd(K)
    second = svd(K.copy())
    for a, b in zip(first, second):
        assert np.array_equal(a, b)


def test_p_of_k_is_inverse_square_root(rng):
    K = rng.normal(size=(3, 2))
    P = p_of_k(K)
    G = np.eye(2) + K.T @ K
    assert np.allclose(P, P.T)
    assert np.allclose(P @ G @ P, np.eye(2))


def test_transmittances():
    t, r = transmittances(np.array([0.5, 2.0]), 3)
    assert np.allclose(t ** 2 + r ** 2, 1.0)
    assert np.allclose(r[:2] / t[:2], [0.5, 2.0])
    assert t[2] == 1.0 and r[2] == 0.0


def test_measure_symmetric_reconstructs(rng):
    A = _symmetric(rng, 3)
    plan = measure_symmetric(A)
    B, C = plan.reconstruct()
    assert plan.kind == 'symmetric'
    assert is_orthogonal(plan.network)
    assert np.allclose(B, np.eye(3))
    assert np.allclose(C, A)


def test_measure_symmetric_rejects_bad_input():
    with pytest.raises(InputError):
        measure_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        measure_symmetric(np.zeros((2, 3)))
    with pytest.raises(FeedforwardError):
        measure_symmetric(np.diag([1.0, 1e13]))


def test_unitary_ofo_factorization():
    U = unitary_group.rvs(3, random_state=7)
    O2, phi, O = unitary_ofo(U)
    assert is_orthogonal(O2)
    assert is_orthogonal(O)
    assert np.all(phi > -np.pi / 2) and np.all(phi <= np.pi / 2)
    assert np.allclose(O2 @ np.diag(np.exp(1j * phi)) @ O, U)


def test_unitary_ofo_rejects_non_unitary():
    with pytest.raises(InputError):
        unitary_ofo(np.array([[1.0, 1.0], [0.0, 1.0]]))


@pytest.mark.parametrize('B, C', [
    (np.eye(2), np.array([[1.0, 0.5], [0.5, -2.0]])),
    (2 * np.eye(2), np.zeros((2, 2))),
    (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])),
])
def test_measure_general_reconstructs(B, C):
    plan = measure_general(B, C)
    B_out, C_out = plan.reconstruct()
    assert plan.kind == 'general'
    assert np.allclose(B_out, B, atol=1e-8)
    assert np.allclose(C_out, C, atol=1e-8)


def test_measure_general_rejects_non_commuting_rows():
    with pytest.raises(InputError):
        measure_general(np.diag([1.0, 0.0]), np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_givens_factor_recomposes():
    O = ortho_group.rvs(4, random_state=3)
    rotations, signs = givens_factor(O)
    assert all(rot.mode_b == rot.mode_a + 1 for rot in rotations)
    assert len(rotations) <= 6
    assert np.allclose(compose_rotations(rotations, signs), O)


def test_givens_factor_of_identity_is_empty():
    rotations, signs = givens_factor(np.eye(3))
    assert rotations == []
    assert np.array_equal(signs, np.ones(3))


def test_givens_factor_rejects_non_orthogonal():
    with pytest.raises(InputError):
        givens_factor(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_unitary_and_orthogonal_predicates():
    assert is_unitary(np.diag([1j, -1.0]))
    assert not is_unitary(np.diag([2.0, 1.0]))
    assert not is_orthogonal(np.ones((2, 3)))
