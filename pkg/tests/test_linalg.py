import numpy as np
import pytest

from workfluct.linalg import (
    DivergenceError,
    MatrixValidationError,
    as_density,
    as_hermitian,
    as_unitary,
    eig_hermitian,
    func_hermitian,
    matrix_from_json,
    matrix_to_json,
    relative_entropy,
    schatten_inf_norm,
)
from conftest import random_density, random_hermitian, random_unitary


def test_eig_diagonal_reorders():
    spec = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(spec.eigenvalues, [1.0, 2.0, 3.0])
    # standard basis vectors come back permuted, phase-fixed to +1
    assert np.allclose(np.abs(spec.eigenvectors), np.eye(3)[:, [1, 2, 0]])
    assert np.allclose(spec.eigenvectors, np.abs(spec.eigenvectors))


def test_eig_pauli_x():
    spec = eig_hermitian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(spec.eigenvalues, [-1.0, 1.0])
    s = 1.0 / np.sqrt(2.0)
    assert np.allclose(np.abs(spec.eigenvectors), s)
    # phase convention: first components real positive
    assert spec.eigenvectors[0, 0].real > 0
    assert spec.eigenvectors[0, 1].real > 0


def test_eig_reconstruction_random(rng):
    A = random_hermitian(rng, 8, norm=3.0)
    spec = eig_hermitian(A)
    rebuilt = (spec.eigenvectors * spec.eigenvalues) @ spec.eigenvectors.conj().T
    assert schatten_inf_norm(A - rebuilt) <= 1e-10 * schatten_inf_norm(A)
    gram = spec.eigenvectors.conj().T @ spec.eigenvectors
    assert np.max(np.abs(gram - np.eye(8))) <= 1e-10


def test_eig_degenerate_block_is_deterministic(rng):
    # two-fold degenerate level; basis must depend only on the subspace
    U = random_unitary(rng, 4)
    A = U @ np.diag([1.0, 1.0, 2.0, 3.0]) @ U.conj().T
    s1 = eig_hermitian(as_hermitian(A))
    s2 = eig_hermitian(as_hermitian(A + 0.0))
    assert np.allclose(s1.eigenvectors, s2.eigenvectors)
    P = s1.projector([0, 1])
    assert schatten_inf_norm(A @ P - P @ A @ P) < 1e-9


def test_func_exp_of_zero():
    assert np.allclose(func_hermitian(np.zeros((3, 3)), np.exp), np.eye(3))


def test_func_log_of_scaled_identity():
    out = func_hermitian(np.e * np.eye(2), np.log)
    assert np.allclose(out, np.eye(2))


def test_func_exp_log_round_trip(rng):
    A = random_hermitian(rng, 6, norm=2.0)
    back = func_hermitian(func_hermitian(A, np.exp), np.log)
    assert schatten_inf_norm(back - A) <= 1e-9


def test_func_exp_is_positive_definite(rng):
    for _ in range(5):
        A = random_hermitian(rng, 5, norm=4.0)
        vals = np.linalg.eigvalsh(func_hermitian(A, np.exp))
        assert vals[0] > 0


def test_func_log_rejects_non_positive():
    with pytest.raises(MatrixValidationError):
        func_hermitian(np.diag([1.0, -0.5]), np.log)


def test_schatten_inf_norm_values(rng):
    assert schatten_inf_norm(np.diag([1.0, -5.0, 2.0])) == pytest.approx(5.0)
    assert schatten_inf_norm(np.zeros((4, 4))) == 0.0
    # power-iteration oracle on A^dag A
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    B = A.conj().T @ A
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    v /= np.linalg.norm(v)
    for _ in range(3000):
        v = B @ v
        v /= np.linalg.norm(v)
    sigma_max = np.sqrt(np.real(v.conj() @ B @ v))
    assert schatten_inf_norm(A) == pytest.approx(sigma_max, abs=1e-8)


def test_relative_entropy_self_is_zero(rng):
    rho = random_density(rng, 4)
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)


def test_relative_entropy_diagonal_matches_scalar_kl():
    p = np.array([0.5, 0.5])
    q = np.array([0.25, 0.75])
    expected = float(np.sum(p * np.log(p / q)))
    got = relative_entropy(np.diag(p), np.diag(q))
    assert got == pytest.approx(expected, abs=1e-12)


def test_relative_entropy_pure_vs_full_rank(rng):
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    v /= np.linalg.norm(v)
    rho = np.outer(v, v.conj())
    sigma = random_density(rng, 5)
    got = relative_entropy(rho, sigma)
    # eigenbasis-summation oracle: -tr(rho ln sigma) since S(rho)=0 for pure rho
    vals, vecs = np.linalg.eigh(sigma)
    expected = -float(sum(np.log(q) * np.abs(vecs[:, k].conj() @ v) ** 2
                          for k, q in enumerate(vals)))
    assert got == pytest.approx(expected, abs=1e-8)
    assert got > 0


def test_relative_entropy_nonnegative_random(rng):
    for _ in range(10):
        a = random_density(rng, 3)
        b = random_density(rng, 3)
        assert relative_entropy(a, b) >= -1e-10


def test_relative_entropy_support_violation():
    rho = np.diag([1.0, 0.0])
    sigma = np.diag([0.0, 1.0])
    with pytest.raises(DivergenceError):
        relative_entropy(rho, sigma)


def test_validators_reject_bad_input():
    with pytest.raises(MatrixValidationError):
        as_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(MatrixValidationError):
        as_unitary(np.diag([1.0, 2.0]))
    with pytest.raises(MatrixValidationError):
        as_density(np.diag([0.7, 0.7]))
    with pytest.raises(MatrixValidationError):
        as_density(np.diag([1.5, -0.5]))


def test_matrix_json_round_trip(rng):
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    back = matrix_from_json(matrix_to_json(A))
    assert np.array_equal(A, back)
    with pytest.raises(MatrixValidationError):
        matrix_from_json([[1.0, 2.0]])
