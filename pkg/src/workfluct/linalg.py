"""Dense complex matrix algebra for small Hilbert spaces (d up to ~64).

Validated constructors for Hermitian, unitary and density matrices, a
deterministic Hermitian eigendecomposition, spectral operator functions,
the Schatten infinity norm, and the quantum relative entropy.  Everything
here is a pure function on immutable arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-10
DENSITY_EIG_TOL = 1e-12
TRACE_TOL = 1e-12
# Tolerances are relative to the infinity norm, with an absolute floor so
# that checks on (near-)zero operators remain meaningful.
ABS_FLOOR = 1e-14
DEGENERACY_TOL = 1e-10
PHASE_TOL = 1e-8


class MatrixValidationError(ValueError):
    """A matrix violates the invariants of its intended role."""


class DivergenceError(ValueError):
    """Relative entropy diverges: first state not supported on the second."""


def _as_complex_square(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MatrixValidationError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A.view(float))):
        raise MatrixValidationError(f"{name} has non-finite entries")
    return A


def _readonly(A: np.ndarray) -> np.ndarray:
    A = np.ascontiguousarray(A)
    A.flags.writeable = False
    return A


def norm_scale(A: np.ndarray) -> float:
    """Infinity-norm scale used for relative tolerances, floored at 1e-14."""
    return max(schatten_inf_norm(A), ABS_FLOOR)


def as_hermitian(matrix: np.ndarray, name: str = "operator") -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrized matrix."""
    A = _as_complex_square(matrix, name)
    scale = max(np.max(np.abs(A)), ABS_FLOOR)
    dev = np.max(np.abs(A - A.conj().T))
    if dev > HERMITICITY_TOL * scale:
        raise MatrixValidationError(
            f"{name} is not Hermitian: deviation {dev:.3e} exceeds {HERMITICITY_TOL:.0e} * {scale:.3e}"
        )
    return _readonly((A + A.conj().T) / 2)


def as_unitary(matrix: np.ndarray, name: str = "unitary") -> np.ndarray:
    """Validate that U†U = 1 within tolerance."""
    U = _as_complex_square(matrix, name)
    dev = schatten_inf_norm(U.conj().T @ U - np.eye(U.shape[0]))
    if dev > UNITARITY_TOL:
        raise MatrixValidationError(f"{name} is not unitary: ||U^dag U - 1|| = {dev:.3e}")
    return _readonly(U)


def as_density(matrix: np.ndarray, name: str = "state") -> np.ndarray:
    """Validate a density matrix: Hermitian, positive, unit trace."""
    rho = as_hermitian(matrix, name)
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise MatrixValidationError(f"{name} has trace {tr!r}, expected 1")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -DENSITY_EIG_TOL:
        raise MatrixValidationError(f"{name} has negative eigenvalue {lo:.3e}")
    return rho


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def projector(self, indices: list[int] | np.ndarray) -> np.ndarray:
        V = self.eigenvectors[:, indices]
        return V @ V.conj().T


def group_degenerate(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Cluster ascending values whose consecutive gaps are below ``tol``."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return []
    clusters: list[list[int]] = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[clusters[-1][-1]] <= tol:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    return [np.array(c, dtype=int) for c in clusters]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector so its first component of modulus > 1e-8 is real positive."""
    idx = np.flatnonzero(np.abs(v) > PHASE_TOL)
    if len(idx) == 0:
        return v
    pivot = v[idx[0]]
    return v * (abs(pivot) / pivot)


def eig_hermitian(A: np.ndarray) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix with a deterministic gauge.

    Eigenvalues ascend.  Within each degenerate cluster (gap below
    1e-10 * ||A||) the eigenvectors are rebuilt by projecting the standard
    basis onto the cluster subspace and Gram-Schmidt orthonormalizing in
    index order, so the returned basis depends only on the subspace.  Every
    eigenvector is phase-fixed to have its first non-negligible component
    real and positive.
    """
    A = as_hermitian(A)
    try:
        vals, vecs = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # iteration cap exceeded in LAPACK
        raise ArithmeticError(f"Hermitian eigensolver did not converge: {exc}") from exc
    tol = DEGENERACY_TOL * norm_scale(A)
    for cluster in group_degenerate(vals, tol):
        if len(cluster) > 1:
            vecs[:, cluster] = _cluster_basis(vecs[:, cluster])
    for k in range(vecs.shape[1]):
        vecs[:, k] = _fix_phase(vecs[:, k])
    return Spectrum(_readonly(vals), _readonly(vecs))


def _cluster_basis(V: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(V): project standard basis
    vectors in index order and Gram-Schmidt the results."""
    d, m = V.shape
    P = V @ V.conj().T
    basis: list[np.ndarray] = []
    for k in range(d):
        w = P[:, k].copy()
        for u in basis:
            w -= u * (u.conj() @ w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-7:
            basis.append(w / nrm)
        if len(basis) == m:
            break
    if len(basis) < m:  # pathological cancellation; keep LAPACK's basis
        return V
    return np.column_stack(basis)


def func_hermitian(A: np.ndarray, f) -> np.ndarray:
    """Apply a real function to a Hermitian matrix through its spectrum.

    For f = log the operator must be positive definite; a non-positive
    spectrum signals an invalid input and raises a domain error.
    """
    spec = eig_hermitian(A)
    with np.errstate(divide="raise", invalid="raise"):
        try:
            fvals = np.array([float(f(v)) for v in spec.eigenvalues])
        except (FloatingPointError, ValueError) as exc:
            raise MatrixValidationError(
                f"function not defined on spectrum [{spec.eigenvalues[0]:.3e}, "
                f"{spec.eigenvalues[-1]:.3e}]: {exc}"
            ) from exc
    if not np.all(np.isfinite(fvals)):
        raise MatrixValidationError("function produced non-finite values on the spectrum")
    V = spec.eigenvectors
    B = (V * fvals) @ V.conj().T
    return _readonly((B + B.conj().T) / 2)


def schatten_inf_norm(A: np.ndarray) -> float:
    """Largest singular value (max |eigenvalue| for Hermitian input)."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, support_tol: float = 1e-12) -> float:
    """Quantum relative entropy tr(rho ln rho) - tr(rho ln sigma).

    Raises DivergenceError when rho has weight outside the support of sigma
    (eigenvalues of sigma below ``support_tol``).
    """
    rho = as_density(rho)
    sigma = as_density(sigma)
    p_spec = eig_hermitian(rho)
    q_spec = eig_hermitian(sigma)
    p = np.clip(p_spec.eigenvalues, 0.0, None)
    s_rho = float(np.sum(p[p > 0] * np.log(p[p > 0])))
    q = q_spec.eigenvalues
    weights = np.real(np.einsum("ij,jk,ki->i", q_spec.eigenvectors.conj().T, rho, q_spec.eigenvectors))
    cross = 0.0
    for qk, wk in zip(q, weights):
        if qk <= support_tol:
            if wk > 1e-10:
                raise DivergenceError(
                    f"support violation: state weight {wk:.3e} on a direction where "
                    f"the reference eigenvalue is {qk:.3e}"
                )
            continue
        cross += wk * np.log(qk)
    return s_rho - cross


def matrix_to_json(A: np.ndarray) -> list:
    """Complex matrix as nested row-major lists of [re, im] pairs."""
    A = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def matrix_from_json(data: list, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MatrixValidationError(f"cannot parse {name}: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise MatrixValidationError(
            f"{name} must be nested [re, im] pairs, got array of shape {arr.shape}"
        )
    return arr[:, :, 0] + 1j * arr[:, :, 1]
