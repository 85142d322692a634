"""The driven process (H, H', U, beta) and the operators derived from it.

A process fixes the initial and final Hamiltonians, the unitary that
connects them, and the inverse temperature of the initial thermal state.
From these we derive the Heisenberg work operator, its pinched (dephased)
version, thermal/free-energy quantities and the characteristic energy
scale used to normalize work values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .linalg import (
    ABS_FLOOR,
    MatrixValidationError,
    as_hermitian,
    as_unitary,
    eig_hermitian,
    group_degenerate,
    matrix_from_json,
    matrix_to_json,
    norm_scale,
)

PINCH_GROUP_TOL = 1e-12


class DegenerateProcessError(ValueError):
    """Both Hamiltonians vanish, so work is identically zero."""


@dataclass(frozen=True)
class Process:
    """Driven unitary process: H -> H' under U, initial state thermal at beta."""

    H: np.ndarray
    H_prime: np.ndarray
    U: np.ndarray
    beta: float

    def __post_init__(self):
        H = as_hermitian(self.H, "H")
        Hp = as_hermitian(self.H_prime, "H_prime")
        U = as_unitary(self.U, "U")
        if not (H.shape == Hp.shape == U.shape):
            raise MatrixValidationError(
                f"dimension mismatch: H {H.shape}, H' {Hp.shape}, U {U.shape}"
            )
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "H_prime", Hp)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def dim(self) -> int:
        return self.H.shape[0]


class ThermalQuantities(NamedTuple):
    tau_beta: np.ndarray
    Z: float
    F: float
    Z_prime: float
    F_prime: float
    delta_F: float


def how_operator(P: Process) -> np.ndarray:
    """Heisenberg operator of work: U^dag H' U - H."""
    return as_hermitian(P.U.conj().T @ P.H_prime @ P.U - P.H)


def energy_projectors(H: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Distinct eigenvalues of H and their eigenprojectors.

    Eigenvalues closer than 1e-12 * ||H|| are treated as one level, which
    keeps the pinching stable when a degeneracy is split by rounding.
    """
    spec = eig_hermitian(H)
    tol = PINCH_GROUP_TOL * norm_scale(H)
    clusters = group_degenerate(spec.eigenvalues, max(tol, ABS_FLOOR))
    energies = np.array([float(np.mean(spec.eigenvalues[c])) for c in clusters])
    projectors = [spec.projector(c) for c in clusters]
    return energies, projectors


def dephased_how(P: Process) -> np.ndarray:
    """Pinching of the work operator by the eigenprojectors of H.

    This block-diagonal operator commutes with H and is the first-moment
    operator of the two-point measurement scheme.
    """
    omega = how_operator(P)
    _, projectors = energy_projectors(P.H)
    out = np.zeros_like(omega)
    for Pi in projectors:
        out = out + Pi @ omega @ Pi
    return as_hermitian(out)


def thermal_quantities(P: Process) -> ThermalQuantities:
    """Thermal state of H at beta plus partition functions and free energies.

    Exponentials are taken after subtracting the ground-state energy, an
    exact rescaling that avoids overflow for large beta * ||H||.
    """
    beta = P.beta
    specs = [eig_hermitian(P.H), eig_hermitian(P.H_prime)]
    logZ = []
    for spec in specs:
        e0 = spec.eigenvalues[0]
        logZ.append(-beta * e0 + np.log(np.sum(np.exp(-beta * (spec.eigenvalues - e0)))))
    spec = specs[0]
    shifted = np.exp(-beta * (spec.eigenvalues - spec.eigenvalues[0]))
    tau = (spec.eigenvectors * (shifted / shifted.sum())) @ spec.eigenvectors.conj().T
    tau = (tau + tau.conj().T) / 2
    F = -logZ[0] / beta
    F_prime = -logZ[1] / beta
    return ThermalQuantities(
        tau_beta=tau,
        Z=float(np.exp(logZ[0])),
        F=float(F),
        Z_prime=float(np.exp(logZ[1])),
        F_prime=float(F_prime),
        delta_F=float(F_prime - F),
    )


def char_energy_scale(P: Process) -> float:
    """Characteristic energy scale w = sqrt(tr H^2 + tr H'^2)."""
    w2 = float(np.trace(P.H @ P.H).real + np.trace(P.H_prime @ P.H_prime).real)
    if w2 <= 0.0:
        raise DegenerateProcessError("H and H' both vanish: work is always zero")
    return float(np.sqrt(w2))


def perturb_how(P: Process, eta: float, what: np.ndarray) -> np.ndarray:
    """Perturbed work operator Omega + eta * what."""
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return as_hermitian(how_operator(P) + eta * as_hermitian(what, "what"))


def perturbed_process(P: Process, eta: float, what: np.ndarray) -> Process:
    """Process whose work operator is Omega + eta * what.

    Realized by shifting the final Hamiltonian to H' + eta * U what U^dag,
    which leaves H, U and the thermal state untouched.
    """
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    what = as_hermitian(what, "what")
    Hp = P.H_prime + eta * (P.U @ what @ P.U.conj().T)
    return Process(P.H, as_hermitian(Hp), P.U, P.beta)


def process_to_json(P: Process) -> dict:
    return {
        "dim": P.dim,
        "beta": P.beta,
        "H": matrix_to_json(P.H),
        "H_prime": matrix_to_json(P.H_prime),
        "U": matrix_to_json(P.U),
    }


def process_from_json(data: dict) -> Process:
    try:
        dim = int(data["dim"])
        beta = float(data["beta"])
        H = matrix_from_json(data["H"], "H")
        Hp = matrix_from_json(data["H_prime"], "H_prime")
        U = matrix_from_json(data["U"], "U")
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixValidationError(f"malformed process record: {exc}") from exc
    if H.shape != (dim, dim):
        raise MatrixValidationError(f"declared dim {dim} does not match H shape {H.shape}")
    return Process(H, Hp, U, beta)


def save_process(P: Process, path: str | Path) -> None:
    Path(path).write_text(json.dumps(process_to_json(P), indent=1) + "\n")


def load_process(path: str | Path) -> Process:
    return process_from_json(json.loads(Path(path).read_text()))
