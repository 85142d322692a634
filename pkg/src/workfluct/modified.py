"""Rare-outcome modifications of the two-point measurement scheme.

The two-point scheme fails to conserve energy on average for coherent
processes.  The constructors here add outcomes that fire with probability
epsilon and restore exact mean-energy conservation: two variants whose
rare outcomes diverge as 1/epsilon (one with d^2 extra outcomes, one with
only d), and a two-parameter variant whose deviation from the Jarzynski
equality stays bounded as epsilon -> 0 at the price of shifting every
main outcome by a constant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import Spectrum, as_hermitian, eig_hermitian
from .process import Process, char_energy_scale, dephased_how, how_operator
from .scheme import MeasurementScheme, scheme_from_pairs, tpm_scheme


def _check_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return float(epsilon)


@dataclass(frozen=True)
class LambdaSystem:
    """The rare-branch work operator and its eigensystem.

    ``spectrum`` pairs with the energy eigenbasis by index: both eigenvalue
    lists ascend, and index k of the rare branch is associated with energy
    level k.  Any bijection preserves mean-energy conservation; the
    ascending pairing is fixed for reproducibility.
    """

    Lambda: np.ndarray
    spectrum: Spectrum
    epsilon: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    def eigenvector(self, k: int) -> np.ndarray:
        return self.spectrum.eigenvectors[:, k]


def lambda_system(P: Process, epsilon: float) -> LambdaSystem:
    """Operator that the rare outcomes must average to:
    (Omega - (1 - epsilon) * Omega_pinched) / epsilon."""
    epsilon = _check_epsilon(epsilon)
    Lam = as_hermitian((how_operator(P) - (1.0 - epsilon) * dephased_how(P)) / epsilon)
    return LambdaSystem(Lam, eig_hermitian(Lam), epsilon)


def _scaled_tpm_pairs(P: Process, epsilon: float) -> list:
    return [
        (out.matrix * (1.0 - epsilon), out.work, out.label)
        for out in tpm_scheme(P).outcomes
    ]


def _diag_omega(P: Process) -> tuple[Spectrum, np.ndarray]:
    """Energy eigenbasis of H (per index) and the diagonal of the work
    operator in that basis."""
    spec_h = eig_hermitian(P.H)
    omega = how_operator(P)
    diag = np.real(np.einsum("ji,jk,ki->i", spec_h.eigenvectors.conj(), omega, spec_h.eigenvectors))
    return spec_h, diag


def circuit1_scheme(P: Process, epsilon: float) -> MeasurementScheme:
    """Rare-outcome scheme with all deviation in the first measurement.

    Main outcomes: the two-point elements scaled by (1 - epsilon), work
    values unchanged.  Rare outcomes, one per (level k, final level j):
    epsilon |<E'_j|U|E_k>|^2 projected on the rare-branch eigenvector k,
    with work E'_j - E_k shifted by the rare-branch eigenvalue offset.
    """
    epsilon = _check_epsilon(epsilon)
    pairs = _scaled_tpm_pairs(P, epsilon)
    lam = lambda_system(P, epsilon)
    spec_h, omega_diag = _diag_omega(P)
    spec_p = eig_hermitian(P.H_prime)
    for k in range(P.dim):
        shift = omega_diag[k] - lam.eigenvalues[k]  # reading offset for level k
        vk = lam.eigenvector(k)
        Nk = np.outer(vk, vk.conj())
        amps = spec_p.eigenvectors.conj().T @ (P.U @ spec_h.eigenvectors[:, k])
        for j in range(P.dim):
            weight = float(np.abs(amps[j]) ** 2)
            work = float(spec_p.eigenvalues[j] - spec_h.eigenvalues[k] - shift)
            pairs.append((epsilon * weight * Nk, work, f"out:{k},{j}"))
    return scheme_from_pairs(pairs, P.dim)


def circuit2_scheme(P: Process, epsilon: float) -> MeasurementScheme:
    """Rare-outcome scheme with the minimal number of rare outcomes (d).

    Main outcomes as in :func:`circuit1_scheme`; the rare part is simply
    the spectral decomposition of the rare-branch operator, scaled by
    epsilon, with its eigenvalues as work values.
    """
    epsilon = _check_epsilon(epsilon)
    pairs = _scaled_tpm_pairs(P, epsilon)
    lam = lambda_system(P, epsilon)
    for k in range(P.dim):
        vk = lam.eigenvector(k)
        pairs.append((epsilon * np.outer(vk, vk.conj()), float(lam.eigenvalues[k]), f"out:{k}"))
    return scheme_from_pairs(pairs, P.dim)


@dataclass(frozen=True)
class EpsVParameters:
    """Parameters of the bounded-correction scheme.

    V shifts every main outcome by -V*w; v sets the single large outcome
    v*w/epsilon; m is the contraction (0 <= m <= 1) carrying that outcome;
    omega_hat = v*w*m is the positive operator the rare pair must average to.
    """

    V: float
    v: float
    m: np.ndarray
    omega_hat: np.ndarray
    delta_margin: float

    def __post_init__(self):
        evals = np.linalg.eigvalsh(self.m)
        if evals[0] < -1e-10 or evals[-1] > 1.0 + 1e-10:
            raise ValueError(
                f"m must satisfy 0 <= m <= 1, eigenvalues span [{evals[0]:.3e}, {evals[-1]:.3e}]"
            )


def tpm_eps_v_scheme(
    P: Process,
    epsilon: float,
    delta_margin: float = 0.05,
) -> tuple[MeasurementScheme, EpsVParameters]:
    """Bounded-correction modification of the two-point scheme.

    Main outcomes are the two-point elements scaled by (1 - epsilon) with
    works shifted down by V*w.  Two extra outcomes complete the POVM:
    epsilon*m with work v*w/epsilon, and epsilon*(1 - m) with work zero.
    V is the smallest shift for which the operator the extra outcomes must
    average to stays above delta_margin * w; v is then fixed so the largest
    eigenvalue of m is exactly one (smallest admissible large outcome).
    """
    epsilon = _check_epsilon(epsilon)
    if delta_margin <= 0:
        raise ValueError(f"delta_margin must be positive, got {delta_margin}")
    omega = how_operator(P)
    omega_d = dephased_how(P)
    w = char_energy_scale(P)
    base = as_hermitian(omega - omega_d + epsilon * omega_d)
    lo = float(np.linalg.eigvalsh(base)[0])
    V = max((delta_margin - lo / w) / (1.0 - epsilon), 0.0)
    omega_hat = as_hermitian(base + w * V * (1.0 - epsilon) * np.eye(P.dim))
    hi = float(np.linalg.eigvalsh(omega_hat)[-1])
    v = hi / w
    m = as_hermitian(omega_hat / (v * w))
    params = EpsVParameters(V=float(V), v=float(v), m=m, omega_hat=omega_hat,
                            delta_margin=float(delta_margin))
    pairs = [
        (out.matrix * (1.0 - epsilon), out.work - w * V, out.label)
        for out in tpm_scheme(P).outcomes
    ]
    pairs.append((epsilon * m, v * w / epsilon, "extra:large"))
    pairs.append((epsilon * (np.eye(P.dim) - m), 0.0, "extra:zero"))
    return scheme_from_pairs(pairs, P.dim), params


def epsv_params_to_json(params: EpsVParameters) -> dict:
    return {"V": params.V, "v": params.v, "delta_margin": params.delta_margin}


def save_epsv_params(params: EpsVParameters, path: str | Path) -> None:
    Path(path).write_text(json.dumps(epsv_params_to_json(params), indent=1) + "\n")
