"""Work-measurement schemes: POVM elements paired with work values.

A scheme assigns to every measurement outcome a positive operator and a
real work value.  This module provides validation, the induced work
statistics for a given initial state, the exponential work average and
its deviation from the Jarzynski prediction, the two standard scheme
constructors (two-point measurement and projective measurement of the
Heisenberg work operator), the operator-log diagnostics behind the
positivity of that deviation, and the second-law tail bounds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .linalg import (
    ABS_FLOOR,
    MatrixValidationError,
    as_density,
    as_hermitian,
    eig_hermitian,
    func_hermitian,
    matrix_from_json,
    matrix_to_json,
    norm_scale,
    schatten_inf_norm,
)
from .process import (
    Process,
    char_energy_scale,
    dephased_how,
    energy_projectors,
    how_operator,
    thermal_quantities,
)

POSITIVITY_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
MERGE_TOL = 1e-12
# Work spread (in units of 1/beta) beyond which sums of e^{-beta W} are
# evaluated in the log domain.
LOG_DOMAIN_THRESHOLD = 500.0


class InvalidSchemeError(ValueError):
    """The outcome set does not form a valid measurement."""


@dataclass(frozen=True)
class Outcome:
    matrix: np.ndarray
    work: float
    label: str = ""


@dataclass(frozen=True)
class MeasurementScheme:
    """A finite list of (positive operator, work value) outcome pairs."""

    dim: int
    outcomes: tuple[Outcome, ...]

    def __post_init__(self):
        fixed = []
        for k, out in enumerate(self.outcomes):
            M = as_hermitian(out.matrix, f"element {k}")
            if M.shape != (self.dim, self.dim):
                raise InvalidSchemeError(
                    f"element {k} has shape {M.shape}, scheme dim is {self.dim}"
                )
            if not np.isfinite(out.work):
                raise InvalidSchemeError(f"outcome {k} has non-finite work {out.work}")
            fixed.append(Outcome(M, float(out.work), out.label))
        object.__setattr__(self, "outcomes", tuple(fixed))

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def works(self) -> np.ndarray:
        return np.array([o.work for o in self.outcomes])

    @property
    def elements(self) -> list[np.ndarray]:
        return [o.matrix for o in self.outcomes]


def scheme_from_pairs(pairs: Iterable[tuple[np.ndarray, float, str]], dim: int) -> MeasurementScheme:
    return MeasurementScheme(dim, tuple(Outcome(M, W, lbl) for M, W, lbl in pairs))


@dataclass(frozen=True)
class SchemeReport:
    passed: bool
    max_negativity: float
    completeness_error: float
    positivity_tol: float
    completeness_tol: float


def validate_scheme(
    S: MeasurementScheme,
    positivity_tol: float = POSITIVITY_TOL,
    completeness_tol: float = COMPLETENESS_TOL,
) -> SchemeReport:
    """Report the largest positivity violation and the completeness defect."""
    worst = 0.0
    for out in S.outcomes:
        lo = float(np.linalg.eigvalsh(out.matrix)[0])
        worst = max(worst, -lo)
    total = sum(out.matrix for out in S.outcomes)
    comp = schatten_inf_norm(total - np.eye(S.dim))
    return SchemeReport(
        passed=(worst <= positivity_tol and comp <= completeness_tol),
        max_negativity=worst,
        completeness_error=float(comp),
        positivity_tol=positivity_tol,
        completeness_tol=completeness_tol,
    )


def first_moment_operator(S: MeasurementScheme) -> np.ndarray:
    """Sum of work values weighted by their POVM elements."""
    acc = np.zeros((S.dim, S.dim), dtype=complex)
    for out in S.outcomes:
        acc += out.work * out.matrix
    return as_hermitian(acc)


def is_energy_conserving(S: MeasurementScheme, P: Process, tol: float = 1e-10) -> bool:
    """True when the scheme's mean work equals the mean energy change for
    every initial state, i.e. the first-moment operator matches the
    Heisenberg work operator within ``tol`` (relative)."""
    omega = how_operator(P)
    dev = schatten_inf_norm(first_moment_operator(S) - omega)
    return dev <= tol * norm_scale(omega)


# ---------------------------------------------------------------------------
# Work distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkDistribution:
    """Finite distribution of work values: parallel arrays of values and weights."""

    works: np.ndarray
    probabilities: np.ndarray
    origin: str = ""

    def __post_init__(self):
        w = np.asarray(self.works, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if w.shape != p.shape or w.ndim != 1:
            raise ValueError("works and probabilities must be 1-d arrays of equal length")
        if np.any(p < -POSITIVITY_TOL):
            raise ValueError(f"negative probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > COMPLETENESS_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        order = np.argsort(w, kind="stable")
        object.__setattr__(self, "works", np.ascontiguousarray(w[order]))
        object.__setattr__(self, "probabilities", np.ascontiguousarray(np.clip(p[order], 0.0, None)))

    def mean(self) -> float:
        return float(np.sum(self.works * self.probabilities))

    def shifted(self, offset: float, origin: str | None = None) -> "WorkDistribution":
        return WorkDistribution(self.works + offset, self.probabilities, origin or self.origin)


def _merge_close(works: np.ndarray, probs: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(works, kind="stable")
    works, probs = works[order], probs[order]
    merged_w: list[float] = []
    merged_p: list[float] = []
    for w, p in zip(works, probs):
        if merged_w and w - merged_w[-1] <= tol:
            tot = merged_p[-1] + p
            if tot > 0:
                merged_w[-1] = (merged_p[-1] * merged_w[-1] + p * w) / tot
            merged_p[-1] = tot
        else:
            merged_w.append(float(w))
            merged_p.append(float(p))
    return np.array(merged_w), np.array(merged_p)


def work_distribution(
    S: MeasurementScheme,
    rho: np.ndarray,
    work_scale: float | None = None,
) -> WorkDistribution:
    """Distribution of work values when the scheme measures state ``rho``.

    Outcomes whose work values collide within 1e-12 * work_scale are merged
    (distinct analytic outcomes may coincide only up to rounding).  The
    scale defaults to the largest absolute work value of the scheme.
    """
    rho = as_density(rho)
    works = S.works
    probs = np.array([float(np.trace(rho @ out.matrix).real) for out in S.outcomes])
    if np.any(probs < -1e-10):
        raise InvalidSchemeError(f"negative outcome probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, None)
    if work_scale is None:
        work_scale = max(float(np.max(np.abs(works))) if len(works) else 0.0, 1.0)
    w, p = _merge_close(works, probs, MERGE_TOL * work_scale)
    return WorkDistribution(w, p / p.sum(), origin=f"scheme[{len(S)} outcomes]")


def cdf(D: WorkDistribution, zeta: float) -> float:
    """P(W <= zeta), closed at zeta."""
    return float(np.sum(D.probabilities[D.works <= zeta]))


# ---------------------------------------------------------------------------
# Exponential work averages and the correction to the Jarzynski equality
# ---------------------------------------------------------------------------

def _log_terms(S: MeasurementScheme, P: Process) -> np.ndarray:
    tau = thermal_quantities(P).tau_beta
    logs = []
    for out in S.outcomes:
        c = float(np.trace(tau @ out.matrix).real)
        if c < -1e-10:
            raise InvalidSchemeError(f"negative thermal weight {c:.3e}")
        if c <= 0.0:
            continue
        logs.append(np.log(c) - P.beta * out.work)
    if not logs:
        raise InvalidSchemeError("all outcomes carry zero thermal weight")
    return np.array(logs)


def _logsumexp(terms: np.ndarray) -> float:
    m = float(np.max(terms))
    return m + float(np.log(np.sum(np.exp(terms - m))))


def log_jarzynski_average(S: MeasurementScheme, P: Process) -> float:
    """ln of the thermal average of e^{-beta W} under the scheme.

    Always evaluated through a log-sum-exp, so outcome values of order
    w / epsilon cannot overflow.
    """
    return _logsumexp(_log_terms(S, P))


def jarzynski_average(S: MeasurementScheme, P: Process) -> float:
    """Thermal average of e^{-beta W}; inf flags a value beyond double range."""
    lse = log_jarzynski_average(S, P)
    if lse > 709.0:
        return float("inf")
    return float(np.exp(lse))


def xi_correction(S: MeasurementScheme, P: Process) -> float:
    """Deviation exponent from the Jarzynski equality:
    ln <e^{-beta W}> + beta * dF.  Zero for the two-point scheme,
    nonnegative for any scheme that conserves energy on average."""
    dF = thermal_quantities(P).delta_F
    return log_jarzynski_average(S, P) + P.beta * dF


# ---------------------------------------------------------------------------
# Standard scheme constructors
# ---------------------------------------------------------------------------

def tpm_scheme(P: Process) -> MeasurementScheme:
    """Two-point measurement scheme: energy of H, evolve, energy of H'.

    Element (i, j) is the projector onto level i of H, filtered through the
    evolved eigenvector j of H'; its work value is E'_j - E_i.  Degenerate
    levels of H enter through their full eigenprojectors.
    """
    energies, projectors = energy_projectors(P.H)
    spec_p = eig_hermitian(P.H_prime)
    pairs = []
    for i, (Ei, Pi) in enumerate(zip(energies, projectors)):
        PiU = Pi @ P.U.conj().T
        for j in range(P.dim):
            v = PiU @ spec_p.eigenvectors[:, j]
            M = np.outer(v, v.conj())
            pairs.append((M, float(spec_p.eigenvalues[j] - Ei), f"tpm:{i},{j}"))
    return scheme_from_pairs(pairs, P.dim)


def how_scheme(P: Process) -> MeasurementScheme:
    """Projective measurement of the Heisenberg work operator."""
    omega = how_operator(P)
    values, projectors = energy_projectors(omega)
    pairs = [(Pi, float(v), f"how:{i}") for i, (v, Pi) in enumerate(zip(values, projectors))]
    return scheme_from_pairs(pairs, P.dim)


def _log_trace_exp(A: np.ndarray) -> float:
    """ln tr e^A for Hermitian A."""
    return _logsumexp(eig_hermitian(A).eigenvalues)


def _log_trace_product_exp(A: np.ndarray, B: np.ndarray) -> float:
    """ln tr(e^A e^B) for Hermitian A, B, safe for large spectral spreads."""
    spec = eig_hermitian(A)
    b0 = float(np.max(np.linalg.eigvalsh(B)))
    expB = func_hermitian(B - b0 * np.eye(B.shape[0]), np.exp)
    diag = np.real(np.einsum("ji,jk,ki->i", spec.eigenvectors.conj(), expB, spec.eigenvectors))
    diag = np.clip(diag, 0.0, None)
    terms = []
    for a, m in zip(spec.eigenvalues, diag):
        if m > 0.0:
            terms.append(a + np.log(m))
    if not terms:
        raise ArithmeticError("trace underflowed to zero")
    return b0 + _logsumexp(np.array(terms))


def xi_how_bound(P: Process) -> float:
    """Closed-form correction of the Heisenberg-work projective scheme:
    beta * dF + ln tr(tau_beta e^{-beta Omega}).  Upper-bounds the minimal
    correction over all energy-conserving schemes."""
    tq = thermal_quantities(P)
    omega = how_operator(P)
    log_tr = _log_trace_product_exp(-P.beta * P.H, -P.beta * omega)
    logZ = -P.beta * tq.F
    return float(P.beta * tq.delta_F + log_tr - logZ)


# ---------------------------------------------------------------------------
# Operator-log diagnostics
# ---------------------------------------------------------------------------

def log_moment_operator(S: MeasurementScheme, P: Process) -> np.ndarray:
    """ln of m_S = sum_a M_a e^{-beta W_a}.

    m_S is positive definite for every valid scheme; the common factor
    e^{-beta W_min} is pulled out before exponentiation so that the log is
    computable for outcome values of either sign.  A numerically
    non-positive shifted sum marks the scheme as invalid.
    """
    works = S.works
    w_min = float(np.min(works))
    shifted = np.zeros((S.dim, S.dim), dtype=complex)
    for out in S.outcomes:
        shifted += out.matrix * np.exp(-P.beta * (out.work - w_min))
    shifted = as_hermitian(shifted)
    lo = float(np.linalg.eigvalsh(shifted)[0])
    if lo <= 0.0:
        raise InvalidSchemeError(
            f"moment operator not positive definite (min eigenvalue {lo:.3e}); "
            "the outcome set cannot form a valid measurement at this beta"
        )
    return as_hermitian(func_hermitian(shifted, np.log) - P.beta * w_min * np.eye(S.dim))


def golden_thompson_correction(S: MeasurementScheme, P: Process) -> float:
    """Golden-Thompson gap ln tr(e^{-beta H} e^L) - ln tr e^{L - beta H}
    for L the log-moment operator of the scheme.  Nonnegative, and strictly
    positive whenever L fails to commute with H."""
    L = log_moment_operator(S, P)
    bH = P.beta * P.H
    return float(_log_trace_product_exp(-bH, L) - _log_trace_exp(L - bH))


# ---------------------------------------------------------------------------
# Second-law tail bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CdfBoundReport:
    holds: bool
    max_violation: float
    worst_zeta: float
    checked: int


def second_law_cdf_bound(
    D: WorkDistribution,
    P: Process,
    xi: float,
    n_grid: int = 200,
    tol: float = 1e-10,
) -> CdfBoundReport:
    """Check Phi(zeta) <= e^{beta zeta + xi} for a dissipated-work distribution.

    The CDF is a right-continuous step function, so each constant piece is
    tested at its left endpoint (the support points), which is where the
    exponential envelope is smallest; a uniform grid is added on top.
    """
    beta = P.beta
    support = D.works
    span = max(support[-1] - support[0], 1.0) if len(support) else 1.0
    grid = np.concatenate([
        support,
        np.linspace(support[0] - 0.1 * span, support[-1] + 0.1 * span, n_grid),
    ])
    worst = -np.inf
    worst_z = float("nan")
    for z in np.sort(grid):
        # envelope evaluated in log to survive large beta * zeta
        log_env = beta * z + xi
        env = np.exp(log_env) if log_env < 709 else np.inf
        gap = cdf(D, z) - env
        if gap > worst:
            worst, worst_z = gap, float(z)
    return CdfBoundReport(holds=bool(worst <= tol), max_violation=float(worst),
                          worst_zeta=worst_z, checked=len(grid))


def outlier_lower_bound(P: Process, epsilon: float, eps_prime: float | None = None) -> float:
    """Lower bound on the summed magnitude of outlier work values that any
    epsilon-perturbation of the two-point scheme must carry to conserve
    energy on average.

    The unspecified O(w) slack is instantiated as (eps_prime / epsilon) * w
    with eps_prime = epsilon by default; pass eps_prime explicitly for other
    admissible choices.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if eps_prime is None:
        eps_prime = epsilon
    d2 = P.dim**2
    coherent_part = schatten_inf_norm(how_operator(P) - dephased_how(P))
    w = char_energy_scale(P)
    tpm_works = np.abs(tpm_scheme(P).works)
    return float(coherent_part / (epsilon * d2) - (eps_prime / epsilon) * w - np.sum(tpm_works) / d2)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def scheme_to_json(S: MeasurementScheme) -> dict:
    return {
        "dim": S.dim,
        "outcomes": [
            {"label": out.label, "work": out.work, "matrix": matrix_to_json(out.matrix)}
            for out in S.outcomes
        ],
    }


def scheme_from_json(data: dict) -> MeasurementScheme:
    try:
        dim = int(data["dim"])
        pairs = [
            (matrix_from_json(rec["matrix"], "element"), float(rec["work"]), str(rec.get("label", "")))
            for rec in data["outcomes"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixValidationError(f"malformed scheme record: {exc}") from exc
    return scheme_from_pairs(pairs, dim)


def save_scheme(S: MeasurementScheme, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scheme_to_json(S), indent=1) + "\n")


def load_scheme(path: str | Path) -> MeasurementScheme:
    return scheme_from_json(json.loads(Path(path).read_text()))


def save_distribution_csv(D: WorkDistribution, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["work", "probability"])
        for w, p in zip(D.works, D.probabilities):
            writer.writerow([format(w, ".17g"), format(p, ".17g")])
