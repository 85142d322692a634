"""Closed forms and figure data for the worked qubit example.

A qubit driven from H = D|1><1| to H' = D'|1><1| through the rotation
U = |0><+| + |1><-|.  Everything about the rare-branch operator of the
modified schemes is available in closed form here, which cross-checks the
generic constructors and generates the deviation-versus-epsilon sweep and
the coherent-state outcome histograms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .modified import circuit2_scheme
from .process import Process
from .scheme import xi_correction

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class QubitExample:
    Delta: float
    Delta_prime: float
    beta: float
    epsilon: float = 0.1

    def __post_init__(self):
        if self.Delta == 0.0 and self.Delta_prime == 0.0:
            raise ValueError("at least one of the two gaps must be nonzero")


@dataclass(frozen=True)
class CoherentState:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""

    theta: float
    phi: float

    def ket(self) -> np.ndarray:
        return np.array([
            np.cos(self.theta / 2.0),
            np.exp(1j * self.phi) * np.sin(self.theta / 2.0),
        ])

    def density(self) -> np.ndarray:
        v = self.ket()
        return np.outer(v, v.conj())


def example_process(Delta: float, Delta_prime: float, beta: float) -> Process:
    """The driven qubit: gap D to gap D' through a Hadamard-like rotation."""
    H = np.diag([0.0, Delta]).astype(complex)
    Hp = np.diag([0.0, Delta_prime]).astype(complex)
    return Process(H, Hp, HADAMARD, beta)


def lambda_closed_form(Delta: float, Delta_prime: float, epsilon: float):
    """Eigenvalues and projectors of the rare-branch operator, closed form.

    Returns (lam_plus, lam_minus, (proj_plus, proj_minus)).  Valid for
    Delta > 0, where ascending-energy pairing puts the minus branch on
    level 0.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    root = np.sqrt((Delta_prime / (2.0 * epsilon)) ** 2 + Delta**2 / 4.0)
    lam_plus = (Delta_prime - Delta) / 2.0 + root
    lam_minus = (Delta_prime - Delta) / 2.0 - root
    denom = 2.0 * np.sqrt((epsilon * Delta) ** 2 + Delta_prime**2)
    drift = (epsilon * Delta * SIGMA_Z - Delta_prime * SIGMA_X) / denom
    proj_plus = np.eye(2) / 2.0 + drift
    proj_minus = np.eye(2) / 2.0 - drift
    return float(lam_plus), float(lam_minus), (proj_plus, proj_minus)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    xi: float
    lam_plus: float
    neg_lam_minus: float


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    slope_xi: float
    slope_lam_plus: float
    slope_neg_lam_minus: float


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def fig2_sweep(
    Delta: float = 2.0,
    Delta_prime: float = 3.0,
    beta: float = 0.2,
    eps_grid: np.ndarray | None = None,
) -> SweepResult:
    """Deviation of the d-outlier modified scheme and the rare-branch
    eigenvalues as epsilon shrinks.

    All three quantities diverge as 1/epsilon; the returned slopes are the
    fits of their logs against ln(1/eps) over the small-epsilon half of
    the grid.
    """
    if eps_grid is None:
        eps_grid = np.geomspace(1e-3, 0.9, 24)
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    P = example_process(Delta, Delta_prime, beta)
    rows = []
    for eps in eps_grid:
        lam_p, lam_m, _ = lambda_closed_form(Delta, Delta_prime, eps)
        xi = xi_correction(circuit2_scheme(P, eps), P)
        rows.append(SweepRow(float(eps), float(xi), lam_p, -lam_m))
    half = rows[: max(len(rows) // 2, 2)]
    lx = np.log(1.0 / np.array([r.epsilon for r in half]))
    return SweepResult(
        rows=rows,
        slope_xi=_fit_slope(lx, np.log([r.xi for r in half])),
        slope_lam_plus=_fit_slope(lx, np.log([r.lam_plus for r in half])),
        slope_neg_lam_minus=_fit_slope(lx, np.log([r.neg_lam_minus for r in half])),
    )


@dataclass(frozen=True)
class HistogramRow:
    work: float
    probability: float
    branch: str


def coherent_histogram(
    Delta: float,
    Delta_prime: float,
    epsilon: float,
    theta: float,
    phi: float,
) -> list[HistogramRow]:
    """Outcome table of the first-measurement-modified scheme on a coherent
    state, in closed form.

    Four main rows carry weight (1-eps)/2 * cos^2 or sin^2 of theta/2; four
    rare rows carry (eps/2) times the overlap of the state with the paired
    rare-branch eigenvector.  The rare-branch expansion coefficients are
    called c0, c1 here (the amplitudes of the minus vector on the energy
    basis).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    lam_p, lam_m, _ = lambda_closed_form(Delta, Delta_prime, epsilon)
    s = np.sqrt((epsilon * Delta) ** 2 + Delta_prime**2)
    c0 = np.sqrt(0.5 - epsilon * Delta / (2.0 * s))
    c1 = np.sqrt(0.5 + epsilon * Delta / (2.0 * s))
    cos2 = np.cos(theta / 2.0) ** 2
    sin2 = np.sin(theta / 2.0) ** 2
    cross = c0 * c1 * np.sin(theta) * np.cos(phi)
    overlap_minus = c0**2 * cos2 + c1**2 * sin2 + cross
    overlap_plus = c1**2 * cos2 + c0**2 * sin2 - cross
    energies = (0.0, Delta)
    energies_p = (0.0, Delta_prime)
    # reading offsets: diagonal work value per level minus the paired branch value
    omega_diag = (Delta_prime / 2.0, Delta_prime / 2.0 - Delta)
    shifts = (omega_diag[0] - lam_m, omega_diag[1] - lam_p)
    overlaps = (overlap_minus, overlap_plus)
    weights = (cos2, sin2)
    rows = []
    for i in range(2):
        for j in range(2):
            rows.append(HistogramRow(
                work=float(energies_p[j] - energies[i]),
                probability=float((1.0 - epsilon) / 2.0 * weights[i]),
                branch="main",
            ))
    for i in range(2):
        for j in range(2):
            rows.append(HistogramRow(
                work=float(energies_p[j] - energies[i] - shifts[i]),
                probability=float(epsilon / 2.0 * overlaps[i]),
                branch="outlier",
            ))
    return rows


def histogram_distribution(rows: list[HistogramRow]):
    """Collapse histogram rows with equal work values into (work, prob) arrays."""
    acc: dict[float, float] = {}
    for r in rows:
        acc[r.work] = acc.get(r.work, 0.0) + r.probability
    works = np.array(sorted(acc))
    return works, np.array([acc[w] for w in works])


def write_fig2_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "xi", "lambda_plus", "neg_lambda_minus"])
        for r in result.rows:
            writer.writerow([format(v, ".17g") for v in
                             (r.epsilon, r.xi, r.lam_plus, r.neg_lam_minus)])


def write_histogram_csv(rows: list[HistogramRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["work", "probability", "branch"])
        for r in rows:
            writer.writerow([format(r.work, ".17g"), format(r.probability, ".17g"), r.branch])
