"""Two-stage Kraus-instrument realizations of the modified schemes.

Each realization couples the system to a small control register whose
state decides, with probability epsilon, whether the rare branch fires.
A realization induces a system-level measurement scheme by tracing out
the control, and can be sampled shot by shot with reproducible
counter-based random streams.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import as_density, eig_hermitian, func_hermitian, schatten_inf_norm
from .modified import EpsVParameters, lambda_system, _diag_omega
from .process import Process, char_energy_scale, energy_projectors
from .scheme import InvalidSchemeError, MeasurementScheme, scheme_from_pairs

KRAUS_COMPLETENESS_TOL = 1e-10
DROP_TOL = 1e-14


@dataclass(frozen=True)
class KrausOp:
    matrix: np.ndarray  # acts on system (x) control
    value: float        # meter reading attached to this operator
    label: str = ""


@dataclass(frozen=True)
class KrausInstrument:
    stage: int
    operators: tuple[KrausOp, ...]

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {self.stage}")
        dim = self.operators[0].matrix.shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for op in self.operators:
            K = np.asarray(op.matrix, dtype=complex)
            if K.shape != (dim, dim):
                raise ValueError("Kraus operators must share one joint dimension")
            total += K.conj().T @ K
        dev = schatten_inf_norm(total - np.eye(dim))
        if dev > KRAUS_COMPLETENESS_TOL:
            raise InvalidSchemeError(
                f"stage-{self.stage} Kraus operators violate completeness by {dev:.3e}"
            )

    @property
    def joint_dim(self) -> int:
        return self.operators[0].matrix.shape[0]


@dataclass(frozen=True)
class CircuitRealization:
    """Prepare rho (x) control, measure, evolve the system, measure again.

    The recorded work of a trajectory is always (second reading) minus
    (first reading).
    """

    system_dim: int
    control_dim: int
    control_state: np.ndarray
    first: KrausInstrument
    second: KrausInstrument
    evolution: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control_state", as_density(self.control_state, "control state"))
        joint = self.system_dim * self.control_dim
        if self.first.joint_dim != joint or self.second.joint_dim != joint:
            raise ValueError("instruments do not act on system (x) control")


@dataclass(frozen=True)
class WorkSamples:
    samples: np.ndarray
    shots: int
    seed: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if len(s) != self.shots:
            raise ValueError(f"{len(s)} samples recorded for {self.shots} shots")
        object.__setattr__(self, "samples", s)


def _ket(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim)
    v[k] = 1.0
    return v


def _proj(dim: int, k: int) -> np.ndarray:
    P = np.zeros((dim, dim))
    P[k, k] = 1.0
    return P


def _rare_branch(P: Process, epsilon: float):
    """Eigenbasis and eigenvalues of the rare-branch operator; at epsilon = 0
    the branch never fires and the energy basis stands in for it."""
    spec_h, omega_diag = _diag_omega(P)
    if epsilon == 0.0:
        return spec_h.eigenvectors, np.zeros(P.dim), spec_h, omega_diag
    lam = lambda_system(P, epsilon)
    return lam.spectrum.eigenvectors, lam.eigenvalues, spec_h, omega_diag


def build_circuit1(P: Process, epsilon: float) -> CircuitRealization:
    """One control qubit; only the first measurement deviates.

    When the control reads 0 (probability 1 - epsilon) the stage measures
    energy and keeps the control; when it reads 1 the stage measures in the
    rare-branch basis, reports a shifted reading, and resets the control to
    0.  The second stage is a plain final-energy measurement.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    d = P.dim
    vecs, lam_vals, spec_h, omega_diag = _rare_branch(P, epsilon)
    control = np.diag([1.0 - epsilon, epsilon]).astype(complex)
    first_ops = []
    energies, projectors = energy_projectors(P.H)
    for i, (Ei, Pi) in enumerate(zip(energies, projectors)):
        first_ops.append(KrausOp(np.kron(Pi, _proj(2, 0)), float(Ei), f"E{i}|keep"))
    for k in range(d):
        shift = omega_diag[k] - lam_vals[k]
        K = np.kron(np.outer(spec_h.eigenvectors[:, k], vecs[:, k].conj()),
                    np.outer(_ket(2, 0), _ket(2, 1)))
        first_ops.append(KrausOp(K, float(spec_h.eigenvalues[k] + shift), f"L{k}|flip"))
    spec_p = eig_hermitian(P.H_prime)
    second_ops = [
        KrausOp(
            np.kron(np.outer(spec_p.eigenvectors[:, j], spec_p.eigenvectors[:, j].conj()), np.eye(2)),
            float(spec_p.eigenvalues[j]),
            f"E'{j}",
        )
        for j in range(d)
    ]
    return CircuitRealization(
        system_dim=d,
        control_dim=2,
        control_state=control,
        first=KrausInstrument(1, tuple(first_ops)),
        second=KrausInstrument(2, tuple(second_ops)),
        evolution=P.U,
    )


def build_circuit2(P: Process, epsilon: float, w_tilde: float | None = None) -> CircuitRealization:
    """One control qubit; both measurements deviate, d rare outcomes.

    On the rare branch the first stage projects onto the rare-branch basis
    (reading w_tilde minus the branch eigenvalue) and the second stage reads
    the flat value w_tilde, so the recorded work is the branch eigenvalue,
    independent of w_tilde.  The default w_tilde halves the largest reading.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    d = P.dim
    vecs, lam_vals, spec_h, _ = _rare_branch(P, epsilon)
    if w_tilde is None:
        w_tilde = float(np.max(lam_vals)) / 2.0
    control = np.diag([1.0 - epsilon, epsilon]).astype(complex)
    first_ops = []
    energies, projectors = energy_projectors(P.H)
    for i, (Ei, Pi) in enumerate(zip(energies, projectors)):
        first_ops.append(KrausOp(np.kron(Pi, _proj(2, 0)), float(Ei), f"E{i}|0"))
    for k in range(d):
        K = np.kron(np.outer(vecs[:, k], vecs[:, k].conj()), _proj(2, 1))
        first_ops.append(KrausOp(K, float(-lam_vals[k] + w_tilde), f"L{k}|1"))
    spec_p = eig_hermitian(P.H_prime)
    second_ops = [
        KrausOp(
            np.kron(np.outer(spec_p.eigenvectors[:, j], spec_p.eigenvectors[:, j].conj()), _proj(2, 0)),
            float(spec_p.eigenvalues[j]),
            f"E'{j}|0",
        )
        for j in range(d)
    ]
    second_ops.append(KrausOp(np.kron(np.eye(d), _proj(2, 1)), float(w_tilde), "flat|1"))
    return CircuitRealization(
        system_dim=d,
        control_dim=2,
        control_state=control,
        first=KrausInstrument(1, tuple(first_ops)),
        second=KrausInstrument(2, tuple(second_ops)),
        evolution=P.U,
    )


def build_circuit_epsv(P: Process, epsilon: float, params: EpsVParameters) -> CircuitRealization:
    """Two synchronized control qubits realize the bounded-correction scheme.

    The first control shifts every main first-stage reading up by V*w (so
    main works come out shifted down); the second control carries the single
    large outcome.  Control basis order is |ab> -> index 2a + b.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    d = P.dim
    w = char_energy_scale(P)
    W1 = params.v * w / epsilon
    control = np.zeros((4, 4), dtype=complex)
    control[0, 0] = 1.0 - epsilon
    control[3, 3] = epsilon
    c1_0 = np.kron(_proj(2, 0), np.eye(2))  # control-1 reads 0
    c1_1 = np.kron(_proj(2, 1), np.eye(2))
    c2_0 = np.kron(np.eye(2), _proj(2, 0))  # control-2 reads 0
    c2_1 = np.kron(np.eye(2), _proj(2, 1))
    first_ops = []
    energies, projectors = energy_projectors(P.H)
    for i, (Ei, Pi) in enumerate(zip(energies, projectors)):
        first_ops.append(KrausOp(np.kron(Pi, c1_0), float(Ei + w * params.V), f"E{i}+Vw|0"))
    first_ops.append(KrausOp(np.kron(np.eye(d), c1_1), 0.0, "skip|1"))
    spec_p = eig_hermitian(P.H_prime)
    second_ops = [
        KrausOp(
            np.kron(np.outer(spec_p.eigenvectors[:, j], spec_p.eigenvectors[:, j].conj()), c2_0),
            float(spec_p.eigenvalues[j]),
            f"E'{j}|0",
        )
        for j in range(d)
    ]
    evals_m = np.linalg.eigvalsh(params.m)
    if evals_m[0] < -1e-10 or evals_m[-1] > 1.0 + 1e-10:
        raise ValueError("contraction m has eigenvalues outside [0, 1]")
    clipped_sqrt = lambda x: np.sqrt(max(x, 0.0))
    sqrt_m = func_hermitian(params.m, clipped_sqrt)
    sqrt_rest = func_hermitian(np.eye(d) - params.m, clipped_sqrt)
    Udag = P.U.conj().T
    second_ops.append(KrausOp(np.kron(sqrt_m @ Udag, c2_1), float(W1), "large|1"))
    second_ops.append(KrausOp(np.kron(sqrt_rest @ Udag, c2_1), 0.0, "zero|1"))
    return CircuitRealization(
        system_dim=d,
        control_dim=4,
        control_state=control,
        first=KrausInstrument(1, tuple(first_ops)),
        second=KrausInstrument(2, tuple(second_ops)),
        evolution=P.U,
    )


# ---------------------------------------------------------------------------
# Induced scheme and trajectory sampling
# ---------------------------------------------------------------------------

def _trace_out_control(A: np.ndarray, d: int, c: int) -> np.ndarray:
    return A.reshape(d, c, d, c).trace(axis1=1, axis2=3)


def _effect_operators(C: CircuitRealization) -> list[list[np.ndarray]]:
    """Joint-space effect K1^dag (U^dag (x) 1) K2^dag K2 (U (x) 1) K1 per outcome pair."""
    UJ = np.kron(C.evolution, np.eye(C.control_dim))
    effects = []
    for k_op in C.first.operators:
        evolved = UJ @ k_op.matrix
        row = []
        for l_op in C.second.operators:
            KL = l_op.matrix @ evolved
            row.append(KL.conj().T @ KL)
        effects.append(row)
    return effects


def induced_povm(C: CircuitRealization, drop_tol: float = DROP_TOL) -> MeasurementScheme:
    """System-level scheme obtained by tracing the control out of the circuit.

    The element for (first outcome k, second outcome l) carries the work
    value (reading l) - (reading k); identically vanishing elements are
    dropped.  Completeness of the result is verified.
    """
    d, c = C.system_dim, C.control_dim
    rho_c = C.control_state
    weight = np.kron(np.eye(d), rho_c)
    pairs = []
    for k_op, row in zip(C.first.operators, _effect_operators(C)):
        for l_op, eff in zip(C.second.operators, row):
            M = _trace_out_control(weight @ eff, d, c)
            M = (M + M.conj().T) / 2
            if schatten_inf_norm(M) <= drop_tol:
                continue
            pairs.append((M, float(l_op.value - k_op.value), f"{k_op.label}>{l_op.label}"))
    scheme = scheme_from_pairs(pairs, d)
    total = sum(out.matrix for out in scheme.outcomes)
    dev = schatten_inf_norm(total - np.eye(d))
    if dev > KRAUS_COMPLETENESS_TOL:
        raise InvalidSchemeError(f"induced elements violate completeness by {dev:.3e}")
    return scheme


def _outcome_probabilities(C: CircuitRealization, rho: np.ndarray) -> np.ndarray:
    """Joint probability p[k, l] of first outcome k then second outcome l."""
    rho = as_density(rho)
    joint0 = np.kron(rho, C.control_state)
    effects = _effect_operators(C)
    p = np.empty((len(C.first.operators), len(C.second.operators)))
    for k, row in enumerate(effects):
        for l, eff in enumerate(row):
            p[k, l] = float(np.trace(joint0 @ eff).real)
    if p.min() < -1e-12:
        raise ArithmeticError(f"negative trajectory probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ArithmeticError(f"trajectory probabilities sum to {total!r}")
    return p / total


def _shot_stream(seed: int, shot: int) -> np.random.Generator:
    """Counter-based stream for one shot: reproducible and order-independent."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[shot, 0, 0, 0]))


def sample_trajectories(
    C: CircuitRealization,
    rho: np.ndarray,
    shots: int,
    seed: int,
) -> WorkSamples:
    """Draw work trajectories: stage-1 outcome, collapse, evolve, stage-2 outcome.

    Each shot consumes two uniforms from its own counter-based stream keyed
    by (seed, shot index), so any shot subset resamples identically.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = _outcome_probabilities(C, rho)
    first_values = np.array([op.value for op in C.first.operators])
    second_values = np.array([op.value for op in C.second.operators])
    p_first = p.sum(axis=1)
    cum_first = np.cumsum(p_first)
    cum_first /= cum_first[-1]
    cond = np.zeros_like(p)
    for k in range(len(p_first)):
        if p_first[k] > 0:
            cond[k] = np.cumsum(p[k]) / p_first[k]
        else:
            cond[k] = 1.0
    works = np.empty(shots)
    for s in range(shots):
        u1, u2 = _shot_stream(seed, s).random(2)
        k = int(np.searchsorted(cum_first, u1, side="right"))
        k = min(k, len(p_first) - 1)
        l = int(np.searchsorted(cond[k], u2, side="right"))
        l = min(l, p.shape[1] - 1)
        works[s] = second_values[l] - first_values[k]
    return WorkSamples(samples=works, shots=shots, seed=seed)


@dataclass(frozen=True)
class EstimateSummary:
    mean_work: float
    mean_work_err: float
    jarzynski_mean: float
    jarzynski_err: float
    heavy_tailed: bool
    shots: int
    seed: int


def _jackknife_err(values: np.ndarray) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    total = values.sum()
    loo = (total - values) / (n - 1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def estimate_observables(samples: WorkSamples, P: Process) -> EstimateSummary:
    """Sample mean of the work and of e^{-beta W} with jackknife errors.

    Flags the estimate as heavy-tailed when a single trajectory carries the
    bulk of the variance of e^{-beta W}, which happens whenever rare
    outcomes of size ~ w/epsilon dominate.
    """
    x = samples.samples
    with np.errstate(over="ignore"):
        y = np.exp(-P.beta * x)
    mean_w = float(x.mean())
    mean_y = float(y.mean())
    heavy = bool(np.any(~np.isfinite(y)))
    if not heavy and len(y) > 1:
        dev2 = (y - mean_y) ** 2
        total = dev2.sum()
        if total > 0 and dev2.max() > 0.5 * total:
            heavy = True
    return EstimateSummary(
        mean_work=mean_w,
        mean_work_err=_jackknife_err(x),
        jarzynski_mean=mean_y,
        jarzynski_err=_jackknife_err(y) if np.all(np.isfinite(y)) else float("inf"),
        heavy_tailed=heavy,
        shots=samples.shots,
        seed=samples.seed,
    )


def save_samples_csv(samples: WorkSamples, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["shot", "work"])
        for s, w in enumerate(samples.samples):
            writer.writerow([s, format(w, ".17g")])


def save_estimate_json(summary: EstimateSummary, path: str | Path) -> None:
    Path(path).write_text(json.dumps({
        "mean_work": summary.mean_work,
        "mean_work_err": summary.mean_work_err,
        "jarzynski_mean": summary.jarzynski_mean,
        "jarzynski_err": summary.jarzynski_err,
        "heavy_tailed": summary.heavy_tailed,
        "shots": summary.shots,
        "seed": summary.seed,
    }, indent=1) + "\n")
