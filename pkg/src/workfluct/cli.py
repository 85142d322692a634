"""Command-line front end.

Subcommands cover scheme verification against a process, the
deviation-versus-epsilon sweep of the worked qubit example, coherent-state
outcome histograms, the dissipated-work model analysis, Monte-Carlo
trajectory sampling of the circuit realizations, and the deviation
minimizer.  Exit codes: 0 success, 1 invariant failure, 2 usage or parse
errors.  All numbers are in natural units and CSV fields carry 17
significant digits so doubles round-trip losslessly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .circuits import (
    build_circuit1,
    build_circuit2,
    build_circuit_epsv,
    estimate_observables,
    sample_trajectories,
    save_estimate_json,
    save_samples_csv,
)
from .dissipation import maximize_xi as dissipation_maximum
from .dissipation import write_xi_curve_csv
from .linalg import MatrixValidationError, matrix_from_json
from .modified import tpm_eps_v_scheme
from .optimize import InfeasibleSchemeError, minimize_xi
from .process import load_process, thermal_quantities
from .qubit import coherent_histogram, fig2_sweep, write_fig2_csv, write_histogram_csv
from .scheme import (
    InvalidSchemeError,
    golden_thompson_correction,
    is_energy_conserving,
    load_scheme,
    save_scheme,
    validate_scheme,
    xi_correction,
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2


def _max_workers() -> int:
    try:
        return max(int(os.environ.get("WORKFLUCT_THREADS", "1")), 1)
    except ValueError:
        return 1


def _load_state(path: str, dim: int) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    rho = matrix_from_json(data["rho"], "rho")
    if rho.shape != (dim, dim):
        raise MatrixValidationError(f"state has shape {rho.shape}, process dim is {dim}")
    return rho


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        scheme = load_scheme(args.scheme)
        process = load_process(args.process)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot parse inputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = validate_scheme(scheme)
    print(f"validation: {'pass' if report.passed else 'FAIL'} "
          f"(max negativity {report.max_negativity:.3e}, "
          f"completeness error {report.completeness_error:.3e})")
    ok = report.passed
    conserving = is_energy_conserving(scheme, process, tol=args.tol)
    print(f"mean-energy conservation: {'pass' if conserving else 'FAIL'} (tol {args.tol:g})")
    ok = ok and conserving
    try:
        xi = xi_correction(scheme, process)
        gt = golden_thompson_correction(scheme, process)
        print(f"xi = {xi:.12g}")
        print(f"golden_thompson = {gt:.12g}")
        if conserving and (xi < -1e-9 or gt < -1e-9 or xi < gt - 1e-9):
            print("positivity chain xi >= gt >= 0 violated", file=sys.stderr)
            ok = False
    except InvalidSchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        ok = False
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_fig2(args: argparse.Namespace) -> int:
    if not (0 < args.eps_min < args.eps_max < 1) or args.points < 1:
        print("error: need 0 < eps-min < eps-max < 1 and points >= 1", file=sys.stderr)
        return EXIT_USAGE
    grid = np.geomspace(args.eps_min, args.eps_max, args.points)
    result = fig2_sweep(args.delta, args.delta_prime, args.beta, grid)
    write_fig2_csv(result, args.out)
    if args.points > 1:
        print(f"slope ln(xi) vs ln(1/eps): {result.slope_xi:.6f}")
        print(f"slope ln(lambda_plus): {result.slope_lam_plus:.6f}")
        print(f"slope ln(-lambda_minus): {result.slope_neg_lam_minus:.6f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_histogram(args: argparse.Namespace) -> int:
    if not 0 < args.eps < 1:
        print("error: eps must lie in (0, 1)", file=sys.stderr)
        return EXIT_USAGE
    if not (0 <= args.theta <= np.pi and 0 <= args.phi < 2 * np.pi):
        print("error: need theta in [0, pi] and phi in [0, 2 pi)", file=sys.stderr)
        return EXIT_USAGE
    rows = coherent_histogram(args.delta, args.delta_prime, args.eps, args.theta, args.phi)
    write_histogram_csv(rows, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_dissipation(args: argparse.Namespace) -> int:
    peak = dissipation_maximum()
    a_grid = np.linspace(args.a_min, args.a_max, args.points)
    write_xi_curve_csv(args.out, a_grid)
    summary = {
        "a_max": peak.a,
        "b_max": peak.b,
        "xi_max": peak.xi,
    }
    summary_path = Path(args.out).with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summary, indent=1) + "\n")
    print(f"xi_max = {peak.xi:.9f} at a = {peak.a:.9f} (b = {peak.b:.9f})")
    print(f"wrote {args.out} and {summary_path}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    try:
        process = load_process(args.process)
        rho = _load_state(args.state, process.dim) if args.state else thermal_quantities(process).tau_beta
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot parse inputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.circuit == "1":
        circuit = build_circuit1(process, args.eps)
    elif args.circuit == "2":
        circuit = build_circuit2(process, args.eps)
    elif args.circuit == "epsv":
        _, params = tpm_eps_v_scheme(process, args.eps)
        circuit = build_circuit_epsv(process, args.eps, params)
    else:
        print(f"error: unknown circuit {args.circuit!r}", file=sys.stderr)
        return EXIT_USAGE
    samples = sample_trajectories(circuit, rho, args.shots, args.seed)
    save_samples_csv(samples, args.out)
    summary = estimate_observables(samples, process)
    summary_path = Path(args.out).with_suffix(".summary.json")
    save_estimate_json(summary, summary_path)
    print(f"mean work = {summary.mean_work:.9g} +- {summary.mean_work_err:.3g}")
    print(f"<e^-bW>   = {summary.jarzynski_mean:.9g} +- {summary.jarzynski_err:.3g}"
          + ("  [heavy-tailed]" if summary.heavy_tailed else ""))
    print(f"wrote {args.out} and {summary_path}")
    return EXIT_OK


def cmd_minimize_xi(args: argparse.Namespace) -> int:
    try:
        process = load_process(args.process)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot parse inputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        scheme, xi, report = minimize_xi(
            process, K=args.k, restarts=args.restarts, seed=args.seed,
            max_workers=_max_workers(),
        )
    except InfeasibleSchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None:
            Path(args.out).write_text(json.dumps(exc.report.to_json(), indent=1) + "\n")
        return EXIT_INVARIANT
    Path(args.out).write_text(json.dumps(report.to_json(), indent=1) + "\n")
    scheme_path = Path(args.out).with_suffix(".scheme.json")
    save_scheme(scheme, scheme_path)
    print(f"xi = {xi:.12g} (projective work-operator scheme: {report.xi_how:.12g})")
    print(f"wrote {args.out} and {scheme_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="workfluct",
        description="Quantum work-measurement schemes and the corrected Jarzynski equality.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="validate a scheme file against a process file")
    p.add_argument("scheme")
    p.add_argument("process")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fig2", help="deviation and rare-branch eigenvalues vs epsilon")
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--delta-prime", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--eps-min", type=float, default=1e-3)
    p.add_argument("--eps-max", type=float, default=0.9)
    p.add_argument("--points", type=int, default=24)
    p.add_argument("--out", default="fig2.csv")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("histogram", help="coherent-state outcome histogram")
    p.add_argument("--delta", type=float, default=15.0)
    p.add_argument("--delta-prime", type=float, default=3.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=np.pi / 2)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--out", default="histogram.csv")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("dissipation", help="dissipated-work model curve and maximum")
    p.add_argument("--a-min", type=float, default=0.1)
    p.add_argument("--a-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=39)
    p.add_argument("--out", default="dissipation.csv")
    p.set_defaults(func=cmd_dissipation)

    p = sub.add_parser("sample", help="Monte-Carlo work trajectories of a circuit")
    p.add_argument("--circuit", choices=["1", "2", "epsv"], required=True)
    p.add_argument("--process", required=True)
    p.add_argument("--state", default=None, help="state JSON; defaults to the thermal state")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="samples.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("minimize-xi", help="search for a small-deviation scheme")
    p.add_argument("--process", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--restarts", type=int, default=6)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="minimize.json")
    p.set_defaults(func=cmd_minimize_xi)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MatrixValidationError, InvalidSchemeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
