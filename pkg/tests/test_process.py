import json

import numpy as np
import pytest

from workfluct import (
    Process,
    char_energy_scale,
    dephased_how,
    how_operator,
    load_process,
    perturb_how,
    perturbed_process,
    relative_entropy,
    save_process,
    schatten_inf_norm,
    thermal_quantities,
)
from workfluct.process import DegenerateProcessError, process_from_json, process_to_json
from conftest import random_hermitian, random_process, random_unitary

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
HAD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def qubit_example(delta=2.0, delta_prime=3.0, beta=0.2):
    return Process(np.diag([0.0, delta]), np.diag([0.0, delta_prime]), HAD, beta)


def test_how_vanishes_for_trivial_drive():
    H = np.diag([0.0, 1.0, 2.0])
    P = Process(H, H, np.eye(3), 1.0)
    assert schatten_inf_norm(how_operator(P)) == pytest.approx(0.0, abs=1e-14)


def test_how_qubit_closed_form():
    P = qubit_example()
    minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    expected = 3.0 * np.outer(minus, minus) - 2.0 * np.diag([0.0, 1.0])
    assert schatten_inf_norm(how_operator(P) - expected) < 1e-12


def test_how_trace_identity(rng):
    P = random_process(rng, 4, 1.0)
    om = how_operator(P)
    expected = np.trace(P.H_prime) - np.trace(P.H)
    assert np.trace(om).real == pytest.approx(expected.real, abs=1e-10)


def test_dephased_equals_how_when_commuting():
    H = np.diag([0.0, 1.0])
    P = Process(H, 2.0 * H, np.eye(2), 1.0)
    assert schatten_inf_norm(dephased_how(P) - how_operator(P)) < 1e-12


def test_dephased_qubit_closed_form():
    P = qubit_example()
    expected = (3.0 / 2.0) * np.eye(2) - 2.0 * np.diag([0.0, 1.0])
    assert schatten_inf_norm(dephased_how(P) - expected) < 1e-12


def test_dephased_commutes_with_h(rng):
    P = random_process(rng, 3, 1.0)
    om_d = dephased_how(P)
    comm = om_d @ P.H - P.H @ om_d
    assert schatten_inf_norm(comm) <= 1e-10 * schatten_inf_norm(how_operator(P))


def test_dephased_preserves_trace(rng):
    P = random_process(rng, 5, 0.7)
    assert np.trace(dephased_how(P)).real == pytest.approx(
        np.trace(how_operator(P)).real, abs=1e-10
    )


def test_thermal_quantities_flat_hamiltonian():
    P = Process(np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2), 2.0)
    tq = thermal_quantities(P)
    assert np.allclose(tq.tau_beta, np.eye(2) / 2.0)
    assert tq.F == pytest.approx(-np.log(2.0) / 2.0)
    assert tq.delta_F == pytest.approx(0.0)


def test_thermal_quantities_qubit_partition_function():
    P = qubit_example(beta=0.2)
    tq = thermal_quantities(P)
    assert tq.Z == pytest.approx(1.0 + np.exp(-0.4), rel=1e-14)


def test_thermal_quantities_survive_large_beta():
    P = Process(np.diag([0.0, 500.0]), np.diag([0.0, 700.0]), np.eye(2), 10.0)
    tq = thermal_quantities(P)
    assert np.isfinite(tq.F) and np.isfinite(tq.delta_F)
    assert np.allclose(tq.tau_beta, np.diag([1.0, 0.0]), atol=1e-12)


def test_second_law_identity(rng):
    # mean work minus free-energy change equals the relative-entropy production
    for d, beta in ((2, 0.5), (4, 1.3)):
        P = random_process(rng, d, beta)
        tq = thermal_quantities(P)
        om = how_operator(P)
        lhs = float(np.trace(om @ tq.tau_beta).real) - tq.delta_F
        evolved = P.U @ tq.tau_beta @ P.U.conj().T
        spec = np.linalg.eigh(P.H_prime)
        shifted = np.exp(-beta * (spec[0] - spec[0][0]))
        tau_p = (spec[1] * (shifted / shifted.sum())) @ spec[1].conj().T
        rhs = relative_entropy(evolved, tau_p) / beta
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_char_energy_scale():
    P = Process(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]), np.eye(2), 1.0)
    assert char_energy_scale(P) == pytest.approx(2.0)
    P2 = qubit_example()
    assert char_energy_scale(P2) == pytest.approx(np.sqrt(13.0))
    with pytest.raises(DegenerateProcessError):
        char_energy_scale(Process(np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2), 1.0))


def test_perturb_how(rng):
    P = random_process(rng, 2, 1.0)
    om = how_operator(P)
    assert np.allclose(perturb_how(P, 0.0, SX), om)
    pert = perturb_how(P, 1e-3, SX)
    assert np.allclose(pert, om + 1e-3 * SX)
    what = random_hermitian(rng, 2)
    eta = 0.37
    assert schatten_inf_norm(perturb_how(P, eta, what) - om) == pytest.approx(
        eta * schatten_inf_norm(what), rel=1e-12
    )
    with pytest.raises(ValueError):
        perturb_how(P, -0.1, SX)


def test_perturbed_process_realizes_shifted_how(rng):
    P = random_process(rng, 3, 0.8)
    what = random_hermitian(rng, 3)
    P2 = perturbed_process(P, 1e-2, what)
    assert schatten_inf_norm(how_operator(P2) - perturb_how(P, 1e-2, what)) < 1e-12
    assert np.allclose(P2.H, P.H)


def test_process_json_round_trip(rng, tmp_path):
    P = random_process(rng, 3, 1.7)
    path = tmp_path / "process.json"
    save_process(P, path)
    back = load_process(path)
    assert np.allclose(back.H, P.H)
    assert np.allclose(back.H_prime, P.H_prime)
    assert np.allclose(back.U, P.U)
    assert back.beta == P.beta
    data = process_to_json(P)
    data["dim"] = 5
    with pytest.raises(ValueError):
        process_from_json(data)


def test_process_validation():
    with pytest.raises(ValueError):
        Process(np.eye(2), np.eye(3), np.eye(2), 1.0)
    with pytest.raises(ValueError):
        Process(np.eye(2), np.eye(2), np.eye(2), -1.0)
    with pytest.raises(ValueError):
        Process(np.eye(2), np.eye(2), 2.0 * np.eye(2), 1.0)
