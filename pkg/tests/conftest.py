from __future__ import annotations

import numpy as np
import pytest


def random_hermitian(rng: np.random.Generator, d: int, norm: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (A + A.conj().T) / 2
    scale = np.linalg.norm(H, 2)
    return H * (norm / scale) if scale > 0 else H


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_process(rng: np.random.Generator, d: int, beta: float):
    from workfluct import Process

    return Process(
        random_hermitian(rng, d),
        random_hermitian(rng, d),
        random_unitary(rng, d),
        beta,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
