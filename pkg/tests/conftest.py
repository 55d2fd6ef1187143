"""Shared pytest fixtures and helpers for the simulator test suite."""

import numpy as np
import pytest

from app.dissipator import BathParams
from app.hamiltonian import SystemParams
from app.propagator import IntegratorOptions


def make_params(
    omega: float = 1.0, kappa: float = 1.0, omega3: float = 1e3, tau: float = 30.0
) -> SystemParams:
    """Model constants with the canonical defaults."""
    return SystemParams(omega=omega, kappa=kappa, omega3=omega3, tau=tau)


def random_hermitian(rng: np.random.Generator, n: int = 3) -> np.ndarray:
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (m + m.conj().T)


def random_density_matrix(rng: np.random.Generator) -> np.ndarray:
    """Random full-rank density matrix."""
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


@pytest.fixture
def rng():
    """Seeded generator so every run sees the same samples."""
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def zero_temperature_bath():
    return BathParams(gamma=1.0, theta=0.0)


@pytest.fixture
def fast_opts():
    """Step ceiling of 1e-2; level |3> coherences stay empty from |1><1|."""
    return IntegratorOptions(max_step=1e-2, samples=201)
