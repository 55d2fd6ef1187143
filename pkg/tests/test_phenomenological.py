"""Tests for the lossy two-level baseline and the adiabatic-elimination estimate."""

import math

import numpy as np
import pytest

from app.hamiltonian import lz_survival
from app.phenomenological import (
    PhenomParams,
    adiabatic_elimination_survival,
    phenom_evolve,
    phenom_hamiltonian,
)
from app.propagator import IntegratorOptions

LOOSE = IntegratorOptions(rel_tol=1e-6, abs_tol=1e-8, samples=101)
CURVE = IntegratorOptions(rel_tol=1e-6, abs_tol=1e-8, samples=11)


def test_hamiltonian_carries_decay_on_level_two():
    h = phenom_hamiltonian(4.0, PhenomParams(omega=1.0, kappa=1.0, tau=10.0, gamma_ph=0.3))
    expected = np.array([[-2.0, 1.0], [1.0, 2.0 - 0.3j]])
    assert np.array_equal(h, expected)


def test_params_reject_invalid():
    with pytest.raises(ValueError) as exc:
        PhenomParams(omega=1.0, kappa=0.0, tau=10.0, gamma_ph=-1.0)
    assert "kappa" in str(exc.value)
    assert "gamma_ph" in str(exc.value)


def test_norm_decays_monotonically():
    trajectory = phenom_evolve(PhenomParams(omega=1.0, kappa=1.0, tau=10.0, gamma_ph=0.5), LOOSE)
    assert trajectory.norm[0] == 1.0
    assert np.all(np.diff(trajectory.norm) <= 1e-9)
    assert trajectory.norm[-1] < 1.0
    assert trajectory.survival_curve.shape == (101,)


def test_survival_rises_with_strong_damping():
    survivals = [
        phenom_evolve(PhenomParams(omega=1.0, kappa=1.0, tau=30.0, gamma_ph=g), LOOSE).survival
        for g in (100.0, 300.0, 1000.0)
    ]
    assert survivals[0] < survivals[1] < survivals[2] < 1.0


def _survival(gamma_ph: float) -> float:
    p = PhenomParams(omega=1.0, kappa=1.0, tau=30.0, gamma_ph=gamma_ph)
    return phenom_evolve(p, CURVE).survival


def test_survival_plateau_for_weak_damping():
    assert abs(_survival(0.01) - _survival(0.1)) < 0.02


def test_survival_is_flat_then_increasing():
    survivals = [_survival(g) for g in np.geomspace(1e-3, 1e3, 7)]
    plateau = survivals[0]
    assert min(survivals) >= plateau - 0.02
    assert survivals[-1] > 0.85


# ----------------------------------------------------------------- estimate ---


def test_estimate_reduces_to_crossing_formula_for_long_windows():
    estimate = adiabatic_elimination_survival(1.0, 1.0, 1e12, 5.0)
    assert estimate == pytest.approx(lz_survival(1.0, 1.0), rel=1e-9)


def test_estimate_value():
    expected = math.exp(-4.0 * math.atan(30.0 / 1e3))
    assert adiabatic_elimination_survival(1.0, 1.0, 30.0, 1e3) == pytest.approx(expected)


@pytest.mark.parametrize("gamma", [0.0, -1.0])
def test_estimate_rejects_non_positive_gamma(gamma):
    with pytest.raises(ValueError):
        adiabatic_elimination_survival(1.0, 1.0, 30.0, gamma)
