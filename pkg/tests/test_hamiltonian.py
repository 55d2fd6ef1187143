"""Tests for the ideal crossing Hamiltonian and its instantaneous spectrum."""

import logging
import math

import numpy as np
import pytest

from app.hamiltonian import (
    SystemParams,
    bohr_frequencies,
    detuning,
    hamiltonian_at,
    lz_survival,
    spectral_at,
)
from tests.conftest import make_params


@pytest.mark.parametrize(
    "kappa, t, expected", [(1.0, 0.0, 0.0), (1.0, -30.0, -30.0), (2.0, 5.0, 20.0)]
)
def test_detuning_is_linear(kappa, t, expected):
    assert detuning(t, make_params(kappa=kappa)) == expected


def test_hamiltonian_at_crossing():
    h = hamiltonian_at(0.0, make_params())
    expected = np.array([[0, 1, 0], [1, 0, 0], [0, 0, -1000]], dtype=complex)
    assert np.array_equal(h, expected)


@pytest.mark.parametrize("t", [-30.0, -1.3, 0.0, 7.0, 30.0])
def test_hamiltonian_block_structure(t):
    h = hamiltonian_at(t, make_params())
    assert h[2, 2] == -1000.0
    assert h[0, 2] == h[1, 2] == h[2, 0] == h[2, 1] == 0
    assert np.trace(h).real == pytest.approx(-1000.0, abs=1e-12)
    assert np.array_equal(h, h.conj().T)


# ------------------------------------------------------------- spectral data ---


def test_spectral_at_crossing_point():
    s = spectral_at(0.0, make_params())
    assert s.epsilon == pytest.approx(1.0)
    assert s.phi == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("t, phi", [(2.0, 3 * math.pi / 8), (-2.0, math.pi / 8)])
def test_spectral_at_analytic_angles(t, phi):
    s = spectral_at(t, make_params())
    assert s.epsilon == pytest.approx(math.sqrt(2.0))
    assert s.phi == pytest.approx(phi, abs=1e-14)


@pytest.mark.parametrize("t", [-30.0, -4.2, -0.1, 0.0, 0.3, 12.0, 30.0])
def test_spectral_reconstructs_hamiltonian(t):
    params = make_params()
    s = spectral_at(t, params)
    v = s.eigvecs
    assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-12)
    rebuilt = sum(e * s.projector(k) for k, e in enumerate(s.energies))
    h = hamiltonian_at(t, params)
    assert np.max(np.abs(rebuilt - h)) <= 1e-12 * np.max(np.abs(h))


@pytest.mark.parametrize("t", [0.5, 3.0, 29.0, 1e4])
def test_spectrum_mirror_symmetry(t):
    params = make_params()
    forward, backward = spectral_at(t, params), spectral_at(-t, params)
    assert forward.epsilon == backward.epsilon
    assert forward.phi + backward.phi == pytest.approx(math.pi / 2, abs=1e-12)
    assert 0 < backward.phi < math.pi / 2


def test_double_angle_identities():
    params = make_params()
    for t in (-3.0, 0.0, 0.7):
        s = spectral_at(t, params)
        assert s.sin2phi == pytest.approx(params.omega / s.epsilon, abs=1e-14)
        assert s.cos2phi == pytest.approx(math.cos(2 * s.phi), abs=1e-14)
        assert s.epsilon >= params.omega


# ------------------------------------------------------------- Bohr frequencies ---


def test_bohr_frequencies_values_and_pairs():
    params = make_params()
    freqs = bohr_frequencies(spectral_at(0.0, params), params)
    by_label = {f.label: f for f in freqs}
    assert by_label["+3"].omega == pytest.approx(1001.0)
    assert by_label["-3"].omega == pytest.approx(999.0)
    assert by_label["3+"].omega == pytest.approx(-1001.0)
    assert by_label["3-"].omega == pytest.approx(-999.0)
    assert sorted(f.omega for f in freqs) == sorted(-f.omega for f in freqs)


def test_bohr_frequencies_flag_vanishing_pair():
    params = make_params()
    freqs = bohr_frequencies(spectral_at(0.0, params), params)
    flagged = {f.label for f in freqs if f.zero_operator}
    assert flagged == {"+-", "-+"}
    assert [f.label for f in freqs if not f.zero_operator] == ["+3", "-3", "3+", "3-"]


# ------------------------------------------------------------- crossing formula ---


@pytest.mark.parametrize(
    "kappa, expected",
    [(1.0, 1.8674427e-3), (2.0, 0.20787958), (4.0, 0.67523655)],
)
def test_lz_survival_values(kappa, expected):
    assert lz_survival(1.0, kappa) == pytest.approx(expected, rel=1e-6)


def test_lz_survival_monotone_and_limit():
    values = [lz_survival(omega, 1.0) for omega in (1e-6, 0.1, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(1.0, abs=1e-10)


def test_lz_survival_rejects_non_positive():
    with pytest.raises(ValueError):
        lz_survival(0.0, 1.0)


# ------------------------------------------------------------- parameters ---


def test_system_params_reject_non_positive():
    with pytest.raises(ValueError) as exc:
        SystemParams(omega=1.0, kappa=0.0, omega3=-1.0, tau=30.0)
    assert "kappa" in str(exc.value)
    assert "omega3" in str(exc.value)


def test_system_params_warn_on_short_window(caplog):
    with caplog.at_level(logging.WARNING, logger="app.hamiltonian"):
        params = make_params(kappa=0.5, tau=30.0)
    assert not params.lz_formula_valid
    assert "only approximate" in caplog.text


def test_system_params_warn_on_poor_scale_separation(caplog):
    with caplog.at_level(logging.WARNING, logger="app.hamiltonian"):
        make_params(omega3=10.0)
    assert "not well separated" in caplog.text
