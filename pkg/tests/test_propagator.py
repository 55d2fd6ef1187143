"""Tests for the density-matrix integrator and its invariant monitors."""

import logging
from dataclasses import replace

import numpy as np
import pytest

from app.dissipator import BathParams
from app.errors import PositivityError, StiffnessError
from app.hamiltonian import lz_survival
from app.linalg import basis_projector
from app.oracle import oracle_populations
from app.phenomenological import (
    PhenomParams,
    adiabatic_elimination_survival,
    phenom_evolve,
)
from app.propagator import (
    IntegratorOptions,
    _monitor,
    closed_system_check,
    evolve,
    population_table,
    populations,
    propagate,
)
from tests.conftest import make_params, random_density_matrix

CLOSED = BathParams(gamma=0.0, theta=0.0)
LOOSE = dict(rel_tol=1e-6, abs_tol=1e-8)
# Starting from |1><1| the level |3> coherences stay empty, so 1e-2 resolves the run
CURVE = IntegratorOptions(max_step=1e-2, samples=11, **LOOSE)


# ----------------------------------------------------------------- options ---


def test_options_reject_invalid_fields():
    with pytest.raises(ValueError) as exc:
        IntegratorOptions(rel_tol=0.0, max_step=-1.0, method="Euler", samples=1)
    for name in ("rel_tol", "max_step", "method", "samples"):
        assert name in str(exc.value)


def test_step_ceiling_resolves_from_omega3():
    opts = IntegratorOptions()
    assert opts.step_ceiling() == 1e-2
    assert opts.step_ceiling(1e3) == pytest.approx(0.1 * 2 * np.pi / 1e3)
    assert opts.step_ceiling(10.0) == 1e-2
    assert IntegratorOptions(max_step=0.05).step_ceiling(1e3) == 0.05


# ----------------------------------------------------------------- readout ---


@pytest.mark.parametrize(
    "rho, expected",
    [
        (basis_projector(1, 1), (1.0, 0.0, 0.0)),
        (np.eye(3) / 3.0, (1 / 3, 1 / 3, 1 / 3)),
        (0.5 * np.array([[1, 1, 0], [1, 1, 0], [0, 0, 0]], dtype=complex), (0.5, 0.5, 0.0)),
    ],
)
def test_populations_read_the_diagonal(rho, expected):
    assert populations(rho) == pytest.approx(expected)


def test_population_table_sums_to_trace(rng):
    states = np.stack([random_density_matrix(rng) for _ in range(4)])
    table = population_table(states)
    assert table.shape == (4, 3)
    assert np.allclose(table.sum(axis=1), 1.0)
    assert tuple(table[2]) == pytest.approx(populations(states[2]))


# ----------------------------------------------------------------- closed system ---


@pytest.mark.parametrize(
    "kappa, tau, bound, opts",
    [
        (1.0, 30.0, 0.01, IntegratorOptions()),
        (2.0, 30.0, 0.02, IntegratorOptions(**LOOSE)),
        (4.0, 30.0, 0.03, IntegratorOptions(**LOOSE)),
    ],
)
def test_closed_system_matches_crossing_formula(kappa, tau, bound, opts):
    check = closed_system_check(make_params(kappa=kappa, tau=tau), opts)
    assert check.p1_formula == lz_survival(1.0, kappa)
    assert check.defect <= bound


def test_weak_coupling_keeps_initial_level(fast_opts):
    record = evolve(make_params(omega=1e-3, tau=10.0), CLOSED, opts=fast_opts)
    assert record.survival >= 1.0 - 1e-4
    assert np.max(record.populations[:, 2]) == 0.0


def test_closed_evolution_matches_unitary_reference(fast_opts):
    params = make_params(tau=10.0)
    record = evolve(params, CLOSED, opts=replace(fast_opts, samples=101))
    reference = oracle_populations(1.0, 1.0, record.times)
    assert np.max(np.abs(record.populations[:, :2] - reference)) <= 1e-6
    assert record.trace_error <= 1e-8
    assert record.min_eig >= -1e-6


def test_lossless_amplitudes_match_unitary_reference():
    p = PhenomParams(omega=1.0, kappa=1.0, tau=10.0)
    trajectory = phenom_evolve(p, IntegratorOptions(samples=101))
    reference = oracle_populations(1.0, 1.0, trajectory.times)
    assert np.max(np.abs(trajectory.survival_curve - reference[:, 0])) <= 1e-6
    assert np.max(np.abs(trajectory.norm - 1.0)) <= 1e-7


def test_rk4_matches_unitary_reference():
    params = make_params(tau=10.0)
    opts = IntegratorOptions(method="RK4", max_step=1e-2, samples=101)
    record = evolve(params, CLOSED, opts=opts)
    reference = oracle_populations(1.0, 1.0, record.times)
    assert np.max(np.abs(record.populations[:, :2] - reference)) <= 1e-4


def test_time_reversal_recovers_initial_state():
    params = make_params(tau=10.0)
    opts = IntegratorOptions(rel_tol=1e-10, abs_tol=1e-12, max_step=1e-2)
    rho0 = basis_projector(1, 1)
    forward = propagate(params, CLOSED, rho0, -10.0, 10.0, opts)
    back = propagate(params, CLOSED, forward, 10.0, -10.0, opts)
    assert np.max(np.abs(back - rho0)) <= 1e-6


def test_propagate_to_same_time_is_identity():
    rho0 = basis_projector(2, 2)
    out = propagate(make_params(), BathParams(gamma=1.0), rho0, 3.0, 3.0)
    assert np.array_equal(out, rho0)


def test_propagate_agrees_with_final_sample(fast_opts, zero_temperature_bath):
    params = make_params(tau=10.0)
    record = evolve(params, zero_temperature_bath, opts=fast_opts)
    final = propagate(params, zero_temperature_bath, basis_projector(1, 1), -10.0, 10.0, fast_opts)
    assert np.allclose(np.real(np.diagonal(final)), record.final_populations, atol=1e-6)


# ----------------------------------------------------------------- dissipative runs ---


def test_tolerance_halving_is_converged(zero_temperature_bath):
    params = make_params(tau=10.0)
    coarse = evolve(params, zero_temperature_bath, opts=IntegratorOptions(max_step=1e-2, **LOOSE))
    fine = evolve(
        params,
        zero_temperature_bath,
        opts=IntegratorOptions(max_step=1e-2, rel_tol=5e-7, abs_tol=5e-9),
    )
    assert abs(coarse.survival - fine.survival) < 0.01


def test_dissipative_run_keeps_state_physical(fast_opts):
    params = make_params(tau=10.0)
    record = evolve(params, BathParams(gamma=0.5, theta=200.0), opts=fast_opts)
    assert record.trace_error <= 1e-8
    assert record.herm_error <= 1e-10
    assert record.min_eig >= -1e-6
    assert sum(record.final_populations) == pytest.approx(1.0, abs=1e-8)
    assert record.states.shape == (201, 3, 3)
    assert np.max(np.abs(record.coherences[:, 1:])) <= 1e-12


def test_zero_temperature_matches_lossy_amplitudes(fast_opts):
    params = make_params(tau=10.0)
    record = evolve(params, BathParams(gamma=0.5, theta=0.0), opts=fast_opts)
    phenom = phenom_evolve(PhenomParams(omega=1.0, kappa=1.0, tau=10.0, gamma_ph=0.5))
    assert record.survival == pytest.approx(phenom.survival, abs=1e-6)
    lost = 1.0 - phenom.norm[-1]
    assert record.final_populations[2] == pytest.approx(lost, abs=1e-6)


def test_secular_generator_runs(fast_opts, zero_temperature_bath):
    params = make_params(tau=5.0, kappa=2.0)
    record = evolve(params, zero_temperature_bath, opts=fast_opts, secular=True)
    assert 0.0 <= record.survival <= 1.0
    assert record.trace_error <= 1e-8


def test_hot_bath_freezes_the_crossing():
    params = make_params(tau=10.0)
    record = evolve(params, BathParams(gamma=1.0, theta=1e6), opts=IntegratorOptions(**LOOSE))
    assert record.survival >= 0.9
    assert record.min_eig >= -1e-6


def test_low_temperature_end_matches_zero_temperature():
    params = make_params()
    cold = evolve(params, BathParams(gamma=1.0, theta=0.1), opts=CURVE)
    zero = evolve(params, BathParams(gamma=1.0, theta=0.0), opts=CURVE)
    assert abs(cold.survival - zero.survival) <= 0.01


@pytest.mark.slow
@pytest.mark.parametrize("kappa", [1.0, 2.0])
@pytest.mark.parametrize("gamma", [0.1, 1.0])
def test_hot_bath_freezes_the_crossing_over_the_grid(kappa, gamma):
    # Gamma Theta / omega3 = 3e3 on every point
    bath = BathParams(gamma=gamma, theta=3e6 / gamma)
    record = evolve(make_params(kappa=kappa), bath, opts=CURVE)
    assert record.survival >= 0.9
    assert record.min_eig >= -1e-6


# ----------------------------------------------------------------- survival curves ---


def _survival(gamma: float, **overrides) -> float:
    params = make_params(**overrides)
    return evolve(params, BathParams(gamma=gamma, theta=0.0), opts=CURVE).survival


def test_survival_is_flat_for_weak_damping():
    survivals = [_survival(g) for g in np.geomspace(1e-3, 1e-1, 5)]
    assert max(survivals) - min(survivals) <= 0.02


def test_survival_is_insensitive_to_duration():
    survivals = [_survival(0.1, tau=tau) for tau in (10.0, 20.0, 30.0, 40.0, 50.0, 60.0)]
    assert max(survivals) - min(survivals) <= 0.05


def test_survival_rises_with_strong_damping():
    gammas = (1.0, 10.0, 100.0, 1e3)
    survivals = [_survival(g) for g in gammas]
    assert np.all(np.diff(survivals) >= -0.01)
    estimate = adiabatic_elimination_survival(1.0, 1.0, 30.0, 1e3)
    assert survivals[-1] >= 0.85
    assert abs(survivals[-1] - estimate) <= 0.02


def test_strong_damping_follows_adiabatic_elimination():
    p = PhenomParams(omega=1.0, kappa=1.0, tau=30.0, gamma_ph=1e3)
    trajectory = phenom_evolve(p, IntegratorOptions(**LOOSE))
    estimate = adiabatic_elimination_survival(1.0, 1.0, 30.0, 1e3)
    assert estimate == pytest.approx(0.887, abs=1e-3)
    assert trajectory.survival >= 0.85
    assert abs(trajectory.survival - estimate) <= 0.02


# ----------------------------------------------------------------- failures ---


def test_evaluation_budget_raises_stiffness_error(zero_temperature_bath):
    opts = IntegratorOptions(max_step=1e-2, max_evaluations=100)
    with pytest.raises(StiffnessError) as exc:
        evolve(make_params(tau=10.0), zero_temperature_bath, opts=opts)
    assert exc.value.dominant_rate == 1.0
    assert "Gamma*(1+2N)" in str(exc.value)
    assert -10.0 <= exc.value.t <= 10.0


def test_monitor_rejects_negative_state():
    rho = np.diag([1.01, -0.01, 0.0]).astype(complex)
    with pytest.raises(PositivityError) as exc:
        _monitor(np.array([0.0, 1.5]), np.stack([basis_projector(1, 1), rho]), 0.0)
    assert exc.value.t == 1.5
    assert exc.value.min_eig == pytest.approx(-0.01)


def test_monitor_warns_on_small_defects(caplog):
    rho = np.diag([1.0 + 1e-6, -1e-6, 0.0]).astype(complex)
    with caplog.at_level(logging.WARNING, logger="app.propagator"):
        record = _monitor(np.array([0.0]), rho[None], 0.0)
    assert record.min_eig == pytest.approx(-1e-6)
    assert "eigenvalue" in caplog.text


def test_evolve_rejects_invalid_initial_state(params, zero_temperature_bath):
    with pytest.raises(ValueError, match="trace"):
        evolve(params, zero_temperature_bath, rho0=np.eye(3))
