"""Time integration of the vectorized master equation.

Strategy:
1. Build the generator once per trajectory (precomputed basis, rates
   re-evaluated at every requested time).
2. Integrate d vec(rho)/dt = L(t) vec(rho) with an embedded Runge-Kutta
   pair from scipy (RK45 or DOP853), or with classical fixed-step RK4.
3. Sample on a uniform grid and monitor trace, Hermiticity and the smallest
   eigenvalue of rho at every sample.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from app.dissipator import (
    BathParams,
    LiouvillianGenerator,
    assemble_liouvillian,
    dominant_rate,
)
from app.errors import IntegrationError, PositivityError, StiffnessError
from app.hamiltonian import SystemParams, lz_survival
from app.linalg import (
    ComplexMatrix3,
    basis_projector,
    density_matrix,
    devectorize,
    hermitian_eigenvalues3,
    vectorize,
)

logger = logging.getLogger(__name__)

METHODS = ("RK45", "DOP853", "RK4")

# Eigenvalues of rho below this abort the run
POSITIVITY_ABORT = -1e-3
# Negative eigenvalues above this are roundoff on a pure state
POSITIVITY_NOISE = -1e-9
TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
CLOSED_SYSTEM_STEP = 1e-2


@dataclass(frozen=True)
class IntegratorOptions:
    """
    Integrator settings.

    ``max_step`` of None resolves to min(1e-2, 0.1 * 2pi / omega3) so that the
    fastest coherence is resolved. ``max_evaluations`` caps generator calls
    and turns a stability-limited crawl into a stiffness error.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: Optional[float] = None
    method: str = "RK45"
    samples: int = 600
    max_evaluations: int = 5_000_000

    def __post_init__(self):
        problems = []
        if not self.rel_tol > 0:
            problems.append("rel_tol")
        if not self.abs_tol > 0:
            problems.append("abs_tol")
        if self.max_step is not None and not self.max_step > 0:
            problems.append("max_step")
        if self.method not in METHODS:
            problems.append("method")
        if self.samples < 2:
            problems.append("samples")
        if self.max_evaluations < 1:
            problems.append("max_evaluations")
        if problems:
            raise ValueError(f"Invalid integrator options: {', '.join(problems)}")

    def step_ceiling(self, omega3: Optional[float] = None) -> float:
        if self.max_step is not None:
            return self.max_step
        if omega3 is None:
            return 1e-2
        return min(1e-2, 0.1 * 2.0 * math.pi / omega3)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Sampled trajectory with invariant monitors.

    ``coherences`` holds rho12, rho13 and rho23 per sample.
    """

    times: np.ndarray
    populations: np.ndarray
    coherences: np.ndarray
    trace_error: float
    herm_error: float
    min_eig: float
    min_eig_time: float
    wall_time: float = 0.0
    states: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)), repr=False)

    @property
    def final_populations(self) -> Tuple[float, float, float]:
        p1, p2, p3 = self.populations[-1]
        return float(p1), float(p2), float(p3)

    @property
    def survival(self) -> float:
        """P1 at the last sample."""
        return float(self.populations[-1, 0])


class ClosedSystemCheck(NamedTuple):
    p1_numeric: float
    p1_formula: float
    defect: float


class _IntegrationStalled(Exception):
    def __init__(self, t: float, reason: str):
        super().__init__(reason)
        self.t = t
        self.reason = reason


def populations(rho: ComplexMatrix3) -> Tuple[float, float, float]:
    """Bare-basis populations (P1, P2, P3)."""
    diag = np.real(np.diagonal(rho))
    return float(diag[0]), float(diag[1]), float(diag[2])


def population_table(states: np.ndarray) -> np.ndarray:
    """Populations of every sample as an (n, 3) array."""
    return np.array([populations(rho) for rho in states], dtype=np.float64).reshape(-1, 3)


def coherence_table(states: np.ndarray) -> np.ndarray:
    """Columns rho12, rho13, rho23 of every sample."""
    return np.stack([states[:, 0, 1], states[:, 0, 2], states[:, 1, 2]], axis=1)


def _rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_eval: np.ndarray,
    max_step: float,
) -> np.ndarray:
    """Classical fourth-order Runge-Kutta, landing exactly on every sample time."""
    ys = np.empty((len(t_eval), len(y0)), dtype=np.complex128)
    ys[0] = y0
    y = y0.astype(np.complex128)
    for k in range(1, len(t_eval)):
        t0, t1 = t_eval[k - 1], t_eval[k]
        n_sub = max(1, math.ceil(abs(t1 - t0) / max_step))
        h = (t1 - t0) / n_sub
        t = t0
        for _ in range(n_sub):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            t += h
        if not np.all(np.isfinite(y)):
            raise _IntegrationStalled(t1, "state became non-finite")
        ys[k] = y
    return ys


def integrate_linear(
    generator: Callable[[float], np.ndarray],
    y0: np.ndarray,
    t_eval: np.ndarray,
    opts: IntegratorOptions,
    max_step: float,
    stiffness_rate: Callable[[float], float],
) -> np.ndarray:
    """
    Integrate dy/dt = G(t) y and return samples at ``t_eval``.

    ``t_eval`` must be monotone; it may run backward in time.

    Raises:
        StiffnessError: on step-size underflow, a non-finite state or an
            exhausted evaluation budget. The error names the dominant rate
            reported by ``stiffness_rate`` at the failing time.
        IntegrationError: on any other solver failure.
    """
    evaluations = 0

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        nonlocal evaluations
        evaluations += 1
        if evaluations > opts.max_evaluations:
            raise _IntegrationStalled(
                t, f"evaluation budget of {opts.max_evaluations} exhausted"
            )
        return generator(t) @ y

    y0 = np.asarray(y0, dtype=np.complex128)
    try:
        if opts.method == "RK4":
            ys = _rk4(rhs, y0, t_eval, max_step)
        else:
            sol = solve_ivp(
                rhs,
                t_span=(float(t_eval[0]), float(t_eval[-1])),
                y0=y0,
                method=opts.method,
                t_eval=t_eval,
                rtol=opts.rel_tol,
                atol=opts.abs_tol,
                max_step=max_step,
            )
            if sol.status == -1:
                t_fail = float(sol.t[-1]) if len(sol.t) else float(t_eval[0])
                raise StiffnessError(t_fail, stiffness_rate(t_fail), detail=sol.message)
            if not sol.success:
                raise IntegrationError(f"integration failed: {sol.message}")
            ys = sol.y.T
    except _IntegrationStalled as e:
        raise StiffnessError(
            e.t,
            stiffness_rate(e.t),
            detail=e.reason,
        ) from None

    logger.debug(f"{opts.method}: {evaluations} generator evaluations over {len(t_eval)} samples")
    return ys


def _generator_for(
    params: SystemParams, bath: BathParams, secular: bool
) -> Callable[[float], np.ndarray]:
    if secular:
        return lambda t: assemble_liouvillian(t, params, bath, secular=True)
    return LiouvillianGenerator(params, bath)


def _initial_state(rho0: Optional[ComplexMatrix3]) -> ComplexMatrix3:
    if rho0 is None:
        return basis_projector(1, 1)
    return density_matrix(rho0)


def evolve(
    params: SystemParams,
    bath: BathParams,
    rho0: Optional[ComplexMatrix3] = None,
    opts: Optional[IntegratorOptions] = None,
    secular: bool = False,
) -> TrajectoryRecord:
    """
    Evolve the density matrix over [-tau, tau].

    Args:
        params: model constants
        bath: bath rate and temperature
        rho0: initial density matrix at t = -tau, |1><1| by default
        opts: integrator settings
        secular: use the secular generator (diagnostic)

    Returns:
        TrajectoryRecord sampled on ``opts.samples`` uniform times

    Raises:
        StiffnessError: if the explicit integrator cannot make progress
        PositivityError: if rho develops an eigenvalue below -1e-3
    """
    opts = opts or IntegratorOptions()
    rho = _initial_state(rho0)
    times = np.linspace(-params.tau, params.tau, opts.samples)
    max_step = opts.step_ceiling(params.omega3)

    started = time.perf_counter()
    ys = integrate_linear(
        _generator_for(params, bath, secular),
        vectorize(rho),
        times,
        opts,
        max_step,
        lambda t: dominant_rate(t, params, bath),
    )
    wall_time = time.perf_counter() - started

    record = _monitor(times, ys.reshape(-1, 3, 3), wall_time)
    logger.info(
        f"evolve kappa={params.kappa:g} omega3={params.omega3:g} tau={params.tau:g} "
        f"gamma={bath.gamma:g} theta={bath.theta:g}: P1={record.survival:.6f} "
        f"({wall_time:.2f}s)"
    )
    return record


def _monitor(times: np.ndarray, states: np.ndarray, wall_time: float) -> TrajectoryRecord:
    traces = np.trace(states, axis1=1, axis2=2)
    trace_error = float(np.max(np.abs(traces - 1.0)))
    adjoint = np.conj(np.transpose(states, (0, 2, 1)))
    herm_error = float(np.max(np.abs(states - adjoint)))
    lowest = np.array([hermitian_eigenvalues3(0.5 * (rho + rho.conj().T))[0] for rho in states])
    k_min = int(np.argmin(lowest))
    min_eig = float(lowest[k_min])
    min_eig_time = float(times[k_min])

    if min_eig < POSITIVITY_ABORT:
        raise PositivityError(min_eig_time, min_eig)
    if min_eig < POSITIVITY_NOISE:
        logger.warning(f"density matrix eigenvalue {min_eig:.3e} at t={min_eig_time:.4g}")
    if trace_error > TRACE_TOL:
        logger.warning(f"trace drifted by {trace_error:.3e}")
    if herm_error > HERMITICITY_TOL:
        logger.warning(f"Hermiticity defect {herm_error:.3e}")

    return TrajectoryRecord(
        times=times,
        populations=population_table(states),
        coherences=coherence_table(states),
        trace_error=trace_error,
        herm_error=herm_error,
        min_eig=min_eig,
        min_eig_time=min_eig_time,
        wall_time=wall_time,
        states=states,
    )


def propagate(
    params: SystemParams,
    bath: BathParams,
    rho0: ComplexMatrix3,
    t0: float,
    t1: float,
    opts: Optional[IntegratorOptions] = None,
    secular: bool = False,
) -> ComplexMatrix3:
    """
    Propagate ``rho0`` from ``t0`` to ``t1``; ``t1 < t0`` integrates backward.

    Returns:
        The density matrix at ``t1``.
    """
    opts = opts or IntegratorOptions()
    rho = density_matrix(rho0)
    if t0 == t1:
        return rho
    ys = integrate_linear(
        _generator_for(params, bath, secular),
        vectorize(rho),
        np.array([t0, t1]),
        opts,
        opts.step_ceiling(params.omega3),
        lambda t: dominant_rate(t, params, bath),
    )
    return devectorize(ys[-1])


def closed_system_check(
    params: SystemParams, opts: Optional[IntegratorOptions] = None
) -> ClosedSystemCheck:
    """
    Compare the coherent evolution with the asymptotic crossing formula.

    Without the bath level |3> is never populated from |1><1|, so an unset
    step ceiling resolves to CLOSED_SYSTEM_STEP instead of the omega3 bound.

    Returns:
        (numeric P1(tau), formula value, absolute defect)
    """
    opts = opts or IntegratorOptions()
    if opts.max_step is None:
        opts = replace(opts, max_step=CLOSED_SYSTEM_STEP)
    if not params.lz_formula_valid:
        logger.warning(
            f"closed-system check at tau={params.tau:g} is outside the formula's validity"
        )
    record = evolve(params, BathParams(gamma=0.0, theta=0.0), opts=opts)
    formula = lz_survival(params.omega, params.kappa)
    defect = abs(record.survival - formula)
    logger.info(
        f"closed-system kappa={params.kappa:g}: numeric={record.survival:.6f} "
        f"formula={formula:.6f} defect={defect:.2e}"
    )
    return ClosedSystemCheck(record.survival, formula, defect)
