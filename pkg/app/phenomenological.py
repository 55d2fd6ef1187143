"""Lossy two-level crossing: -i gamma_ph added to the energy of level |2>.

This is the baseline the microscopic model is compared with. At zero
temperature the flat-spectrum dissipator acts on the {|1>, |2>} block exactly
like this non-Hermitian Hamiltonian with gamma_ph = Gamma, so the comparison
convention gamma_ph = Gamma is used throughout.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.propagator import IntegratorOptions, integrate_linear

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhenomParams:
    omega: float
    kappa: float
    tau: float
    gamma_ph: float = 0.0

    def __post_init__(self):
        invalid = [
            name
            for name in ("omega", "kappa", "tau")
            if not (math.isfinite(getattr(self, name)) and getattr(self, name) > 0)
        ]
        if not (math.isfinite(self.gamma_ph) and self.gamma_ph >= 0):
            invalid.append("gamma_ph")
        if invalid:
            raise ValueError(f"Invalid PhenomParams: {', '.join(invalid)}")


@dataclass(frozen=True, eq=False)
class PhenomTrajectory:
    times: np.ndarray
    amplitudes: np.ndarray
    wall_time: float = 0.0

    @property
    def survival_curve(self) -> np.ndarray:
        """P1(t) = |c1(t)|^2 per sample."""
        return np.abs(self.amplitudes[:, 0]) ** 2

    @property
    def norm(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    @property
    def survival(self) -> float:
        return float(self.survival_curve[-1])


def phenom_hamiltonian(t: float, p: PhenomParams) -> np.ndarray:
    """Non-Hermitian 2x2 Hamiltonian ((-D/2, W), (W, D/2 - i gamma_ph)), D = kappa^2 t."""
    delta = p.kappa**2 * t
    return np.array(
        [[-delta / 2.0, p.omega], [p.omega, delta / 2.0 - 1j * p.gamma_ph]],
        dtype=np.complex128,
    )


def phenom_evolve(p: PhenomParams, opts: Optional[IntegratorOptions] = None) -> PhenomTrajectory:
    """
    Integrate the lossy amplitudes from (1, 0) at t = -tau to t = tau.

    Args:
        p: model constants and decay rate
        opts: integrator settings; the step ceiling defaults to 1e-2

    Returns:
        PhenomTrajectory sampled on ``opts.samples`` uniform times
    """
    opts = opts or IntegratorOptions()
    times = np.linspace(-p.tau, p.tau, opts.samples)
    started = time.perf_counter()
    amplitudes = integrate_linear(
        lambda t: -1j * phenom_hamiltonian(t, p),
        np.array([1.0, 0.0], dtype=np.complex128),
        times,
        opts,
        opts.step_ceiling(),
        lambda t: p.gamma_ph,
    )
    trajectory = PhenomTrajectory(times, amplitudes, time.perf_counter() - started)

    if p.gamma_ph == 0:
        drift = float(np.max(np.abs(trajectory.norm - 1.0)))
        if drift > 1e-8:
            logger.warning(f"norm drifted by {drift:.3e} without decay")
    logger.info(
        f"phenomenological kappa={p.kappa:g} tau={p.tau:g} gamma_ph={p.gamma_ph:g}: "
        f"P1={trajectory.survival:.6f}"
    )
    return trajectory


def adiabatic_elimination_survival(omega: float, kappa: float, tau: float, gamma: float) -> float:
    """
    Survival estimate with the decaying level eliminated.

    Level |1> then decays at 2 Omega^2 gamma / (Delta^2 + gamma^2), which
    integrates over [-tau, tau] to exp(-(4 Omega^2/kappa^2) arctan(kappa^2 tau/gamma)).
    For tau -> infinity this is the closed-system crossing formula for any
    gamma; at finite tau and gamma >> kappa^2 tau it rises toward one.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    exponent = 4.0 * omega**2 / kappa**2 * math.atan(kappa**2 * tau / gamma)
    return math.exp(-exponent)
