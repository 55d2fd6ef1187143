"""Ideal three-level crossing model.

Levels |1> and |2> cross linearly with detuning Delta(t) = kappa^2 t and a
constant coupling Omega; level |3> sits far below at energy -omega3. Units
are fixed by Omega = 1 in everything the CLI produces, but the functions
accept any positive Omega.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from app.linalg import ComplexMatrix3

logger = logging.getLogger(__name__)

# Finite-time crossing formula is trusted for tau >= this many Omega/kappa^2
LZ_VALIDITY_FACTOR = 10.0
# Largest epsilon(tau)/omega3 still treated as well separated
SCALE_SEPARATION_LIMIT = 0.1


@dataclass(frozen=True)
class SystemParams:
    """Model constants: coupling, chirp, external level frequency and half-duration."""

    omega: float
    kappa: float
    omega3: float
    tau: float

    def __post_init__(self):
        invalid = [
            name
            for name in ("omega", "kappa", "omega3", "tau")
            if not (math.isfinite(getattr(self, name)) and getattr(self, name) > 0)
        ]
        if invalid:
            raise ValueError(f"SystemParams must be positive and finite: {', '.join(invalid)}")

        if not self.lz_formula_valid:
            logger.warning(
                f"tau={self.tau:g} is below {LZ_VALIDITY_FACTOR:g}*Omega/kappa^2="
                f"{LZ_VALIDITY_FACTOR * self.omega / self.kappa ** 2:g}; "
                "the crossing formula is only approximate here"
            )
        ratio = self.edge_gap / self.omega3
        if ratio > SCALE_SEPARATION_LIMIT:
            logger.warning(
                f"epsilon(tau)/omega3={ratio:.3g} exceeds {SCALE_SEPARATION_LIMIT:g}; "
                "level |3> is not well separated from the crossing"
            )

    @property
    def lz_formula_valid(self) -> bool:
        return self.tau >= LZ_VALIDITY_FACTOR * self.omega / self.kappa**2

    @property
    def edge_gap(self) -> float:
        """Half-splitting epsilon at the window edges t = +-tau."""
        delta = self.kappa**2 * self.tau
        return math.sqrt(self.omega**2 + delta**2 / 4.0)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Instantaneous eigensystem of the model Hamiltonian.

    ``eigvecs`` holds |+>, |->, |3> as columns in the bare basis.
    """

    delta: float
    epsilon: float
    phi: float
    energies: Tuple[float, float, float]
    eigvecs: np.ndarray = field(repr=False)

    @property
    def sin2phi(self) -> float:
        # equals Omega/epsilon
        return math.sin(2.0 * self.phi)

    @property
    def cos2phi(self) -> float:
        return -self.delta / (2.0 * self.epsilon)

    def projector(self, k: int) -> ComplexMatrix3:
        """Return |k><k| for k = 0 (+), 1 (-) or 2 (3)."""
        v = self.eigvecs[:, k]
        return np.outer(v, v.conj())


class BohrFrequency(NamedTuple):
    label: str
    omega: float
    zero_operator: bool


def detuning(t: float, params: SystemParams) -> float:
    """Linear chirp Delta(t) = kappa^2 t."""
    return params.kappa**2 * t


def hamiltonian_at(t: float, params: SystemParams) -> ComplexMatrix3:
    """Bare-basis Hamiltonian at time ``t``."""
    delta = detuning(t, params)
    h = np.zeros((3, 3), dtype=np.complex128)
    h[0, 0] = -delta / 2.0
    h[1, 1] = delta / 2.0
    h[2, 2] = -params.omega3
    h[0, 1] = h[1, 0] = params.omega
    return h


def spectral_at(t: float, params: SystemParams) -> SpectralData:
    """
    Instantaneous eigensystem at time ``t``.

    The mixing angle is taken from atan2(Delta/2 + epsilon, Omega). For
    negative Delta the numerator is rewritten as Omega^2/(epsilon - Delta/2)
    so that it keeps full relative precision far from the crossing.

    Args:
        t: time in units of 1/Omega
        params: model constants

    Returns:
        SpectralData with energies (epsilon, -epsilon, -omega3)
    """
    delta = detuning(t, params)
    omega = params.omega
    epsilon = math.hypot(omega, delta / 2.0)
    if delta >= 0:
        upper = delta / 2.0 + epsilon
    else:
        upper = omega**2 / (epsilon - delta / 2.0)
    phi = math.atan2(upper, omega)

    c, s = math.cos(phi), math.sin(phi)
    eigvecs = np.array(
        [
            [c, -s, 0.0],
            [s, c, 0.0],
            [0.0, 0.0, 1.0],
        ],
        dtype=np.complex128,
    )
    return SpectralData(
        delta=delta,
        epsilon=epsilon,
        phi=phi,
        energies=(epsilon, -epsilon, -params.omega3),
        eigvecs=eigvecs,
    )


def bohr_frequencies(s: SpectralData, params: SystemParams) -> List[BohrFrequency]:
    """
    Transition frequencies between instantaneous levels.

    The four frequencies involving |3> carry nonzero jump operators. The
    pair +-2 epsilon is listed last and flagged, since the coupling has no
    matrix element inside span{|1>, |2>}.
    """
    eps, w3 = s.epsilon, params.omega3
    if w3 <= eps:
        logger.warning(f"omega3={w3:g} does not exceed epsilon={eps:g}; level ordering is lost")
    return [
        BohrFrequency("+3", eps + w3, False),
        BohrFrequency("-3", w3 - eps, False),
        BohrFrequency("3+", -(eps + w3), False),
        BohrFrequency("3-", eps - w3, False),
        BohrFrequency("+-", 2.0 * eps, True),
        BohrFrequency("-+", -2.0 * eps, True),
    ]


def lz_survival(omega: float, kappa: float) -> float:
    """Asymptotic survival probability exp(-2 pi Omega^2 / kappa^2)."""
    if omega <= 0 or kappa <= 0:
        raise ValueError(f"omega and kappa must be positive, got omega={omega}, kappa={kappa}")
    return math.exp(-2.0 * math.pi * omega**2 / kappa**2)
