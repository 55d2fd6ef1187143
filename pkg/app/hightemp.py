"""High-temperature limit of the generator and its perturbative structure.

For Theta >> omega3 the occupation is N(w) ~ Theta/w and the generator
scales with Theta. Two small parameters organise it: eta = omega3/Theta and
xi = epsilon/omega3. The state |1><1| couples to the rest only through
second-order entries (xi*eta and xi^2), so to first order it is a
stationary eigenoperator and the survival in |1> is protected.

Two versions of the limiting generator are provided:
1. ``RateForm.PRINTED``: the closed-form rate equations entered entry by
   entry (default).
2. ``RateForm.DERIVED``: the full assembly with rates Gamma (sgn w + Theta/|w|).
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from app.dissipator import (
    BathParams,
    assemble_liouvillian,
    dissipator_from_rates,
    jump_operators,
)
from app.hamiltonian import SystemParams, hamiltonian_at, spectral_at
from app.linalg import TRANSPOSE_PERMUTATION, Superoperator9, commutator_superop

logger = logging.getLogger(__name__)

PERTURBATION_LIMIT = 0.1
ZERO_LABEL = "0"
# Relative floor for the entrywise comparison with the full generator
DEVIATION_FLOOR = 1e-9
# Deviations below this are roundoff in structurally equal entries
PERSISTENCE_TOL = 1e-6

# Rows written out explicitly; their transposes follow by conjugation
_CONJUGATE_SOURCE_ROWS = (1, 2, 5)


class RateForm(enum.Enum):
    PRINTED = "printed"
    DERIVED = "derived"


@dataclass(frozen=True)
class PerturbationScales:
    eta: float
    xi: float

    def __post_init__(self):
        for name in ("eta", "xi"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name}={value:g} is outside (0, 1)")
            if value > PERTURBATION_LIMIT:
                logger.warning(
                    f"{name}={value:.3g} exceeds {PERTURBATION_LIMIT:g}; "
                    "the high-temperature ordering is not reliable"
                )

    def monomials(self) -> Dict[str, float]:
        return {
            "1": 1.0,
            "xi": self.xi,
            "eta": self.eta,
            "xi*eta": self.xi * self.eta,
            "xi^2": self.xi**2,
        }


class ConsistencyReport(NamedTuple):
    max_deviation: float
    worst_entry: Tuple[int, int]
    deviations: np.ndarray


class ResidualReport(NamedTuple):
    residual: float
    coherent: float
    thermal: float
    bound_scale: float

    @property
    def ratio(self) -> float:
        """residual / (Theta (xi eta + xi^2)), the constant C of the bound."""
        return self.residual / self.bound_scale


def perturbation_scales(t: float, params: SystemParams, bath: BathParams) -> PerturbationScales:
    if bath.theta <= 0:
        raise ValueError("perturbation scales need theta > 0")
    s = spectral_at(t, params)
    return PerturbationScales(eta=params.omega3 / bath.theta, xi=s.epsilon / params.omega3)


def _printed_liouvillian(t: float, params: SystemParams, bath: BathParams) -> Superoperator9:
    s = spectral_at(t, params)
    eps, w3, delta = s.epsilon, params.omega3, s.delta
    gamma, theta, omega = bath.gamma, bath.theta, params.omega
    denom = eps**2 - w3**2
    k = gamma * theta * eps * s.sin2phi / denom
    q = gamma * theta * (eps * s.cos2phi - w3) / denom
    y = 2.0 * gamma * (1.0 + theta * (w3 - eps * s.cos2phi) / denom)

    lv = np.zeros((9, 9), dtype=np.complex128)
    # rho11
    lv[0, 1] = 1j * omega
    lv[0, 3] = -1j * omega
    # rho12
    lv[1, 0] = 1j * omega - k
    lv[1, 1] = 1j * delta + q
    lv[1, 4] = -1j * omega
    lv[1, 8] = k
    # rho13
    lv[2, 2] = 1j * (w3 + delta / 2.0) - gamma + q / 2.0
    lv[2, 5] = -1j * omega
    lv[2, 7] = k
    # rho22
    lv[4, 1] = -1j * omega - k
    lv[4, 3] = 1j * omega - k
    lv[4, 4] = 2.0 * q
    lv[4, 8] = y
    # rho23
    lv[5, 2] = -1j * omega - k
    lv[5, 5] = 1j * (w3 - delta / 2.0) - gamma + q
    lv[5, 6] = k
    lv[5, 7] = gamma * (1.0 + 2.0 * theta * (w3 - eps * s.cos2phi) / denom)
    # rho33
    lv[8, 1] = k
    lv[8, 3] = k
    lv[8, 4] = -2.0 * q
    lv[8, 8] = -y

    p = TRANSPOSE_PERMUTATION
    for r in _CONJUGATE_SOURCE_ROWS:
        lv[p[r], p] = np.conj(lv[r])
    return lv


def high_temperature_rate(omega: float, bath: BathParams) -> float:
    """Gamma (sgn w + Theta/|w|), the N -> Theta/w limit of the bath rate."""
    if omega == 0:
        raise ValueError("rate is undefined at omega = 0")
    return bath.gamma * (math.copysign(1.0, omega) + bath.theta / abs(omega))


def _derived_liouvillian(t: float, params: SystemParams, bath: BathParams) -> Superoperator9:
    jumps = jump_operators(spectral_at(t, params))
    rates = np.array([high_temperature_rate(w, bath) for w in jumps.frequencies])
    coherent = commutator_superop(hamiltonian_at(t, params))
    return coherent + dissipator_from_rates(jumps, rates)


def hight_liouvillian(
    t: float, params: SystemParams, bath: BathParams, form: RateForm = RateForm.PRINTED
) -> Superoperator9:
    """
    High-temperature generator at time ``t``.

    Args:
        t: time
        params: model constants
        bath: bath with Theta > 0
        form: closed-form rate equations or the derived limit of the full assembly

    Returns:
        9x9 superoperator in the row-major ordering
    """
    if bath.theta <= 0:
        raise ValueError("the high-temperature generator needs theta > 0")
    if form is RateForm.DERIVED:
        return _derived_liouvillian(t, params, bath)
    return _printed_liouvillian(t, params, bath)


def consistency_vs_full(
    t: float, params: SystemParams, bath: BathParams, form: RateForm = RateForm.PRINTED
) -> ConsistencyReport:
    """
    Entrywise relative deviation from the full generator.

    Each entry is compared as |L_ht - L_full| / max(|L_full|, floor) where
    the floor is 1e-9 of the largest entry of L_full, so structural zeros of
    the full generator do not divide by zero.
    """
    if bath.theta < 1e2 * params.omega3:
        logger.warning(
            f"theta/omega3={bath.theta / params.omega3:.3g} is below 1e2; "
            "the high-temperature limit is not expected to hold"
        )
    full = assemble_liouvillian(t, params, bath)
    approx = hight_liouvillian(t, params, bath, form=form)
    scale = np.maximum(np.abs(full), DEVIATION_FLOOR * np.max(np.abs(full)))
    deviations = np.abs(approx - full) / scale
    flat = int(np.argmax(deviations))
    worst = (flat // 9, flat % 9)
    return ConsistencyReport(float(deviations[worst]), worst, deviations)


def persistent_disagreements(
    t: float,
    params: SystemParams,
    bath: BathParams,
    form: RateForm = RateForm.PRINTED,
    factor: float = 10.0,
) -> List[Tuple[int, int]]:
    """
    Entries whose deviation from the full generator does not shrink with Theta.

    The deviation is evaluated at Theta and at ``factor`` * Theta; an entry is
    flagged when it does not drop by at least a factor of two.
    """
    near = consistency_vs_full(t, params, bath, form=form).deviations
    hotter = BathParams(gamma=bath.gamma, theta=bath.theta * factor)
    far = consistency_vs_full(t, params, hotter, form=form).deviations
    flagged = np.argwhere((far > PERSISTENCE_TOL) & (far > 0.5 * near))
    entries = [(int(i), int(j)) for i, j in flagged]
    if entries:
        logger.warning(f"{form.value} generator disagrees persistently at entries {entries}")
    return entries


def eigenoperator_residual(params: SystemParams, bath: BathParams, t: float) -> ResidualReport:
    """
    How far |1><1| is from a stationary eigenoperator of the printed generator.

    The residual column L_ht vec(|1><1|) is split into the part produced by
    the commutator with H (sqrt(2) Omega, order xi*eta relative to Theta)
    and the remainder produced by the bath (sqrt(2) |Gamma Theta epsilon
    sin2phi / (epsilon^2 - omega3^2)|, order xi^2). Both parts are read from
    the generator.

    Returns:
        ResidualReport with the bound scale Theta (xi eta + xi^2)
    """
    scales = perturbation_scales(t, params, bath)
    lv = hight_liouvillian(t, params, bath)
    column = lv[:, 0]
    coherent = commutator_superop(hamiltonian_at(t, params))[:, 0]
    return ResidualReport(
        residual=float(np.linalg.norm(column)),
        coherent=float(np.linalg.norm(coherent)),
        thermal=float(np.linalg.norm(column - coherent)),
        bound_scale=bath.theta * (scales.xi * scales.eta + scales.xi**2),
    )


def order_classification(params: SystemParams, bath: BathParams, t: float) -> np.ndarray:
    """
    Label every entry of L_ht/Theta with its dominant monomial.

    Each magnitude is assigned to the nearest member of {1, xi, eta, xi*eta,
    xi^2} in log scale, which puts the thresholds at geometric midpoints.
    Exact zeros are labelled "0".

    Returns:
        9x9 array of labels
    """
    scales = perturbation_scales(t, params, bath)
    ladder = scales.monomials()
    names = list(ladder)
    logs = np.log(np.array([ladder[name] for name in names]))

    magnitudes = np.abs(hight_liouvillian(t, params, bath)) / bath.theta
    labels = np.full((9, 9), ZERO_LABEL, dtype=object)
    nonzero = magnitudes > 0
    nearest = np.argmin(np.abs(np.log(magnitudes[nonzero])[:, None] - logs[None, :]), axis=1)
    labels[nonzero] = [names[k] for k in nearest]
    return labels


def first_row_column_labels(labels: np.ndarray) -> List[str]:
    """Labels of the first row and first column (entry (1,1) once)."""
    return list(labels[0, :]) + list(labels[1:, 0])
