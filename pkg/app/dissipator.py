"""Thermal bath rates, instantaneous jump operators and the master-equation generator.

The coupling operator A = |2><3| + |3><2| is split into eigenoperators of the
instantaneous Hamiltonian. Each eigenoperator A(w) is weighted with the
flat-spectrum rate Gamma(w) and the dissipator keeps every pair (w, w'),
cross terms included:

    D(rho) = sum_{w,w'} Gamma(w) [A(w) rho A(w')^+ - A(w')^+ A(w) rho] + H.c.

``secular=True`` keeps the w = w' pairs only and is a diagnostic toggle.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np

from app.hamiltonian import SpectralData, SystemParams, hamiltonian_at, spectral_at
from app.linalg import (
    IDENTITY3,
    ComplexMatrix3,
    Superoperator9,
    adjoint_superop,
    basis_projector,
    commutator_superop,
    sandwich_superop,
)

logger = logging.getLogger(__name__)

COUPLING_OPERATOR = basis_projector(2, 3) + basis_projector(3, 2)

# Beyond this w/Theta the occupation underflows to zero
OCCUPATION_CUTOFF = 700.0


@dataclass(frozen=True)
class BathParams:
    """Flat-spectrum bath: rate Gamma = |g|^2 D and temperature Theta = k_B T."""

    gamma: float
    theta: float = 0.0

    def __post_init__(self):
        invalid = [
            name
            for name in ("gamma", "theta")
            if not (math.isfinite(getattr(self, name)) and getattr(self, name) >= 0)
        ]
        if invalid:
            raise ValueError(f"BathParams must be non-negative and finite: {', '.join(invalid)}")


class JumpTerm(NamedTuple):
    label: str
    omega: float
    operator: ComplexMatrix3


@dataclass(frozen=True, eq=False)
class JumpDecomposition:
    """The four nonzero eigenoperators of the coupling, with their Bohr frequencies."""

    terms: List[JumpTerm]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([term.omega for term in self.terms])

    @property
    def operators(self) -> np.ndarray:
        """Operators stacked into shape (4, 3, 3)."""
        return np.stack([term.operator for term in self.terms])

    def total(self) -> ComplexMatrix3:
        return self.operators.sum(axis=0)


def thermal_occupation(omega: float, theta: float) -> float:
    """
    Bose-Einstein occupation 1/(exp(w/Theta) - 1).

    Args:
        omega: positive frequency
        theta: temperature in frequency units, zero allowed

    Returns:
        Occupation number; exactly 0 at Theta = 0 and for w/Theta past the
        underflow cutoff.
    """
    if not omega > 0:
        raise ValueError(f"occupation is defined for omega > 0, got {omega}")
    if theta < 0:
        raise ValueError(f"theta must be non-negative, got {theta}")
    if theta == 0:
        return 0.0
    x = omega / theta
    if x > OCCUPATION_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)


def rate(omega: float, bath: BathParams) -> float:
    """
    Emission/absorption rate at a signed Bohr frequency.

    Gamma(1 + N(|w|)) for w > 0 (emission), Gamma N(|w|) for w < 0
    (absorption).
    """
    if omega == 0:
        raise ValueError("rate is undefined at omega = 0")
    n = thermal_occupation(abs(omega), bath.theta)
    if omega > 0:
        return bath.gamma * (1.0 + n)
    return bath.gamma * n


def dominant_rate(t: float, params: SystemParams, bath: BathParams) -> float:
    """Largest Gamma(1 + 2N(|w|)) among the jump frequencies at ``t``."""
    s = spectral_at(t, params)
    candidates = (s.epsilon + params.omega3, abs(params.omega3 - s.epsilon))
    return max(
        (bath.gamma * (1.0 + 2.0 * thermal_occupation(w, bath.theta)) for w in candidates if w > 0),
        default=bath.gamma,
    )


def jump_operators(s: SpectralData) -> JumpDecomposition:
    """
    Split the coupling operator into instantaneous eigenoperators.

    Frequencies follow from the stored energies, so w(+3) = E+ - E3 =
    epsilon + omega3 and so on. The vanishing operators at +-2 epsilon are
    omitted.
    """
    e_plus, e_minus, e_three = s.energies
    plus = s.eigvecs[:, 0]
    minus = s.eigvecs[:, 1]
    three = s.eigvecs[:, 2]
    sin_phi, cos_phi = math.sin(s.phi), math.cos(s.phi)

    return JumpDecomposition(
        terms=[
            JumpTerm("+3", e_plus - e_three, sin_phi * np.outer(three, plus.conj())),
            JumpTerm("3+", e_three - e_plus, sin_phi * np.outer(plus, three.conj())),
            JumpTerm("-3", e_minus - e_three, cos_phi * np.outer(three, minus.conj())),
            JumpTerm("3-", e_three - e_minus, cos_phi * np.outer(minus, three.conj())),
        ]
    )


def _pair_weights(n_terms: int, secular: bool) -> np.ndarray:
    if secular:
        return np.eye(n_terms)
    return np.ones((n_terms, n_terms))


def dissipator_superop(
    t: float, params: SystemParams, bath: BathParams, secular: bool = False
) -> Superoperator9:
    """Dissipative part of the generator at time ``t``."""
    jumps = jump_operators(spectral_at(t, params))
    rates = np.array([rate(w, bath) for w in jumps.frequencies])
    return dissipator_from_rates(jumps, rates, secular=secular)


def dissipator_from_rates(
    jumps: JumpDecomposition, rates: np.ndarray, secular: bool = False
) -> Superoperator9:
    """
    Dissipator for given per-frequency rates.

    Args:
        jumps: instantaneous jump operators
        rates: one rate per term of ``jumps``, attached to the first index
        secular: keep only diagonal pairs

    Returns:
        9x9 superoperator of the dissipative part including its H.c.
    """
    ops = jumps.operators
    rates = np.asarray(rates, dtype=float)
    weights = _pair_weights(len(rates), secular) * rates[:, None]

    # A(w) X A(w')^+ summed over pairs; (A^+)^T = conj(A)
    gain = np.einsum("ab,aij,bkl->ikjl", weights, ops, ops.conj()).reshape(9, 9)
    # sum of Gamma(w) A(w')^+ A(w)
    loss_op = np.einsum("ab,bji,ajk->ik", weights, ops.conj(), ops)
    half = gain - sandwich_superop(loss_op, IDENTITY3)
    return half + adjoint_superop(half)


def assemble_liouvillian(
    t: float, params: SystemParams, bath: BathParams, secular: bool = False
) -> Superoperator9:
    """
    Full generator L(t) with d vec(rho)/dt = L(t) vec(rho).

    Args:
        t: time in units of 1/Omega
        params: model constants
        bath: bath rate and temperature
        secular: drop the w != w' cross terms (diagnostic only)

    Returns:
        9x9 superoperator in the row-major ordering
    """
    coherent = commutator_superop(hamiltonian_at(t, params))
    if bath.gamma == 0:
        return coherent
    return coherent + dissipator_superop(t, params, bath, secular=secular)


class LiouvillianGenerator:
    """
    Precomputed form of the full generator for repeated evaluation.

    Because the operators A(w') summed over w' give back A, the full
    dissipator collapses to S rho A - A S rho + H.c. with
    S = sum_w Gamma(w) A(w). The generator is then linear in Delta and in
    the entries of S:

        L(t) = C0 + Delta(t) Cz + sum_ij S_ij K_ij + conj(S_ij) K_ij^adj

    All basis superoperators are built once; a call only evaluates rates.
    """

    def __init__(self, params: SystemParams, bath: BathParams):
        self.params = params
        self.bath = bath

        h_static = hamiltonian_at(0.0, params)
        h_chirp = np.diag([-0.5, 0.5, 0.0]).astype(np.complex128)
        self._coherent_static = commutator_superop(h_static)
        self._coherent_chirp = commutator_superop(h_chirp)

        basis = np.zeros((3, 3, 9, 9), dtype=np.complex128)
        basis_adj = np.zeros_like(basis)
        for i in range(3):
            for j in range(3):
                e_ij = basis_projector(i + 1, j + 1)
                k = sandwich_superop(e_ij, COUPLING_OPERATOR) - sandwich_superop(
                    COUPLING_OPERATOR @ e_ij, IDENTITY3
                )
                basis[i, j] = k
                basis_adj[i, j] = adjoint_superop(k)
        self._basis = basis
        self._basis_adj = basis_adj

    def rate_operator(self, t: float) -> ComplexMatrix3:
        """S(t) = sum_w Gamma(w) A(w)."""
        jumps = jump_operators(spectral_at(t, self.params))
        rates = np.array([rate(w, self.bath) for w in jumps.frequencies])
        return np.einsum("a,aij->ij", rates, jumps.operators)

    def __call__(self, t: float) -> Superoperator9:
        delta = self.params.kappa**2 * t
        generator = self._coherent_static + delta * self._coherent_chirp
        if self.bath.gamma == 0:
            return generator
        s = self.rate_operator(t)
        generator = generator + np.einsum("ij,ijkl->kl", s, self._basis)
        return generator + np.einsum("ij,ijkl->kl", s.conj(), self._basis_adj)
