"""Independent unitary propagation of the two crossing levels.

Used as a reference for the density-matrix integrator when the bath is
switched off. Each step applies the fourth-order Magnus exponential of the
linear-in-time 2x2 Hamiltonian, evaluated in closed form through the Pauli
decomposition exp(-i v.sigma) = cos|v| - i sin|v| (v/|v|).sigma.
"""

import logging
import math
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

DEFAULT_ORACLE_STEP = 2e-3


def crossing_hamiltonian(omega: float, kappa: float, t: float) -> np.ndarray:
    delta = kappa**2 * t
    return np.array([[-delta / 2.0, omega], [omega, delta / 2.0]], dtype=np.complex128)


def su2_exponential(v: np.ndarray) -> np.ndarray:
    """exp(-i v.sigma) for a real 3-vector ``v``."""
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.eye(2, dtype=np.complex128)
    generator = sum(component * pauli for component, pauli in zip(v / norm, PAULIS))
    return math.cos(norm) * np.eye(2) - 1j * math.sin(norm) * generator


def magnus_step(omega: float, kappa: float, t: float, h: float) -> np.ndarray:
    """
    Propagator from ``t`` to ``t + h``.

    With H(s) = Hm + (s - tm) H1 around the midpoint tm the exponent is
    -i h Hm - (h^3/12) [H1, Hm], exact through fourth order.
    """
    t_mid = t + 0.5 * h
    h_mid = crossing_hamiltonian(omega, kappa, t_mid)
    h_slope = crossing_hamiltonian(0.0, kappa, 1.0)
    exponent = -1j * h * h_mid - (h**3 / 12.0) * (h_slope @ h_mid - h_mid @ h_slope)
    # exponent = -i v.sigma, so v_k = (i/2) tr(exponent sigma_k)
    v = np.array([np.real(0.5j * np.trace(exponent @ p)) for p in PAULIS])
    return su2_exponential(v)


def oracle_amplitudes(
    omega: float,
    kappa: float,
    times: Sequence[float],
    max_step: float = DEFAULT_ORACLE_STEP,
    initial: Sequence[complex] = (1.0, 0.0),
) -> np.ndarray:
    """
    Amplitudes (c1, c2) at every requested time.

    Args:
        omega: coupling
        kappa: chirp
        times: monotone sample times; the state ``initial`` is taken at times[0]
        max_step: largest Magnus step
        initial: amplitudes at times[0]

    Returns:
        Complex array of shape (len(times), 2)
    """
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), 2), dtype=np.complex128)
    c = np.asarray(initial, dtype=np.complex128)
    out[0] = c
    steps = 0
    for k in range(1, len(times)):
        t0, t1 = times[k - 1], times[k]
        n_sub = max(1, math.ceil(abs(t1 - t0) / max_step))
        h = (t1 - t0) / n_sub
        for j in range(n_sub):
            c = magnus_step(omega, kappa, t0 + j * h, h) @ c
        steps += n_sub
        out[k] = c
    logger.debug(f"oracle: {steps} Magnus steps")
    return out


def oracle_populations(
    omega: float, kappa: float, times: Sequence[float], max_step: float = DEFAULT_ORACLE_STEP
) -> np.ndarray:
    """|c1|^2 and |c2|^2 at every requested time, starting in level 1."""
    return np.abs(oracle_amplitudes(omega, kappa, times, max_step=max_step)) ** 2
