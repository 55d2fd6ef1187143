"""Fixed-size complex linear algebra for the three-level problem.

States are 3x3 complex matrices; their vectorized form is the row-major
9-vector (rho11, rho12, rho13, rho21, rho22, rho23, rho31, rho32, rho33).
Every superoperator in the package acts on that ordering.
"""

import numpy as np
import numpy.typing as npt

ComplexMatrix3 = npt.NDArray[np.complex128]
StateVector9 = npt.NDArray[np.complex128]
Superoperator9 = npt.NDArray[np.complex128]

DIM = 3
HERMITIAN_TOL = 1e-8

IDENTITY3 = np.eye(DIM, dtype=np.complex128)

# Position of rho_ji for the component holding rho_ij.
TRANSPOSE_PERMUTATION = np.array([0, 3, 6, 1, 4, 7, 2, 5, 8])


def basis_projector(i: int, j: int) -> ComplexMatrix3:
    """Return |i><j| for 1-based level indices."""
    m = np.zeros((DIM, DIM), dtype=np.complex128)
    m[i - 1, j - 1] = 1.0
    return m


def vectorize(rho: ComplexMatrix3) -> StateVector9:
    """Flatten a 3x3 matrix into the row-major 9-vector."""
    return np.asarray(rho, dtype=np.complex128).reshape(DIM * DIM).copy()


def devectorize(v: StateVector9) -> ComplexMatrix3:
    """Inverse of :func:`vectorize`."""
    return np.asarray(v, dtype=np.complex128).reshape(DIM, DIM).copy()


def hermiticity_defect(m: ComplexMatrix3) -> float:
    """Max-norm of ``m - m^dagger``."""
    return float(np.max(np.abs(m - m.conj().T)))


def hermitian_eigenvalues3(m: ComplexMatrix3) -> npt.NDArray[np.float64]:
    """
    Eigenvalues of a Hermitian 3x3 matrix in ascending order.

    Args:
        m: matrix with ``||m - m^dagger||_max <= 1e-8``; it is symmetrized
            before solving.

    Returns:
        Three real eigenvalues, ascending.

    Raises:
        ValueError: if ``m`` is not Hermitian within tolerance.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (DIM, DIM):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def sandwich_superop(a: ComplexMatrix3, b: ComplexMatrix3) -> Superoperator9:
    """Superoperator of the map X -> A X B in the row-major ordering."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b).T)


def commutator_superop(h: ComplexMatrix3) -> Superoperator9:
    """Superoperator of X -> -i[H, X]."""
    return -1j * (sandwich_superop(h, IDENTITY3) - sandwich_superop(IDENTITY3, h))


def adjoint_superop(k: Superoperator9) -> Superoperator9:
    """
    Superoperator of X -> K(X)^dagger, valid on Hermitian X.

    This is how the "+ H.c." of a master equation is added to a
    generator written for the non-Hermitian half.
    """
    p = TRANSPOSE_PERMUTATION
    return np.conj(k)[np.ix_(p, p)]


def density_matrix(matrix: ComplexMatrix3) -> ComplexMatrix3:
    """
    Validate and copy a density matrix.

    Raises:
        ValueError: if the matrix is not 3x3, not Hermitian to 1e-10 or not
            of unit trace to 1e-8. Positivity is not checked here.
    """
    rho = np.array(matrix, dtype=np.complex128)
    if rho.shape != (DIM, DIM):
        raise ValueError(f"density matrix must be 3x3, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    defect = hermiticity_defect(rho)
    if defect > 1e-10:
        raise ValueError(f"density matrix is not Hermitian (defect {defect:.3e})")
    trace_error = abs(np.trace(rho) - 1.0)
    if trace_error > 1e-8:
        raise ValueError(f"density matrix trace differs from 1 by {trace_error:.3e}")
    return rho
