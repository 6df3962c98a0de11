"""Classical brute-force oracles the circuits are checked against.

All oracles densify; desk-scale matrices stay below dimension 64.
"""

import logging
import warnings
from typing import Union

import numpy as np
from scipy import linalg

from ..core.errors import DeterminantUnderflowError, SingularMatrixError
from .matrix import ArrayLike, EigenDecomposition, Matrix, as_matrix, canonical_phase

logger = logging.getLogger(__name__)

# Eigenvalues closer than this are treated as one degenerate cluster when ordering.
DEGENERACY_TOL = 1e-10
SINGULAR_PIVOT_RATIO = 1e-14


def eig_hermitian(a: Union[Matrix, ArrayLike]) -> EigenDecomposition:
    """Eigendecomposition of a hermitian matrix with deterministic ordering.

    Eigenvalues are sorted descending. Each eigenvector is phase-fixed so its
    first nonzero component is real-positive; within a degenerate cluster the
    vectors are ordered lexicographically by their components.

    Raises:
        NonHermitianError: if `a` is not hermitian
    """
    a = as_matrix(a)
    a.require_hermitian("eig_hermitian input")

    values, vectors = np.linalg.eigh(a.to_dense())
    vectors = np.column_stack([canonical_phase(vectors[:, j]) for j in range(vectors.shape[1])])

    def lex_key(j):
        v = np.round(vectors[:, j], 12)
        return tuple(x for c in v for x in (c.real, c.imag))

    order = list(np.argsort(-values, kind="stable"))
    ordered = []
    i = 0
    while i < len(order):
        cluster = [order[i]]
        while i + 1 < len(order) and abs(values[order[i + 1]] - values[cluster[0]]) <= DEGENERACY_TOL:
            i += 1
            cluster.append(order[i])
        ordered.extend(sorted(cluster, key=lex_key))
        i += 1

    decomposition = EigenDecomposition(
        eigenvalues=np.asarray(values[ordered], dtype=float),
        eigenvectors=vectors[:, ordered],
    )
    decomposition.eigenvalues.setflags(write=False)
    decomposition.eigenvectors.setflags(write=False)
    return decomposition


def _lu(a: Matrix):
    a.require_square("LU input")
    with warnings.catch_warnings():
        # scipy warns on exactly-zero pivots; singular inputs are handled by the callers.
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        return linalg.lu_factor(a.to_dense(), check_finite=True)


def _pivot_sign(piv: np.ndarray) -> int:
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    return -1 if swaps % 2 else 1


def det_classical(a: Union[Matrix, ArrayLike]) -> complex:
    """Determinant via LU with partial pivoting. Singular input gives 0."""
    a = as_matrix(a)
    lu, piv = _lu(a)
    return complex(_pivot_sign(piv) * np.prod(np.diag(lu)))


def logdet_classical(a: Union[Matrix, ArrayLike]) -> float:
    """Natural log of a positive real determinant, summed from the LU pivots.

    Raises:
        DeterminantUnderflowError: if the determinant is not positive
    """
    a = as_matrix(a)
    lu, piv = _lu(a)
    diag = np.diag(lu)
    if np.any(diag == 0):
        raise DeterminantUnderflowError("Determinant is zero")
    phase = _pivot_sign(piv) * np.prod(diag / np.abs(diag))
    if abs(phase.imag) > 1e-9 or phase.real <= 0:
        raise DeterminantUnderflowError(f"Determinant is not positive real (phase {phase:.3g})")
    return float(np.sum(np.log(np.abs(diag))))


def trace_classical(a: Union[Matrix, ArrayLike]) -> complex:
    """Sum of the diagonal."""
    a = as_matrix(a)
    a.require_square("trace input")
    return complex(np.sum(np.diag(a.to_dense())))


def inverse(a: Union[Matrix, ArrayLike]) -> Matrix:
    """Inverse via LU.

    Raises:
        SingularMatrixError: if a pivot falls below 1e-14·‖A‖
    """
    a = as_matrix(a)
    lu, piv = _lu(a)
    scale = max(a.norm(), np.finfo(float).tiny)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest < SINGULAR_PIVOT_RATIO * scale:
        raise SingularMatrixError(f"Matrix is numerically singular (pivot {smallest:.3e}, norm {scale:.3e})")
    inv = linalg.lu_solve((lu, piv), np.eye(a.rows, dtype=complex))
    logger.debug(f"Inverted {a.rows}x{a.rows} matrix, smallest pivot {smallest:.3e}")
    return Matrix(inv)
