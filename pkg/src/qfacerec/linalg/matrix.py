"""Dense and sparse-coordinate complex matrices."""

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from ..core.errors import DimensionMismatchError, NonHermitianError

HERMITIAN_TOL = 1e-12

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]


class Matrix:
    """Immutable complex matrix with dense or sparse-coordinate storage.

    The hermitian flag is computed at construction; callers cannot set it.
    """

    DENSE = "dense"
    SPARSE = "sparse-coordinate"

    def __init__(self, data: ArrayLike, storage: str = DENSE):
        """Initialize matrix.

        Args:
            data: 2-D array-like of entries, or a scipy sparse matrix
            storage: "dense" or "sparse-coordinate"
        """
        if storage not in (self.DENSE, self.SPARSE):
            raise ValueError(f"Unknown storage kind: {storage}")

        if sparse.issparse(data):
            coo = sparse.coo_matrix(data, dtype=complex)
            dense = coo.toarray()
        else:
            dense = np.array(data, dtype=complex)
            coo = None

        if dense.ndim != 2 or dense.shape[0] < 1 or dense.shape[1] < 1:
            raise DimensionMismatchError(f"Matrix needs rows >= 1 and cols >= 1, got shape {dense.shape}")

        dense.setflags(write=False)
        self._dense = dense
        self.storage = storage
        self._coo = None
        if storage == self.SPARSE:
            self._coo = coo if coo is not None else sparse.coo_matrix(dense)
            self._coo.eliminate_zeros()

        self.hermitian = self._check_hermitian()

    @classmethod
    def dense(cls, data: ArrayLike) -> "Matrix":
        """Build a dense matrix."""
        return cls(data, cls.DENSE)

    @classmethod
    def sparse(
        cls,
        shape: Tuple[int, int],
        entries: Iterable[Tuple[int, int, complex]],
    ) -> "Matrix":
        """Build a sparse matrix from (row, col, value) triples.

        Zero values are dropped; duplicate coordinates are rejected.
        """
        rows, cols, vals = [], [], []
        seen = set()
        for i, j, v in entries:
            if (i, j) in seen:
                raise ValueError(f"Duplicate sparse coordinate ({i}, {j})")
            seen.add((i, j))
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise DimensionMismatchError(f"Coordinate ({i}, {j}) outside shape {shape}")
            if v != 0:
                rows.append(i)
                cols.append(j)
                vals.append(v)
        coo = sparse.coo_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=shape)
        return cls(coo, cls.SPARSE)

    @classmethod
    def identity(cls, size: int) -> "Matrix":
        return cls(np.eye(size, dtype=complex))

    @classmethod
    def diagonal(cls, values: Sequence[complex]) -> "Matrix":
        return cls(np.diag(np.asarray(values, dtype=complex)))

    def _check_hermitian(self) -> bool:
        if not self.is_square:
            return False
        return bool(np.max(np.abs(self._dense - self._dense.conj().T)) <= HERMITIAN_TOL)

    @property
    def shape(self) -> Tuple[int, int]:
        return self._dense.shape

    @property
    def rows(self) -> int:
        return self._dense.shape[0]

    @property
    def cols(self) -> int:
        return self._dense.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def nnz(self) -> int:
        """Number of stored nonzeros."""
        if self._coo is not None:
            return int(self._coo.nnz)
        return int(np.count_nonzero(self._dense))

    def to_dense(self) -> np.ndarray:
        """Read-only dense view of the entries."""
        return self._dense

    def coordinates(self) -> Sequence[Tuple[int, int, complex]]:
        """Nonzero entries as (row, col, value), row-major order."""
        coo = self._coo if self._coo is not None else sparse.coo_matrix(self._dense)
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), complex(coo.data[k])) for k in order]

    def conj_transpose(self) -> "Matrix":
        return Matrix(self._dense.conj().T, self.storage)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self._dense)))

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self._dense, 2))

    def require_hermitian(self, what: str = "matrix") -> None:
        if not self.hermitian:
            raise NonHermitianError(f"{what} must be hermitian")

    def require_square(self, what: str = "matrix") -> None:
        if not self.is_square:
            raise DimensionMismatchError(f"{what} must be square, got shape {self.shape}")

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionMismatchError(f"Cannot multiply {self.shape} by {other.shape}")
        return Matrix(self._dense @ other.to_dense())

    def __repr__(self):
        return f"Matrix(shape={self.shape}, storage={self.storage}, hermitian={self.hermitian})"


def as_matrix(value: Union[Matrix, ArrayLike]) -> Matrix:
    """Coerce arrays to Matrix, pass Matrix through."""
    return value if isinstance(value, Matrix) else Matrix(value)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a hermitian matrix, eigenvalues descending.

    `eigenvectors[:, j]` pairs with `eigenvalues[j]`.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, j]

    def pairs(self):
        for j in range(len(self.eigenvalues)):
            yield float(self.eigenvalues[j]), self.eigenvectors[:, j]

    @property
    def condition_ratio(self) -> float:
        """λ_max / λ_min over absolute values (inf if singular)."""
        mags = np.abs(self.eigenvalues)
        low = float(np.min(mags))
        return float(np.max(mags)) / low if low > 0 else float("inf")

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def canonical_phase(vector: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate a vector's global phase so its first nonzero component is real-positive."""
    nonzero = np.flatnonzero(np.abs(vector) > tol)
    if nonzero.size == 0:
        return vector
    lead = vector[nonzero[0]]
    return vector * (abs(lead) / lead)


def unit(vector: Union[np.ndarray, Sequence[complex]]) -> np.ndarray:
    """Return vector / ‖vector‖ as complex."""
    v = np.asarray(vector, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("Cannot normalize the zero vector")
    return v / norm
