"""Log-determinant divergence between face matrices.

D(X, Y) = Tr(X·Y⁻¹) − ln det(X·Y⁻¹) − N, computed either classically or
through the trace and determinant circuits.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import DeterminantUnderflowError, DimensionMismatchError
from ..linalg.matrix import Matrix
from ..linalg.oracles import det_classical, eig_hermitian, inverse, logdet_classical
from ..linalg.spectrum import condition_spectrum
from ..quantum.determinant import IDEALIZED, determinant_error_bound, run_determinant
from ..quantum.hhl import DEFAULT_KAPPA_CAP, matrix_ratio, ratio_trace_bound
from ..quantum.register import DEFAULT_MAX_QUBITS, GateLog
from ..quantum.trace import DEFAULT_FRACTION_BITS, trace_fixed_point

logger = logging.getLogger(__name__)

CLASSICAL = "classical"
QUANTUM = "quantum"
BACKENDS = (CLASSICAL, QUANTUM)

RAW = "raw"
FEATURE = "feature"

EPSILON_FLOOR = 1e-3


@dataclass(frozen=True)
class FaceMatrix:
    """Symmetric positive definite matrix form of a face."""

    matrix: Matrix
    tau: float
    epsilon: float
    shift: float
    source: str = RAW

    @property
    def dimension(self) -> int:
        return self.matrix.rows

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()


def default_epsilon(matrix: np.ndarray) -> float:
    """5% of the mean absolute diagonal, floored at 1e-3."""
    return max(0.05 * float(np.mean(np.abs(np.diag(matrix)))), EPSILON_FLOOR)


def feature_epsilon(weights: np.ndarray) -> float:
    """Mean squared eigenface weight, floored at 1e-3.

    Keeps the condition number of ωωᵀ + εI at r + 1.
    """
    w = np.asarray(weights).reshape(-1)
    return max(float(np.mean(np.abs(w) ** 2)), EPSILON_FLOOR)


def prepare_face_matrix(face: np.ndarray, tau: float, epsilon: Optional[float] = None) -> FaceMatrix:
    """Sparsify, symmetrize and regularize a face vector into an SPD matrix.

    Entries with |a| <= τ·max|a| are zeroed. The added multiple of I is
    ε + max(0, −λ_min) so the smallest eigenvalue is at least ε.
    """
    face = np.asarray(face, dtype=float).reshape(-1)
    side = math.isqrt(face.shape[0])
    if side * side != face.shape[0] or side == 0:
        raise DimensionMismatchError(f"Face of length {face.shape[0]} is not a perfect square")
    if not 0 <= tau <= 1:
        raise ValueError(f"Threshold τ must lie in [0, 1], got {tau}")

    raw = face.reshape(side, side)
    peak = float(np.max(np.abs(raw)))
    sparse = np.where(np.abs(raw) > tau * peak, raw, 0.0)
    sym = (sparse + sparse.T) / 2

    if epsilon is None:
        epsilon = default_epsilon(sym)
    elif epsilon <= 0:
        raise ValueError(f"Regularization ε must be positive, got {epsilon}")

    lowest = float(np.min(np.linalg.eigvalsh(sym)))
    shift = epsilon + max(0.0, -lowest)
    return FaceMatrix(
        matrix=Matrix(sym + shift * np.eye(side)),
        tau=tau,
        epsilon=epsilon,
        shift=shift,
    )


def feature_face_matrix(weights: np.ndarray, epsilon: float) -> FaceMatrix:
    """ωωᵀ + εI from eigenface weights."""
    if epsilon <= 0:
        raise ValueError(f"Regularization ε must be positive, got {epsilon}")
    w = np.asarray(weights).real.reshape(-1)
    return FaceMatrix(
        matrix=Matrix(np.outer(w, w) + epsilon * np.eye(w.shape[0])),
        tau=0.0,
        epsilon=epsilon,
        shift=epsilon,
        source=FEATURE,
    )


@dataclass
class DivergenceResult:
    value: float
    backend: str
    trace_term: float
    logdet_term: float
    dimension: int
    bound: float = 0.0
    gate_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)


def _check_pair(x: FaceMatrix, y: FaceMatrix) -> None:
    if x.dimension != y.dimension:
        raise DimensionMismatchError(f"Cannot compare {x.dimension}-dim and {y.dimension}-dim face matrices")


def _conditioned_determinant(m: Matrix, n: int, rotation: str, max_qubits: int, log: GateLog) -> float:
    scale = condition_spectrum(eig_hermitian(m).eigenvalues, n)
    run = run_determinant(Matrix(scale * m.to_dense()), n, rotation=rotation, max_qubits=max_qubits)
    log.merge(run.log)
    return run.estimate / scale ** m.rows


def _logdet_bound(m: Matrix, n: int, rotation: str) -> float:
    """Bound on the log-determinant error from a relative determinant error e: -ln(1 - e)."""
    scale = condition_spectrum(eig_hermitian(m).eigenvalues, n)
    scaled = Matrix(scale * m.to_dense())
    relative = determinant_error_bound(scaled, n, rotation=rotation) / abs(det_classical(scaled))
    return -math.log1p(-relative) if relative < 1.0 else math.inf


def divergence_error_bound(
    x: FaceMatrix,
    y: FaceMatrix,
    n: int,
    fraction_bits: int = DEFAULT_FRACTION_BITS,
    rotation: str = IDEALIZED,
) -> float:
    """Bound on |D_quantum − D_classical|.

    Sum of the HHL trace bound, the trace quantization N·2^(-f-1) and the
    log-determinant bounds of X and Y.
    """
    _check_pair(x, y)
    trace_bound = ratio_trace_bound(x.matrix, y.matrix, n) + x.dimension * 2.0 ** (-fraction_bits - 1)
    return trace_bound + _logdet_bound(x.matrix, n, rotation) + _logdet_bound(y.matrix, n, rotation)


def logdet_divergence(
    x: FaceMatrix,
    y: FaceMatrix,
    backend: str = CLASSICAL,
    precision: int = 4,
    fraction_bits: int = DEFAULT_FRACTION_BITS,
    rotation: str = IDEALIZED,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> DivergenceResult:
    """D(X, Y) with the natural logarithm.

    Raises:
        DimensionMismatchError: if X and Y differ in dimension
        DeterminantUnderflowError: if a determinant is not positive
    """
    _check_pair(x, y)
    size = x.dimension

    if backend == CLASSICAL:
        ratio = x.matrix @ inverse(y.matrix)
        trace_term = float(np.trace(ratio.to_dense()).real)
        logdet_term = logdet_classical(x.matrix) - logdet_classical(y.matrix)
        return DivergenceResult(
            value=trace_term - logdet_term - size,
            backend=CLASSICAL,
            trace_term=trace_term,
            logdet_term=logdet_term,
            dimension=size,
        )
    if backend != QUANTUM:
        raise ValueError(f"Unknown divergence backend: {backend}")

    logs = {"hhl": GateLog(), "trace": GateLog(), "determinant": GateLog()}
    ratio = matrix_ratio(x.matrix, y.matrix, n=precision, kappa_cap=kappa_cap, max_qubits=max_qubits, log=logs["hhl"])
    trace = trace_fixed_point(np.diag(ratio.to_dense()), fraction_bits, max_qubits=max_qubits)
    logs["trace"].merge(trace.log)

    det_x = _conditioned_determinant(x.matrix, precision, rotation, max_qubits, logs["determinant"])
    det_y = _conditioned_determinant(y.matrix, precision, rotation, max_qubits, logs["determinant"])
    if det_x <= 0 or det_y <= 0:
        raise DeterminantUnderflowError(f"Circuit determinants det(X)={det_x:.3e}, det(Y)={det_y:.3e} not positive")
    logdet_term = math.log(det_x) - math.log(det_y)

    return DivergenceResult(
        value=trace.value - logdet_term - size,
        backend=QUANTUM,
        trace_term=trace.value,
        logdet_term=logdet_term,
        dimension=size,
        bound=divergence_error_bound(x, y, precision, fraction_bits, rotation),
        gate_counts={family: log.snapshot() for family, log in logs.items()},
    )


@dataclass
class MatchRanking:
    """Divergences of one query against a database, ranked ascending."""

    divergences: np.ndarray
    ranking: List[int]
    results: List[DivergenceResult]

    @property
    def best(self) -> int:
        return self.ranking[0]

    @property
    def margin(self) -> float:
        """Gap between the runner-up and the best match."""
        if len(self.ranking) < 2:
            return float("inf")
        return float(self.divergences[self.ranking[1]] - self.divergences[self.ranking[0]])


def match_face(
    query: FaceMatrix,
    database: Sequence[FaceMatrix],
    backend: str = CLASSICAL,
    workers: int = 1,
    **kwargs,
) -> MatchRanking:
    """Rank database entries by D(query, Y_k); ties go to the lower index."""
    if not database:
        raise DimensionMismatchError("Face database is empty")

    def compare(entry):
        return logdet_divergence(query, entry, backend=backend, **kwargs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(compare, database))
    else:
        results = [compare(entry) for entry in database]

    divergences = np.array([r.value for r in results])
    ranking = [int(k) for k in np.argsort(divergences, kind="stable")]
    return MatchRanking(divergences=divergences, ranking=ranking, results=results)


def frobenius_distance(x: FaceMatrix, y: FaceMatrix) -> float:
    """‖X − Y‖_F baseline."""
    _check_pair(x, y)
    return float(np.linalg.norm(x.to_dense() - y.to_dense(), "fro"))
