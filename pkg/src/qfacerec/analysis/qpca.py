"""Eigenfaces from phase estimation on the exponentiated face covariance.

The covariance is C_X = (1/M)Σ|x⟩⟨x| over unit-norm faces, without mean
subtraction, so the top eigenface is the mean image. Phase estimation on
e^{-iC_X t} supplies the eigenvalues; eigenvectors come from the oracle.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from ..core.errors import DimensionMismatchError, PhaseWraparoundError
from ..linalg.matrix import Matrix, as_matrix
from ..linalg.oracles import eig_hermitian
from ..quantum.determinant import PHASE, SYSTEM, qpe_forward, system_width
from ..quantum.gates import unitary_from_hermitian
from ..quantum.register import DEFAULT_MAX_QUBITS, GateLog, allocate

logger = logging.getLogger(__name__)

DEFAULT_EVOLUTION_TIME = math.pi
RANK_TOL = 1e-12


@dataclass(frozen=True)
class TrainingSet:
    """M unit-norm face vectors of length N, one per row."""

    faces: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        faces = np.atleast_2d(np.asarray(self.faces, dtype=complex))
        if faces.shape[0] == 0 or faces.shape[1] == 0:
            raise DimensionMismatchError("Training set is empty")
        norms = np.linalg.norm(faces, axis=1)
        if np.any(norms == 0):
            raise DimensionMismatchError("Training set contains an all-zero face")
        faces = faces / norms[:, None]
        faces.setflags(write=False)
        object.__setattr__(self, "faces", faces)
        if self.labels and len(self.labels) != faces.shape[0]:
            raise DimensionMismatchError(f"{len(self.labels)} labels for {faces.shape[0]} faces")

    @classmethod
    def from_rasters(cls, rasters: Sequence[np.ndarray], labels: Sequence[str] = ()) -> "TrainingSet":
        """Flatten rasters row-major and normalize each to unit length."""
        return cls(np.stack([np.asarray(r, dtype=float).reshape(-1) for r in rasters]), tuple(labels))

    @property
    def size(self) -> int:
        return self.faces.shape[0]

    @property
    def dimension(self) -> int:
        return self.faces.shape[1]


@dataclass
class EigenfaceBasis:
    """Eigenfaces (columns) with oracle and phase-estimated eigenvalues."""

    eigenfaces: np.ndarray
    eigenvalues: np.ndarray
    estimated_eigenvalues: np.ndarray
    indices: List[int]
    precision: int
    evolution_time: float
    mean_image_index: int = 0
    phase_histogram: Optional[np.ndarray] = None
    score_matrix: Optional[np.ndarray] = None
    log: GateLog = field(default_factory=GateLog)

    @property
    def rank(self) -> int:
        return self.eigenfaces.shape[1]

    @property
    def dimension(self) -> int:
        return self.eigenfaces.shape[0]

    @property
    def bin_width(self) -> float:
        """Eigenvalue spacing of adjacent phase-register values."""
        return (2 * math.pi / self.evolution_time) / 2 ** self.precision

    def eigenface(self, j: int) -> np.ndarray:
        return self.eigenfaces[:, j]


def build_covariance(ts: TrainingSet) -> Matrix:
    """C_X = (1/M)Σ|x⟩⟨x|; hermitian, PSD and of unit trace."""
    faces = ts.faces
    cov = faces.T @ faces.conj() / ts.size
    # Exact hermitian symmetry for the hermitian flag.
    cov = (cov + cov.conj().T) / 2
    logger.debug(f"Covariance of {ts.size} faces, dimension {ts.dimension}, trace {np.trace(cov).real:.12f}")
    return Matrix(cov)


def eigenvalue_from_phase(k: int, n: int, t: float) -> float:
    """Eigenvalue of C encoded by readout k for U = e^{-iCt}."""
    size = 2 ** n
    return (2 * math.pi / t) * ((size - k) % size) / size


def _qpe_readout(u: Matrix, state: np.ndarray, n: int, s: int, max_qubits: int):
    reg = allocate([(PHASE, n), (SYSTEM, s)], max_qubits=max_qubits)
    padded = np.zeros(2 ** s, dtype=complex)
    padded[: state.shape[0]] = state
    reg.prepare(SYSTEM, padded)
    qpe_forward(reg, u, n)
    return reg.sub_values(PHASE), reg.log


def qpca_eigenfaces(
    c: Matrix,
    n: int,
    t: float = DEFAULT_EVOLUTION_TIME,
    training: Optional[TrainingSet] = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> EigenfaceBasis:
    """Phase-estimate the nonzero eigenvalues of the covariance.

    Args:
        c: covariance matrix
        n: phase-register precision
        t: evolution time of U = e^{-iCt}
        training: when given, also records the averaged phase histogram of
            the training states and their scores on the basis

    Raises:
        PhaseWraparoundError: if some λ·t >= 2π
    """
    c = as_matrix(c)
    c.require_hermitian("covariance")
    eigen = eig_hermitian(c)
    top = float(np.max(eigen.eigenvalues))
    if top * t >= 2 * math.pi:
        raise PhaseWraparoundError(f"λ·t = {top * t:.4g} wraps past 2π; choose t < {2 * math.pi / top:.4g}")

    keep = [j for j, lam in enumerate(eigen.eigenvalues) if lam > RANK_TOL * max(top, 1.0)]
    s = system_width(c.rows)
    padded = np.zeros((2 ** s, 2 ** s), dtype=complex)
    padded[: c.rows, : c.rows] = c.to_dense()
    u = unitary_from_hermitian(padded, -t)

    log = GateLog()
    estimates = []
    for j in keep:
        distribution, run_log = _qpe_readout(u, eigen.vector(j), n, s, max_qubits)
        log.merge(run_log)
        estimates.append(eigenvalue_from_phase(int(np.argmax(distribution)), n, t))

    histogram = None
    if training is not None:
        if training.dimension != c.rows:
            raise DimensionMismatchError(f"Training faces of length {training.dimension} for {c.rows}-dim covariance")
        histogram = np.zeros(2 ** n)
        for face in training.faces:
            distribution, run_log = _qpe_readout(u, face, n, s, max_qubits)
            log.merge(run_log)
            histogram += distribution
        histogram /= training.size

    basis = EigenfaceBasis(
        eigenfaces=eigen.eigenvectors[:, keep],
        eigenvalues=eigen.eigenvalues[keep],
        estimated_eigenvalues=np.asarray(estimates),
        indices=list(keep),
        precision=n,
        evolution_time=t,
        mean_image_index=0,
        phase_histogram=histogram,
        log=log,
    )
    if training is not None:
        basis.score_matrix = scores(training, basis)
    logger.info(f"QPCA: {basis.rank} eigenfaces at n={n}, t={t:.4g}")
    return basis


def scores(ts: TrainingSet, basis: EigenfaceBasis) -> np.ndarray:
    """s[i, j] = ⟨x^i|φ^j⟩."""
    if ts.dimension != basis.dimension:
        raise DimensionMismatchError(f"Faces of length {ts.dimension} against {basis.dimension}-dim eigenfaces")
    return ts.faces.conj() @ basis.eigenfaces


def select_principal(basis: EigenfaceBasis, r: int, score_matrix: Optional[np.ndarray] = None) -> EigenfaceBasis:
    """Keep the r eigenfaces with the highest max-absolute score.

    Ties go to the larger eigenvalue, then the lower index. Without scores
    the ranking falls back to eigenvalue order. The kept eigenface with the
    largest eigenvalue is flagged as the mean image.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if r > basis.rank:
        raise DimensionMismatchError(f"Asked for {r} eigenfaces, only {basis.rank} available")
    score_matrix = basis.score_matrix if score_matrix is None else np.asarray(score_matrix)
    if score_matrix is None:
        strength = np.zeros(basis.rank)
    else:
        if score_matrix.shape[1] != basis.rank:
            raise DimensionMismatchError(f"Score matrix has {score_matrix.shape[1]} columns for {basis.rank} eigenfaces")
        strength = np.max(np.abs(score_matrix), axis=0)

    order = sorted(range(basis.rank), key=lambda j: (-strength[j], -basis.eigenvalues[j], j))[:r]
    mean_image = max(range(r), key=lambda pos: (basis.eigenvalues[order[pos]], -pos))
    return replace(
        basis,
        eigenfaces=basis.eigenfaces[:, order],
        eigenvalues=basis.eigenvalues[order],
        estimated_eigenvalues=basis.estimated_eigenvalues[order],
        indices=[basis.indices[j] for j in order],
        mean_image_index=mean_image,
        score_matrix=None if score_matrix is None else score_matrix[:, order],
    )


@dataclass
class FaceExpansion:
    weights: np.ndarray
    reconstruction: np.ndarray
    residual_norm: float


def expand_face(x: np.ndarray, basis: EigenfaceBasis) -> FaceExpansion:
    """ω_j = ⟨φ^j|x⟩ and the reconstruction Σω_j|φ^j⟩."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != basis.dimension:
        raise DimensionMismatchError(f"Face of length {x.shape[0]} against {basis.dimension}-dim eigenfaces")
    weights = basis.eigenfaces.conj().T @ x
    reconstruction = basis.eigenfaces @ weights
    return FaceExpansion(
        weights=weights,
        reconstruction=reconstruction,
        residual_norm=float(np.linalg.norm(x - reconstruction)),
    )


def eigenface_rasters(basis: EigenfaceBasis, side: int) -> List[np.ndarray]:
    """Eigenfaces as side×side uint8 rasters, min-max scaled."""
    if side * side != basis.dimension:
        raise DimensionMismatchError(f"Cannot reshape {basis.dimension}-dim eigenfaces to {side}x{side}")
    rasters = []
    for j in range(basis.rank):
        face = basis.eigenface(j).real.reshape(side, side)
        low, high = face.min(), face.max()
        span = high - low if high > low else 1.0
        rasters.append(np.rint(255 * (face - low) / span).astype(np.uint8))
    return rasters
