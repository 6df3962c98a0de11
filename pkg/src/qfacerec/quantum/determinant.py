"""Determinant of a positive hermitian matrix from phase estimation.

Each eigenvector |u_j⟩ is pushed through phase estimation, a rotation that
writes λ̃_j = λ_j/2^n into an ancilla amplitude, and the inverse phase
estimation. The N ancillas form a product register whose |1…1⟩ amplitude is
∏λ̃_j, and (2^n)^N times that amplitude is det(A).

The circuit runs on s·A for the largest power of two s that keeps the
spectrum inside the register, so more phase qubits give a finer grid.
Off-grid eigenvalues leak across phase outcomes; the readout keeps that
leakage and determinant_error_bound covers it.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from ..core.errors import QubitBudgetError, warn_underflow
from ..linalg.matrix import ArrayLike, EigenDecomposition, Matrix, as_matrix
from ..linalg.oracles import det_classical, eig_hermitian
from ..linalg.spectrum import condition_spectrum, require_in_range
from .gates import (
    apply_controlled_unitary_power,
    apply_controlled_y_rotation,
    apply_hadamard_block,
    apply_multiplexed_rotation,
    apply_qft,
    read_amplitude,
    unitary_from_hermitian,
)
from .register import DEFAULT_MAX_QUBITS, GateLog, QubitRegister, allocate

logger = logging.getLogger(__name__)

PHASE = "phase"
SYSTEM = "system"
ANCILLA = "ancilla"

IDEALIZED = "idealized"
LITERAL = "literal"
ROTATIONS = (IDEALIZED, LITERAL)

UNDERFLOW_FLOOR = 1e-12


def system_width(dim: int) -> int:
    return max(1, math.ceil(math.log2(dim)))


def pad_hermitian(a: Matrix) -> Matrix:
    """Embed A in the next power-of-two dimension with an identity block."""
    size = 2 ** system_width(a.rows)
    if size == a.rows:
        return a
    padded = np.eye(size, dtype=complex)
    padded[: a.rows, : a.rows] = a.to_dense()
    return Matrix(padded)


def phase_unitary(a: Matrix, n: int) -> Matrix:
    """U = e^{2πiA/2^n} on the padded system."""
    return unitary_from_hermitian(pad_hermitian(a), 2 * math.pi / 2 ** n)


def qpe_forward(reg: QubitRegister, u: Union[Matrix, ArrayLike], n: int, phase: str = PHASE, system: str = SYSTEM) -> QubitRegister:
    """Hadamards, controlled U^(2^(n-l)) from phase qubit l-1, then inverse QFT.

    For U = e^{2πiA/2^n} and an integer eigenvalue λ the phase register ends in |λ⟩.
    """
    u = as_matrix(u)
    if reg.sub(phase).width != n:
        raise ValueError(f"Phase register has width {reg.sub(phase).width}, expected {n}")
    apply_hadamard_block(reg, phase)
    offset = reg.sub(phase).offset
    for l in range(1, n + 1):
        apply_controlled_unitary_power(reg, offset + l - 1, system, u, 2 ** (n - l))
    return apply_qft(reg, phase, inverse=True)


def qpe_inverse(reg: QubitRegister, u: Union[Matrix, ArrayLike], n: int, phase: str = PHASE, system: str = SYSTEM) -> QubitRegister:
    """Undo qpe_forward: QFT, controlled U† powers in reverse, Hadamards."""
    u_dagger = as_matrix(u).conj_transpose()
    apply_qft(reg, phase)
    offset = reg.sub(phase).offset
    for l in range(n, 0, -1):
        apply_controlled_unitary_power(reg, offset + l - 1, system, u_dagger, 2 ** (n - l))
    return apply_hadamard_block(reg, phase)


def rotation_cascade(reg: QubitRegister, rotation: str = IDEALIZED, phase: str = PHASE, ancilla: str = ANCILLA) -> QubitRegister:
    """Write the phase-register fraction λ̃ into the ancilla.

    idealized: ancilla → √(1−λ̃²)|0⟩ + λ̃|1⟩ for every phase value.
    literal:   controlled R_l = exp(σ_y rotation by 2^-l) from phase bit l,
               which composes to cos(λ̃)|0⟩ + sin(λ̃)|1⟩.
    """
    if rotation not in ROTATIONS:
        raise ValueError(f"Unknown rotation backend: {rotation}")
    sub = reg.sub(phase)
    target = reg.qubit(ancilla)
    if rotation == IDEALIZED:
        return apply_multiplexed_rotation(reg, phase, target, np.arange(sub.size) / sub.size)
    for l in range(1, sub.width + 1):
        apply_controlled_y_rotation(reg, sub.offset + l - 1, target, l)
    return reg


@dataclass
class DeterminantRun:
    """Full record of a determinant circuit evaluation.

    The circuit runs on scale·A, with scale the largest power of two that
    keeps the spectrum inside the phase register. `product_amplitude` is the
    joint |1…1⟩ amplitude with the phase registers projected on |0…0⟩.
    """

    matrix: Matrix
    precision: int
    eigen: EigenDecomposition
    rotation: str
    ancillas: List[np.ndarray]
    postselection: List[float]
    lambda_tilde: List[float]
    product_amplitude: complex
    estimate: float
    scale: float = 1.0
    log: GateLog = field(default_factory=GateLog)

    @property
    def exact_lambda_tilde(self) -> List[float]:
        return [self.scale * float(lam) / 2 ** self.precision for lam in self.eigen.eigenvalues]

    @property
    def product_qubits(self) -> int:
        return len(self.ancillas)


def _eigen_branch(
    u: Matrix,
    vector: np.ndarray,
    n: int,
    s: int,
    rotation: str,
    max_qubits: int,
):
    reg = allocate([(PHASE, n), (SYSTEM, s), (ANCILLA, 1)], max_qubits=max_qubits)
    padded = np.zeros(2 ** s, dtype=complex)
    padded[: vector.shape[0]] = vector
    reg.prepare(SYSTEM, padded)

    qpe_forward(reg, u, n)
    rotation_cascade(reg, rotation)
    qpe_inverse(reg, u, n)

    # Phase register back on |0…0⟩, system on |u_j⟩.
    block = reg.view(PHASE)[:, 0, :].reshape(2 ** s, 2)
    ancilla = padded.conj() @ block
    probability = float(np.sum(np.abs(ancilla) ** 2))
    if probability > 0:
        ancilla = ancilla / math.sqrt(probability)
    return ancilla, probability, reg.log


def determinant_scale(eigenvalues, n: int) -> float:
    """Power-of-two scale spreading the spectrum over the phase register, never below 1."""
    return max(1.0, condition_spectrum(eigenvalues, n))


def run_determinant(
    a: Union[Matrix, ArrayLike],
    n: int,
    rotation: str = IDEALIZED,
    max_qubits: int = DEFAULT_MAX_QUBITS,
    workers: int = 1,
) -> DeterminantRun:
    """Run the per-eigenvector circuits and read the product register.

    Raises:
        NonHermitianError: if A is not hermitian
        SpectrumRangeError: if any eigenvalue lies outside (0, 2^n)
        QubitBudgetError: if a circuit or the product register exceeds the budget
    """
    a = as_matrix(a)
    a.require_hermitian("determinant input")
    if rotation not in ROTATIONS:
        raise ValueError(f"Unknown rotation backend: {rotation}")
    eigen = eig_hermitian(a)
    require_in_range(eigen.eigenvalues, n)

    size = a.rows
    s = system_width(size)
    if n + s + 1 > max_qubits or size > max_qubits:
        raise QubitBudgetError(
            f"Determinant of N={size} at n={n} needs {n + s + 1} circuit qubits and {size} product qubits"
        )

    scale = determinant_scale(eigen.eigenvalues, n)
    u = phase_unitary(Matrix(scale * a.to_dense()) if scale != 1.0 else a, n)
    logger.info(f"Determinant circuit: N={size}, n={n}, rotation={rotation}, scale={scale:g}")

    def branch(j):
        return _eigen_branch(u, eigen.vector(j), n, s, rotation, max_qubits)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(branch, range(size)))
    else:
        results = [branch(j) for j in range(size)]

    log = GateLog()
    ancillas, postselection = [], []
    for ancilla, probability, branch_log in results:
        ancillas.append(ancilla)
        postselection.append(probability)
        log.merge(branch_log)

    product = ancillas[0]
    for ancilla in ancillas[1:]:
        product = np.kron(product, ancilla)
    product_reg = allocate([("product", size)], max_qubits=max_qubits)
    product_reg.update(product)
    # Undo the per-branch renormalization so phase leakage stays in the readout.
    amplitude = read_amplitude(product_reg, 2 ** size - 1) * math.sqrt(float(np.prod(postselection)))
    raw = [float(np.abs(anc[1])) * math.sqrt(p) for anc, p in zip(ancillas, postselection)]

    unscale = (2.0 ** n / scale) ** size
    if rotation == IDEALIZED:
        lambda_tilde = raw
        estimate = float(unscale * amplitude.real)
    else:
        lambda_tilde = [float(np.arcsin(min(1.0, value))) for value in raw]
        estimate = float(unscale * np.prod(lambda_tilde))

    if abs(amplitude) < UNDERFLOW_FLOOR:
        logger.warning(f"Product amplitude {abs(amplitude):.3e} below readout floor")
        warn_underflow(amplitude, UNDERFLOW_FLOOR)

    logger.debug(f"Recovered λ̃ = {np.round(lambda_tilde, 6).tolist()}, estimate {estimate:.6g}")
    return DeterminantRun(
        matrix=a,
        precision=n,
        eigen=eigen,
        rotation=rotation,
        ancillas=ancillas,
        postselection=postselection,
        lambda_tilde=lambda_tilde,
        product_amplitude=amplitude,
        estimate=estimate,
        scale=scale,
        log=log,
    )


def determinant_quantum(a: Union[Matrix, ArrayLike], n: int, rotation: str = IDEALIZED) -> float:
    return run_determinant(a, n, rotation=rotation).estimate


def outcome_envelope(scaled: float, n: int) -> np.ndarray:
    """Pointwise cap on the phase-estimation outcome distribution of eigenvalue λ.

    P(k) = sin²(πδ) / (2^2n sin²(πc/2^n)) with δ the fractional part of λ and
    c the circular distance from k to λ, so P(k) <= min(1, sin²(πδ)/4c²).
    """
    size = 2 ** n
    linear = np.abs(np.arange(size) - scaled)
    circular = np.minimum(linear, size - linear)
    weight = math.sin(math.pi * (scaled - math.floor(scaled))) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.minimum(1.0, weight / (4.0 * circular ** 2))
    return np.nan_to_num(cap, nan=1.0)


def phase_spread(scaled: float, n: int) -> float:
    """Upper bound on Σ_k P(k)·|k − λ|."""
    return float(np.sum(outcome_envelope(scaled, n) * np.abs(np.arange(2 ** n) - scaled)))


def determinant_error_bound(
    a: Union[Matrix, ArrayLike], n: int, rotation: str = IDEALIZED, tol: float = 1e-9
) -> float:
    """Bound on |run_determinant(a, n).estimate − det(A)|.

    Each eigenvalue λ' of the scaled matrix off the integer grid reads out
    within β = phase_spread(λ')/2^n of λ'/2^n (through arcsin for the literal
    cascade). The product then stays within |det|·(∏(1 + β_j/λ̃_j) − 1).
    Spectra on the grid give 0.
    """
    if rotation not in ROTATIONS:
        raise ValueError(f"Unknown rotation backend: {rotation}")
    eigen = eig_hermitian(a)
    det = abs(det_classical(a))
    size = 2 ** n
    scale = determinant_scale(eigen.eigenvalues, n)
    growth = 1.0
    for lam in eigen.eigenvalues:
        scaled = scale * float(lam)
        if abs(scaled - round(scaled)) <= tol:
            continue
        lam_tilde = scaled / size
        beta = phase_spread(scaled, n) / size
        if rotation == LITERAL:
            top = math.sin(lam_tilde) + beta
            if top >= 1.0:
                return math.inf
            beta /= math.sqrt(1.0 - top ** 2)
        growth *= 1.0 + beta / lam_tilde
    return det * (growth - 1.0)
