"""HHL linear solver and the linear-solve core of independent component analysis."""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ..core.errors import ConditionNumberError, DegenerateSolveError, DimensionMismatchError, QubitBudgetError
from ..linalg.matrix import ArrayLike, Matrix, as_matrix, unit
from ..linalg.oracles import eig_hermitian, inverse
from ..linalg.spectrum import condition_spectrum, require_in_range
from .determinant import (
    ANCILLA,
    PHASE,
    SYSTEM,
    outcome_envelope,
    phase_unitary,
    qpe_forward,
    qpe_inverse,
    system_width,
)
from .gates import apply_multiplexed_rotation
from .register import DEFAULT_MAX_QUBITS, GateLog, allocate

logger = logging.getLogger(__name__)

DEFAULT_KAPPA_CAP = 32.0
SUCCESS_FLOOR = 1e-10

QUANTUM_PATH = "quantum"
ORACLE_PATH = "oracle"


@dataclass
class LinearSolveRun:
    """Record of one HHL solve of A·x = b."""

    matrix: Matrix
    rhs: np.ndarray
    precision: int
    kappa: float
    constant: float
    signed: bool
    success_probability: float
    solution: np.ndarray
    log: GateLog = field(default_factory=GateLog)


def decoded_eigenvalues(n: int, signed: bool) -> np.ndarray:
    """Eigenvalue each phase-register value stands for, in units of 2^n·λ̃."""
    k = np.arange(2 ** n)
    if signed:
        return np.where(k >= 2 ** (n - 1), k - 2 ** n, k).astype(float)
    return k.astype(float)


def inversion_amplitudes(n: int, constant: float, signed: bool) -> np.ndarray:
    """Conditional-rotation amplitude C/λ_k, clipped to [-1, 1], zero at k=0."""
    lam = decoded_eigenvalues(n, signed)
    amps = np.zeros_like(lam)
    nonzero = lam != 0
    amps[nonzero] = np.clip(constant / lam[nonzero], -1.0, 1.0)
    return amps


def run_hhl(
    a: Union[Matrix, ArrayLike],
    b: Union[np.ndarray, Sequence[complex]],
    n: int,
    signed: bool = False,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> LinearSolveRun:
    """Solve A·x = b for the normalized state ∝ A⁻¹b.

    A must already be scaled so its eigenvalues lie in (0, 2^n), or in
    (-2^(n-1), 2^(n-1)) excluding 0 when signed.

    Raises:
        SpectrumRangeError: eigenvalues outside the register range
        ConditionNumberError: κ above kappa_cap
        DegenerateSolveError: post-selected branch amplitude below 1e-10
    """
    a = as_matrix(a)
    a.require_hermitian("HHL matrix")
    rhs = unit(b)
    if rhs.shape[0] != a.rows:
        raise DimensionMismatchError(f"Right-hand side of length {rhs.shape[0]} for {a.rows}x{a.rows} matrix")

    eigen = eig_hermitian(a)
    require_in_range(eigen.eigenvalues, n, signed=signed)
    kappa = eigen.condition_ratio
    if kappa > kappa_cap:
        raise ConditionNumberError(f"Condition ratio {kappa:.3g} exceeds cap {kappa_cap:g}")

    s = system_width(a.rows)
    if n + s + 1 > max_qubits:
        raise QubitBudgetError(f"HHL on N={a.rows} at n={n} needs {n + s + 1} qubits, budget is {max_qubits}")

    # Largest constant that keeps every rotation amplitude valid.
    constant = float(np.min(np.abs(eigen.eigenvalues)))
    u = phase_unitary(a, n)

    reg = allocate([(PHASE, n), (SYSTEM, s), (ANCILLA, 1)], max_qubits=max_qubits)
    padded = np.zeros(2 ** s, dtype=complex)
    padded[: a.rows] = rhs
    reg.prepare(SYSTEM, padded)

    qpe_forward(reg, u, n)
    apply_multiplexed_rotation(reg, PHASE, reg.qubit(ANCILLA), inversion_amplitudes(n, constant, signed))
    qpe_inverse(reg, u, n)

    # Ancilla |1⟩ with the phase register back on |0…0⟩.
    branch = reg.view(PHASE)[:, 0, :].reshape(2 ** s, 2)[:, 1]
    amplitude = float(np.linalg.norm(branch))
    if amplitude < SUCCESS_FLOOR:
        raise DegenerateSolveError(f"Post-selected branch amplitude {amplitude:.3e} below {SUCCESS_FLOOR:.0e}")

    solution = branch[: a.rows] / np.linalg.norm(branch[: a.rows])
    logger.debug(f"HHL N={a.rows} n={n}: κ={kappa:.3g}, success probability {amplitude ** 2:.4g}")
    return LinearSolveRun(
        matrix=a,
        rhs=rhs,
        precision=n,
        kappa=kappa,
        constant=constant,
        signed=signed,
        success_probability=amplitude ** 2,
        solution=solution,
        log=reg.log,
    )


def hhl_solve(a: Union[Matrix, ArrayLike], b: Union[np.ndarray, Sequence[complex]], n: int, **kwargs) -> np.ndarray:
    return run_hhl(a, b, n, **kwargs).solution


def hermitian_dilation(f: Matrix) -> Matrix:
    """[[0, F], [F†, 0]], hermitian with eigenvalues ±σ_i(F)."""
    dense = f.to_dense()
    zeros = np.zeros_like(dense)
    return Matrix(np.block([[zeros, dense], [dense.conj().T, zeros]]))


def qica_unmix(
    mixing: Union[Matrix, ArrayLike],
    x: Union[np.ndarray, Sequence[complex]],
    n: int = 5,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> np.ndarray:
    """Normalized sources s ∝ W·x, found by solving F·s = x with W = F⁻¹.

    Non-hermitian F goes through the hermitian dilation; either way the
    solve runs in signed mode, so indefinite spectra are allowed.

    Raises:
        SingularMatrixError: if F is singular
    """
    f = as_matrix(mixing)
    f.require_square("mixing matrix")
    x = unit(x)
    # Singular F has no unmixing matrix.
    inverse(f)

    if f.hermitian:
        system, rhs = f, x
    else:
        system = hermitian_dilation(f)
        rhs = np.concatenate([x, np.zeros_like(x)])

    scale = condition_spectrum(eig_hermitian(system).eigenvalues, n, signed=True)
    run = run_hhl(Matrix(scale * system.to_dense()), rhs, n, signed=True, kappa_cap=kappa_cap, max_qubits=max_qubits)
    solution = run.solution if f.hermitian else run.solution[f.rows:]
    return unit(solution)


def qica_sources(
    mixing: Union[Matrix, ArrayLike],
    observations: np.ndarray,
    n: int = 5,
    **kwargs,
) -> np.ndarray:
    """Unmix a batch of observations (one per row), restoring each source's scale.

    HHL yields only the direction ŝ; the scale c with F·(c·ŝ) = x follows
    from the known mixing matrix as c = ⟨Fŝ, x⟩/‖Fŝ‖².
    """
    f = as_matrix(mixing).to_dense()
    rows = np.atleast_2d(np.asarray(observations, dtype=complex))
    sources = np.zeros((rows.shape[0], f.shape[1]), dtype=complex)
    for i, x in enumerate(rows):
        norm = np.linalg.norm(x)
        if norm == 0:
            continue
        direction = qica_unmix(f, x / norm, n, **kwargs)
        mixed = f @ direction
        sources[i] = direction * (np.vdot(mixed, x) / np.vdot(mixed, mixed))
    logger.info(f"Unmixed {rows.shape[0]} observations into {f.shape[1]} sources")
    return sources


def matrix_ratio(
    x: Union[Matrix, ArrayLike],
    y: Union[Matrix, ArrayLike],
    n: int = 4,
    path: str = QUANTUM_PATH,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_qubits: int = DEFAULT_MAX_QUBITS,
    log: GateLog = None,
) -> Matrix:
    """X·Y⁻¹, with Y⁻¹ assembled column by column from HHL or taken from the oracle.

    The quantum path fixes each column's scale and phase from Y·c_k = e_k:
    c_k = ĉ/(Yĉ)_k.

    Raises:
        SingularMatrixError: if Y is singular
    """
    x, y = as_matrix(x), as_matrix(y)
    if x.cols != y.rows or not y.is_square:
        raise DimensionMismatchError(f"Cannot form X·Y⁻¹ for shapes {x.shape} and {y.shape}")
    if path == ORACLE_PATH:
        return x @ inverse(y)
    if path != QUANTUM_PATH:
        raise ValueError(f"Unknown matrix_ratio path: {path}")

    inverse(y)
    y.require_hermitian("Y")
    dense = y.to_dense()
    scale = condition_spectrum(eig_hermitian(y).eigenvalues, n)
    scaled = Matrix(scale * dense)

    columns = []
    for k in range(y.rows):
        basis = np.zeros(y.rows, dtype=complex)
        basis[k] = 1.0
        run = run_hhl(scaled, basis, n, kappa_cap=kappa_cap, max_qubits=max_qubits)
        if log is not None:
            log.merge(run.log)
        direction = run.solution
        columns.append(direction / (dense @ direction)[k])

    y_inv = np.column_stack(columns)
    logger.debug(f"Assembled {y.rows}x{y.rows} inverse from {y.rows} HHL solves")
    return Matrix(x.to_dense() @ y_inv)


def ratio_trace_bound(
    x: Union[Matrix, ArrayLike], y: Union[Matrix, ArrayLike], n: int = 4, tol: float = 1e-9
) -> float:
    """Bound on |Tr(matrix_ratio(X, Y, n)) − Tr(X·Y⁻¹)|.

    Phase leakage makes each HHL solve apply g(Y) instead of C·(sY)⁻¹, with
    |g_j − C/λ'_j| <= γ on every eigenvector. Column k then carries a
    perturbation d with ‖d‖ <= ρ = sγ/C, which moves the k-th diagonal entry
    by at most ρ(‖X_k‖ + |(XY⁻¹)_kk|·‖Y_k‖) / (1 − ρ‖Y_k‖). Spectra on the
    integer grid give 0.
    """
    x, y = as_matrix(x), as_matrix(y)
    eigen = eig_hermitian(y)
    scale = condition_spectrum(eigen.eigenvalues, n)
    scaled = scale * eigen.eigenvalues
    constant = float(np.min(scaled))
    amplitudes = inversion_amplitudes(n, constant, signed=False)

    gamma = 0.0
    for lam in scaled:
        if abs(lam - round(lam)) <= tol:
            continue
        leak = np.sum(outcome_envelope(lam, n) * np.abs(amplitudes - constant / lam))
        gamma = max(gamma, float(leak))
    if gamma == 0.0:
        return 0.0

    rho = scale * gamma / constant
    dense_x, dense_y = x.to_dense(), y.to_dense()
    exact = np.diag(dense_x @ inverse(y).to_dense())
    total = 0.0
    for k in range(y.rows):
        row_x, row_y = np.linalg.norm(dense_x[k]), np.linalg.norm(dense_y[k])
        if rho * row_y >= 1.0:
            return math.inf
        total += rho * (row_x + abs(exact[k]) * row_y) / (1.0 - rho * row_y)
    return float(total)
