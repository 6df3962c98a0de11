"""Gate kernels over a QubitRegister.

Multi-qubit gates act as dense kernels on the sub-register axis of the
statevector; the gate log still counts them by elementary family.
"""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import hadamard

from ..core.errors import DimensionMismatchError, NonUnitaryError, RegisterError
from ..linalg.matrix import ArrayLike, Matrix, as_matrix
from ..linalg.oracles import eig_hermitian
from .register import QubitRegister

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10


def _apply_on_sub(reg: QubitRegister, name: str, matrix: np.ndarray, control: Optional[int] = None) -> QubitRegister:
    state = reg.view(name)
    new = np.einsum("ij,ajb->aib", matrix, state).reshape(-1)
    if control is not None:
        new = np.where(reg.bit(control) == 1, new, reg.amplitudes)
    return reg.update(new)


def apply_hadamard_block(reg: QubitRegister, sub: str) -> QubitRegister:
    """H^⊗width on a sub-register."""
    size = reg.sub(sub).size
    matrix = hadamard(size).astype(complex) / math.sqrt(size)
    _apply_on_sub(reg, sub, matrix)
    reg.log.record("hadamard", reg.sub(sub).width, depth=1)
    return reg


def qft_matrix(width: int, inverse: bool = False) -> np.ndarray:
    """F[k, a] = e^{2πi·a·k/K}/√K, bit reversal included."""
    size = 2 ** width
    k = np.arange(size)
    matrix = np.exp(2j * np.pi * np.outer(k, k) / size) / math.sqrt(size)
    return matrix.conj().T if inverse else matrix


def apply_qft(reg: QubitRegister, sub: str, inverse: bool = False) -> QubitRegister:
    """Quantum Fourier transform |a⟩ → (1/√K)Σ_k e^{2πiak/K}|k⟩ on a sub-register."""
    width = reg.sub(sub).width
    _apply_on_sub(reg, sub, qft_matrix(width, inverse))
    reg.log.record("hadamard", width, depth=0)
    reg.log.record("controlled_phase", width * (width - 1) // 2, depth=0)
    reg.log.depth += 2 * width - 1
    return reg


def require_unitary(u: Matrix, what: str = "u") -> np.ndarray:
    dense = u.to_dense()
    if not u.is_square:
        raise DimensionMismatchError(f"{what} must be square, got shape {u.shape}")
    deviation = np.max(np.abs(dense @ dense.conj().T - np.eye(u.rows)))
    if deviation > UNITARY_TOL:
        raise NonUnitaryError(f"{what} is not unitary (deviation {deviation:.3e})")
    return dense


def apply_controlled_unitary_power(
    reg: QubitRegister,
    control: int,
    sub: str,
    u: Union[Matrix, ArrayLike],
    power: int,
) -> QubitRegister:
    """Apply u^power to a sub-register when the control qubit is |1⟩.

    Raises:
        NonUnitaryError: if u is not unitary within 1e-10
        DimensionMismatchError: if dim u does not match the sub-register
    """
    dense = require_unitary(as_matrix(u))
    target = reg.sub(sub)
    if dense.shape[0] != target.size:
        raise DimensionMismatchError(f"Unitary of dimension {dense.shape[0]} on {target.width}-qubit {sub}")
    if power < 0:
        raise ValueError(f"Power must be non-negative, got {power}")
    if control in target.qubits:
        raise RegisterError(f"Control qubit {control} lies inside target {sub}")
    reg.check_qubit(control)

    _apply_on_sub(reg, sub, np.linalg.matrix_power(dense, power), control=control)
    reg.log.record("controlled_unitary")
    return reg


def unitary_from_hermitian(a: Union[Matrix, ArrayLike], phase_scale: float) -> Matrix:
    """e^{i·phase_scale·A} rebuilt from the oracle eigendecomposition."""
    eig = eig_hermitian(a)
    v = eig.eigenvectors
    phases = np.exp(1j * phase_scale * eig.eigenvalues)
    return Matrix((v * phases) @ v.conj().T)


def y_rotation(angle: float) -> np.ndarray:
    """Real rotation taking |0⟩ to cos(angle)|0⟩ + sin(angle)|1⟩."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def apply_controlled_y_rotation(reg: QubitRegister, control: int, target: int, l: int) -> QubitRegister:
    """Rotate the target by angle 2^-l about y when the control is |1⟩.

    Composing these over the set bits x_l of a phase register gives the
    total angle Σ x_l 2^-l.
    """
    if l < 0:
        raise ValueError(f"Rotation index must be >= 0, got {l}")
    reg.check_qubit(control)
    reg.check_qubit(target)
    if control == target:
        raise RegisterError(f"Control and target are the same qubit ({control})")

    rot = y_rotation(2.0 ** -l)
    state = reg.amplitudes
    partner = np.arange(reg.dimension) ^ (1 << (reg.qubit_count - 1 - target))
    tbit = reg.bit(target)
    rotated = np.where(
        tbit == 0,
        rot[0, 0] * state + rot[0, 1] * state[partner],
        rot[1, 0] * state[partner] + rot[1, 1] * state,
    )
    reg.update(np.where(reg.bit(control) == 1, rotated, state))
    reg.log.record("rotation")
    return reg


def apply_multiplexed_rotation(
    reg: QubitRegister,
    control_sub: str,
    target: int,
    amplitudes: Sequence[float],
) -> QubitRegister:
    """Uniformly controlled rotation |0⟩ → √(1−s_k²)|0⟩ + s_k|1⟩ for control value k.

    Args:
        reg: register to act on
        control_sub: sub-register whose value selects the rotation
        target: global index of the rotated qubit
        amplitudes: s_k in [-1, 1], one per control value
    """
    control = reg.sub(control_sub)
    s = np.asarray(amplitudes, dtype=float)
    if s.shape != (control.size,):
        raise DimensionMismatchError(f"Need {control.size} rotation amplitudes, got {s.shape}")
    if np.any(np.abs(s) > 1 + 1e-12):
        raise ValueError("Rotation amplitudes must lie in [-1, 1]")
    reg.check_qubit(target)
    if target in control.qubits:
        raise RegisterError(f"Target qubit {target} lies inside control {control_sub}")

    s = np.clip(s, -1.0, 1.0)
    c = np.sqrt(1.0 - s ** 2)
    k = reg.values(control_sub)
    state = reg.amplitudes
    partner = np.arange(reg.dimension) ^ (1 << (reg.qubit_count - 1 - target))
    reg.update(
        np.where(
            reg.bit(target) == 0,
            c[k] * state - s[k] * state[partner],
            s[k] * state[partner] + c[k] * state,
        )
    )
    reg.log.record("rotation", control.width, depth=control.width)
    return reg


def read_amplitude(reg: QubitRegister, index: int) -> complex:
    """Exact amplitude of one basis state; the register is left untouched."""
    if not 0 <= index < reg.dimension:
        raise RegisterError(f"Basis index {index} outside [0, {reg.dimension})")
    return complex(reg.amplitudes[index])
