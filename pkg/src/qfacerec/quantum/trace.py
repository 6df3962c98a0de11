"""Fourier-basis adder and the chained trace circuit."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import RegisterError, RegisterOverflowError
from .gates import apply_qft, qft_matrix
from .register import DEFAULT_MAX_QUBITS, GateLog, QubitRegister, allocate

logger = logging.getLogger(__name__)

ACCUMULATOR = "acc"
DEFAULT_FRACTION_BITS = 8


@dataclass(frozen=True)
class BinaryEncodedDiagonal:
    """Non-negative integer diagonal with per-element and accumulator widths."""

    values: Tuple[int, ...]
    width: int
    accumulator_width: Optional[int] = None

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise RegisterError("Diagonal is empty")
        if self.width < 1:
            raise RegisterError(f"Element width must be >= 1, got {self.width}")
        for v in values:
            if v < 0 or v >= 2 ** self.width:
                raise RegisterOverflowError(f"Element {v} not encodable in {self.width} bits")

        minimum = self.min_accumulator_width
        if self.accumulator_width is None:
            object.__setattr__(self, "accumulator_width", minimum)
        elif self.accumulator_width < minimum:
            raise RegisterOverflowError(
                f"Accumulator width {self.accumulator_width} below minimum {minimum} for N={len(values)}"
            )

    @classmethod
    def from_values(cls, values: Sequence[int], accumulator_width: Optional[int] = None) -> "BinaryEncodedDiagonal":
        """Encode with the narrowest element width that holds every value."""
        width = max(1, max(int(v).bit_length() for v in values)) if len(values) else 1
        return cls(tuple(values), width, accumulator_width)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def min_accumulator_width(self) -> int:
        return self.width + math.ceil(math.log2(len(self.values)))


def phi_encode(a: int, width: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> QubitRegister:
    """Fresh register holding |Φ(a)⟩ = QFT|a⟩."""
    if a < 0 or a >= 2 ** width:
        raise RegisterOverflowError(f"{a} does not fit in {width} bits")
    reg = allocate([(ACCUMULATOR, width)], max_qubits=max_qubits)
    reg.set_basis(ACCUMULATOR, a)
    return apply_qft(reg, ACCUMULATOR)


def _peek_value(reg: QubitRegister, sub: str) -> int:
    """Most likely decoded value of a Fourier register, without touching it."""
    width = reg.sub(sub).width
    decoded = np.einsum("ij,ajb->aib", qft_matrix(width, inverse=True), reg.view(sub))
    return int(np.argmax(np.sum(np.abs(decoded) ** 2, axis=(0, 2))))


def adder_sigma(a: int, phi_b: QubitRegister, sub: str = ACCUMULATOR) -> QubitRegister:
    """In-place |Φ(b)⟩ → |Φ(a+b)⟩ using phase rotations controlled by the bits of a.

    Qubit j of the Fourier register picks up e^{2πi·a·2^(w-1-j)/2^w}; the log
    records the w(w+1)/2 controlled-phase gates of the bitwise decomposition.
    """
    target = phi_b.sub(sub)
    width = target.width
    if a < 0:
        raise RegisterOverflowError(f"Adder operand must be non-negative, got {a}")
    b = _peek_value(phi_b, sub)
    if a + b >= target.size:
        raise RegisterOverflowError(f"{a} + {b} overflows the {width}-qubit accumulator")

    k = phi_b.values(sub)
    phi_b.update(phi_b.amplitudes * np.exp(2j * np.pi * a * k / target.size))
    phi_b.log.record("controlled_phase", width * (width + 1) // 2, depth=width)
    return phi_b


@dataclass
class TraceRun:
    """Outcome of one trace circuit."""

    diagonal: BinaryEncodedDiagonal
    value: int
    amplitude: complex
    log: GateLog = field(default_factory=GateLog)


def run_trace(diag: BinaryEncodedDiagonal, max_qubits: int = DEFAULT_MAX_QUBITS) -> TraceRun:
    """Chain N-1 adders onto Φ(a_11), invert the transform and read the basis state."""
    reg = phi_encode(diag.values[0], diag.accumulator_width, max_qubits=max_qubits)
    for a in diag.values[1:]:
        adder_sigma(a, reg)
    apply_qft(reg, ACCUMULATOR, inverse=True)

    value = int(np.argmax(np.abs(reg.amplitudes)))
    amplitude = complex(reg.amplitudes[value])
    if abs(amplitude) < 1 - 1e-9:
        raise RegisterError(f"Trace register is not a basis state (peak amplitude {abs(amplitude):.6f})")
    logger.debug(f"Trace of {diag.size} elements = {value} ({reg.log.controlled_phase} controlled phases)")
    return TraceRun(diagonal=diag, value=value, amplitude=amplitude, log=reg.log)


def trace_quantum(diag: BinaryEncodedDiagonal) -> int:
    return run_trace(diag).value


@dataclass(frozen=True)
class FixedPointDiagonal:
    """Real diagonal scaled by 2^f, rounded and shifted to be non-negative."""

    encoded: BinaryEncodedDiagonal
    fraction_bits: int
    offset: int

    def decode(self, total: int) -> float:
        return (total - self.encoded.size * self.offset) / 2 ** self.fraction_bits

    @property
    def quantization_bound(self) -> float:
        return self.encoded.size * 2.0 ** (-self.fraction_bits - 1)


def encode_fixed_point(
    values: Sequence[float],
    fraction_bits: int = DEFAULT_FRACTION_BITS,
    offset: Optional[int] = None,
    accumulator_width: Optional[int] = None,
) -> FixedPointDiagonal:
    """Fixed-point encode a real diagonal for the trace circuit.

    Args:
        values: real diagonal entries
        fraction_bits: f, the number of fractional bits
        offset: integer added to every scaled entry; defaults to the
            smallest offset that makes all entries non-negative
        accumulator_width: optional explicit accumulator width
    """
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag)) > 1e-9:
            raise ValueError("Trace circuit takes real diagonals only")
        arr = arr.real
    scaled = np.rint(arr.astype(float) * 2 ** fraction_bits).astype(np.int64)
    if offset is None:
        offset = max(0, int(-scaled.min()))
    elif offset < 0:
        raise ValueError(f"Offset must be non-negative, got {offset}")
    shifted = scaled + offset
    if shifted.min() < 0:
        raise RegisterOverflowError(f"Offset {offset} leaves negative entries")
    encoded = BinaryEncodedDiagonal.from_values([int(v) for v in shifted], accumulator_width)
    return FixedPointDiagonal(encoded=encoded, fraction_bits=fraction_bits, offset=offset)


@dataclass
class FixedPointTrace:
    value: float
    bound: float
    raw: int
    log: GateLog


def trace_fixed_point(
    values: Sequence[float],
    fraction_bits: int = DEFAULT_FRACTION_BITS,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> FixedPointTrace:
    """Trace of a real diagonal through the quantum circuit.

    The decoded value is within N·2^(-f-1) of the exact sum.
    """
    fixed = encode_fixed_point(values, fraction_bits)
    run = run_trace(fixed.encoded, max_qubits=max_qubits)
    return FixedPointTrace(
        value=fixed.decode(run.value),
        bound=fixed.quantization_bound,
        raw=run.value,
        log=run.log,
    )
