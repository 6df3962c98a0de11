"""Statevector register partitioned into named sub-registers.

Qubit 0 is the most significant bit of the basis index, and within a
sub-register the first qubit is the most significant bit of its value.
"""

import logging
from dataclasses import dataclass, field, fields
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from ..core.errors import QubitBudgetError, RegisterError, RegisterOverflowError

logger = logging.getLogger(__name__)

DEFAULT_MAX_QUBITS = 20
NORM_TOL = 1e-10


@dataclass(frozen=True)
class SubRegister:
    """A named contiguous block of qubits."""

    name: str
    offset: int
    width: int

    @property
    def size(self) -> int:
        return 2 ** self.width

    @property
    def qubits(self) -> range:
        return range(self.offset, self.offset + self.width)


@dataclass
class GateLog:
    """Gate counters per family plus a sequential depth estimate."""

    hadamard: int = 0
    controlled_phase: int = 0
    controlled_unitary: int = 0
    rotation: int = 0
    swap: int = 0
    depth: int = 0

    FAMILIES = ("hadamard", "controlled_phase", "controlled_unitary", "rotation", "swap")

    def record(self, family: str, count: int = 1, depth: int = 1) -> None:
        if family not in self.FAMILIES:
            raise ValueError(f"Unknown gate family: {family}")
        if count < 0 or depth < 0:
            raise ValueError("Gate counts only grow")
        setattr(self, family, getattr(self, family) + count)
        self.depth += depth

    def merge(self, other: "GateLog") -> "GateLog":
        """Add another log's counters into this one."""
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    @property
    def total(self) -> int:
        return sum(getattr(self, family) for family in self.FAMILIES)

    def snapshot(self) -> Dict[str, int]:
        data = {family: getattr(self, family) for family in self.FAMILIES}
        data["depth"] = self.depth
        data["total"] = self.total
        return data


class QubitRegister:
    """2^m complex amplitudes over a tiled layout of sub-registers.

    Starts in |0…0⟩. Gates replace `amplitudes` through `update()`, which
    checks normalization when debug checking is on.
    """

    def __init__(
        self,
        layout: Sequence[Tuple[str, int]],
        max_qubits: int = DEFAULT_MAX_QUBITS,
        debug: bool = None,
    ):
        """Initialize register.

        Args:
            layout: (name, width) pairs in qubit order
            max_qubits: simulator qubit budget
            debug: check the norm after every gate; defaults to DEBUG logging
        """
        self.subs: Dict[str, SubRegister] = {}
        offset = 0
        for name, width in layout:
            if name in self.subs:
                raise RegisterError(f"Duplicate sub-register name: {name}")
            if width < 1:
                raise RegisterError(f"Sub-register {name} needs width >= 1, got {width}")
            self.subs[name] = SubRegister(name, offset, int(width))
            offset += int(width)

        if offset == 0:
            raise RegisterError("Register layout is empty")
        if offset > max_qubits:
            raise QubitBudgetError(f"Register needs {offset} qubits, budget is {max_qubits}")

        self.qubit_count = offset
        self.amplitudes = np.zeros(2 ** offset, dtype=complex)
        self.amplitudes[0] = 1.0
        self.log = GateLog()
        self.debug = logger.isEnabledFor(logging.DEBUG) if debug is None else debug

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def layout(self) -> List[SubRegister]:
        return list(self.subs.values())

    def sub(self, name: str) -> SubRegister:
        try:
            return self.subs[name]
        except KeyError:
            raise RegisterError(f"Unknown sub-register: {name}") from None

    def qubit(self, name: str) -> int:
        """Global index of a width-1 sub-register."""
        sub = self.sub(name)
        if sub.width != 1:
            raise RegisterError(f"Sub-register {name} has width {sub.width}, expected 1")
        return sub.offset

    def check_qubit(self, qubit: int) -> int:
        if not 0 <= qubit < self.qubit_count:
            raise RegisterError(f"Qubit {qubit} outside register of {self.qubit_count} qubits")
        return qubit

    def bit(self, qubit: int) -> np.ndarray:
        """Value of one qubit for every basis index."""
        shift = self.qubit_count - 1 - self.check_qubit(qubit)
        return (np.arange(self.dimension) >> shift) & 1

    def values(self, name: str) -> np.ndarray:
        """Value of a sub-register for every basis index."""
        sub = self.sub(name)
        shift = self.qubit_count - sub.offset - sub.width
        return (np.arange(self.dimension) >> shift) & (sub.size - 1)

    def view(self, name: str) -> np.ndarray:
        """Amplitudes reshaped to (before, sub, after) axes."""
        sub = self.sub(name)
        before = 2 ** sub.offset
        after = 2 ** (self.qubit_count - sub.offset - sub.width)
        return self.amplitudes.reshape(before, sub.size, after)

    def update(self, amplitudes: np.ndarray) -> "QubitRegister":
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != self.dimension:
            raise RegisterError(f"Expected {self.dimension} amplitudes, got {amplitudes.shape[0]}")
        if self.debug:
            drift = abs(np.linalg.norm(amplitudes) - 1.0)
            if drift > NORM_TOL:
                raise RegisterError(f"Norm drifted by {drift:.3e} after gate")
        self.amplitudes = amplitudes
        return self

    def prepare(self, name: str, vector: Union[np.ndarray, Sequence[complex]]) -> "QubitRegister":
        """Load a normalized state into a sub-register currently holding |0⟩."""
        sub = self.sub(name)
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if v.shape[0] > sub.size:
            raise RegisterOverflowError(f"Vector of length {v.shape[0]} does not fit in {name} ({sub.size})")
        padded = np.zeros(sub.size, dtype=complex)
        padded[: v.shape[0]] = v
        norm = np.linalg.norm(padded)
        if abs(norm - 1.0) > 1e-9:
            raise RegisterError(f"State for {name} is not normalized (norm {norm:.6g})")

        state = self.view(name)
        if np.any(np.abs(state[:, 1:, :]) > 1e-12):
            raise RegisterError(f"Sub-register {name} is not in |0⟩")
        rest = state[:, 0, :]
        return self.update(rest[:, None, :] * padded[None, :, None])

    def set_basis(self, name: str, value: int) -> "QubitRegister":
        sub = self.sub(name)
        if not 0 <= value < sub.size:
            raise RegisterOverflowError(f"Value {value} does not fit in {sub.width}-qubit {name}")
        basis = np.zeros(sub.size, dtype=complex)
        basis[value] = 1.0
        return self.prepare(name, basis)

    def sub_values(self, name: str) -> np.ndarray:
        """Marginal probability of every value of a sub-register."""
        return np.sum(np.abs(self.view(name)) ** 2, axis=(0, 2))

    def probability_of(self, name: str, value: int) -> float:
        sub = self.sub(name)
        if not 0 <= value < sub.size:
            raise RegisterOverflowError(f"Value {value} does not fit in {name}")
        return float(self.sub_values(name)[value])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "QubitRegister":
        clone = QubitRegister.__new__(QubitRegister)
        clone.subs = dict(self.subs)
        clone.qubit_count = self.qubit_count
        clone.amplitudes = self.amplitudes.copy()
        clone.log = GateLog().merge(self.log)
        clone.debug = self.debug
        return clone

    def __iter__(self) -> Iterator[SubRegister]:
        return iter(self.subs.values())

    def __repr__(self):
        parts = ", ".join(f"{s.name}[{s.width}]" for s in self.subs.values())
        return f"QubitRegister({parts})"


def allocate(layout: Sequence[Tuple[str, int]], max_qubits: int = DEFAULT_MAX_QUBITS) -> QubitRegister:
    """Fresh |0…0⟩ register for a (name, width) layout."""
    reg = QubitRegister(layout, max_qubits=max_qubits)
    logger.debug(f"Allocated {reg!r} ({reg.qubit_count} qubits)")
    return reg


def fidelity(a: Union[QubitRegister, np.ndarray], b: Union[QubitRegister, np.ndarray]) -> float:
    """|⟨a|b⟩|, ignoring global phase."""
    va = a.amplitudes if isinstance(a, QubitRegister) else np.asarray(a, dtype=complex)
    vb = b.amplitudes if isinstance(b, QubitRegister) else np.asarray(b, dtype=complex)
    if va.shape != vb.shape:
        raise RegisterError(f"Cannot compare states of shape {va.shape} and {vb.shape}")
    return float(abs(np.vdot(va, vb)))
