"""Measured gate counts per circuit family over a (precision, dimension) grid."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np
from scipy import stats

from ..linalg.matrix import Matrix
from ..quantum.determinant import run_determinant, system_width
from ..quantum.gates import apply_qft
from ..quantum.hhl import run_hhl
from ..quantum.register import DEFAULT_MAX_QUBITS, GateLog, allocate
from ..quantum.trace import BinaryEncodedDiagonal, run_trace
from .errors import QubitBudgetError

logger = logging.getLogger(__name__)

FAMILIES = ("qft", "trace", "determinant", "hhl")
COLUMNS = ["family", "n", "N", "qubits", "hadamard", "controlled_phase", "controlled_unitary", "rotation", "swap", "depth", "total"]

# Accumulator width of the trace circuit, held fixed across N so counts are comparable.
TRACE_WIDTH = 6


@dataclass
class SweepRow:
    family: str
    n: int
    N: int
    qubits: int
    log: GateLog

    def to_dict(self) -> Dict[str, int]:
        row = {"family": self.family, "n": self.n, "N": self.N, "qubits": self.qubits}
        row.update(self.log.snapshot())
        return row


def _qft_row(n: int, max_qubits: int) -> SweepRow:
    reg = allocate([("q", n)], max_qubits=max_qubits)
    apply_qft(reg, "q")
    return SweepRow("qft", n, 1, n, reg.log)


def _trace_row(n: int, size: int, max_qubits: int) -> SweepRow:
    diag = BinaryEncodedDiagonal.from_values([1] * size, accumulator_width=TRACE_WIDTH)
    return SweepRow("trace", n, size, TRACE_WIDTH, run_trace(diag, max_qubits=max_qubits).log)


def _determinant_row(n: int, size: int, max_qubits: int) -> SweepRow:
    run = run_determinant(Matrix.identity(size), n, max_qubits=max_qubits)
    return SweepRow("determinant", n, size, n + system_width(size) + 1, run.log)


def _hhl_row(n: int, size: int, max_qubits: int) -> SweepRow:
    rhs = np.zeros(size)
    rhs[0] = 1.0
    run = run_hhl(Matrix.identity(size), rhs, n, max_qubits=max_qubits)
    return SweepRow("hhl", n, size, n + system_width(size) + 1, run.log)


def gate_count_sweep(
    precisions: Sequence[int],
    dims: Sequence[int],
    families: Iterable[str] = FAMILIES,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> List[SweepRow]:
    """Run each circuit family at every grid point and collect its GateLog.

    The QFT row at precision n is the m = n transform; trace rows use a
    fixed accumulator width; determinant and HHL rows run on I_N.

    Raises:
        QubitBudgetError: if any grid point needs more than max_qubits
    """
    families = list(families)
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"Unknown circuit families: {', '.join(sorted(unknown))}")
    if not precisions or not dims:
        raise ValueError("Sweep grid is empty")

    for n in precisions:
        for size in dims:
            needed = max(n + system_width(size) + 1, size, TRACE_WIDTH)
            if needed > max_qubits:
                raise QubitBudgetError(f"Grid point n={n}, N={size} needs {needed} qubits, budget is {max_qubits}")

    rows: List[SweepRow] = []
    for n in precisions:
        if "qft" in families:
            rows.append(_qft_row(n, max_qubits))
        for size in dims:
            if "trace" in families:
                rows.append(_trace_row(n, size, max_qubits))
            if "determinant" in families:
                rows.append(_determinant_row(n, size, max_qubits))
            if "hhl" in families:
                rows.append(_hhl_row(n, size, max_qubits))
        logger.debug(f"Sweep precision n={n}: {len(rows)} rows so far")
    logger.info(f"Gate-count sweep: {len(rows)} rows over n={list(precisions)}, N={list(dims)}")
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_dict())
    return path


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(rows: Sequence[SweepRow], family: str, n: int) -> LinearFit:
    """Least-squares fit of total gate count against N for one family at precision n."""
    points = [(row.N, row.log.total) for row in rows if row.family == family and row.n == n]
    if len(points) < 2:
        raise ValueError(f"Need at least two {family} rows at n={n} to fit")
    x, y = zip(*points)
    if len(set(y)) == 1:
        return LinearFit(slope=0.0, intercept=float(y[0]), r_squared=1.0)
    fit = stats.linregress(x, y)
    return LinearFit(slope=float(fit.slope), intercept=float(fit.intercept), r_squared=float(fit.rvalue ** 2))
