"""Spectrum conditioning for phase-register encodings."""

import math
from typing import Sequence

import numpy as np

from ..core.errors import SpectrumRangeError


def phase_range(n: int, signed: bool = False) -> float:
    """Exclusive upper bound on |λ| a phase register of n bits can hold."""
    return float(2 ** (n - 1) if signed else 2 ** n)


def condition_spectrum(eigenvalues: Sequence[float], n: int, signed: bool = False) -> float:
    """Largest power-of-two scale keeping every scaled eigenvalue inside the register.

    The scaled spectrum satisfies s·max|λ| <= limit - 1 where limit is 2^n
    (unsigned) or 2^(n-1) (signed). Power-of-two scales keep dyadic
    eigenvalues exactly representable.

    Raises:
        SpectrumRangeError: for a zero spectrum, or a non-positive eigenvalue when unsigned
    """
    values = np.asarray(eigenvalues, dtype=float)
    if not signed and np.any(values <= 0):
        raise SpectrumRangeError(f"Unsigned encoding needs positive eigenvalues, min is {values.min():.3g}")
    top = float(np.max(np.abs(values)))
    if top == 0:
        raise SpectrumRangeError("Cannot condition an all-zero spectrum")
    room = phase_range(n, signed) - 1
    if room < 1:
        raise SpectrumRangeError(f"Precision n={n} leaves no room for the spectrum")
    return 2.0 ** math.floor(math.log2(room / top))


def require_in_range(eigenvalues: Sequence[float], n: int, signed: bool = False, tol: float = 1e-9) -> None:
    """Raise SpectrumRangeError unless every eigenvalue is encodable.

    Unsigned: 0 < λ < 2^n. Signed: 0 < |λ| < 2^(n-1).
    """
    limit = phase_range(n, signed)
    for lam in eigenvalues:
        magnitude = abs(lam) if signed else lam
        if magnitude <= tol or magnitude >= limit:
            bounds = f"0 < |λ| < {limit:g}" if signed else f"0 < λ < {limit:g}"
            raise SpectrumRangeError(f"Eigenvalue {lam:.6g} outside {bounds} for n={n}")
