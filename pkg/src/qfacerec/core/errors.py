"""Exception hierarchy for qfacerec.

Every error carries the process exit code the CLI reports for it.
"""

import warnings


class QFaceRecError(Exception):
    """Base class for all qfacerec errors."""

    exit_code = 1


class ConfigError(QFaceRecError, ValueError):
    """Invalid pipeline configuration."""

    exit_code = 3


class ImageReadError(QFaceRecError, OSError):
    """An input image could not be read or decoded."""

    exit_code = 4


class QubitBudgetError(QFaceRecError, ValueError):
    """A register or sweep would exceed the simulator qubit budget."""

    exit_code = 5


class SpectrumRangeError(QFaceRecError, ValueError):
    """An eigenvalue falls outside the phase-register range."""

    exit_code = 6


class PhaseWraparoundError(SpectrumRangeError):
    """Eigenphase of the evolution operator wraps past 2π."""


class ConditionNumberError(SpectrumRangeError):
    """Condition ratio exceeds the configured cap."""


class SingularMatrixError(QFaceRecError, ValueError):
    """Matrix is numerically singular."""

    exit_code = 7


class NonHermitianError(QFaceRecError, ValueError):
    """A hermitian matrix was required."""

    exit_code = 7


class NonUnitaryError(QFaceRecError, ValueError):
    """A unitary matrix was required."""

    exit_code = 7


class DimensionMismatchError(QFaceRecError, ValueError):
    """Operand shapes do not agree."""

    exit_code = 7


class RegisterError(QFaceRecError, ValueError):
    """Unknown sub-register, bad qubit index or bad layout."""

    exit_code = 8


class RegisterOverflowError(RegisterError):
    """A value does not fit in the target register."""


class DegenerateSolveError(QFaceRecError, ArithmeticError):
    """Post-selected branch of a linear solve has vanishing amplitude."""

    exit_code = 8


class DeterminantUnderflowError(QFaceRecError, ArithmeticError):
    """Determinant too small (or non-positive) to take a logarithm."""

    exit_code = 8


class SelfTestFailure(QFaceRecError):
    """One or more selftest checks failed."""

    exit_code = 9


class AmplitudeUnderflowWarning(UserWarning):
    """Product-register amplitude is below the readout floor."""

    def __init__(self, message: str, amplitude: complex):
        super().__init__(message)
        self.amplitude = amplitude


def warn_underflow(amplitude: complex, floor: float) -> None:
    """Emit an AmplitudeUnderflowWarning carrying the raw amplitude."""
    warnings.warn(
        AmplitudeUnderflowWarning(
            f"product amplitude {abs(amplitude):.3e} below readout floor {floor:.0e}",
            amplitude,
        ),
        stacklevel=3,
    )
