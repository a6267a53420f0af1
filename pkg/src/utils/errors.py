"""
KernelTestLab - Error Types
Exception hierarchy shared by the library and the CLI
"""

from typing import Optional

# CLI exit codes
EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_DATA_ERROR = 3


class KernelTestError(Exception):
    """Base class for all KernelTestLab errors."""
    exit_code: int = EXIT_INVALID_CONFIG


class InvalidParameterError(KernelTestError, ValueError):
    """A numeric parameter (nu, alpha, B, points, ...) is out of range."""


class InvalidConfigError(KernelTestError, ValueError):
    """An option combination cannot be run."""


class InvalidSettingError(KernelTestError, ValueError):
    """Experiment generator parameters are outside their family."""


class InvalidSpecError(KernelTestError, ValueError):
    """A perturbation spec would give a negative or non-normalized density."""


class InvalidLayoutError(KernelTestError, ValueError):
    """Block widths do not match the sample dimension."""


class UnsupportedSizeError(KernelTestError, ValueError):
    """Problem size beyond what the enumeration supports."""


class InvalidInputError(KernelTestError, ValueError):
    """Data is malformed: non-finite entries, wrong shape, mismatched dimensions."""
    exit_code = EXIT_DATA_ERROR


class SampleTooSmallError(InvalidInputError):
    """Too few observations for the requested distinct-index sum."""


class DegenerateSampleError(InvalidInputError):
    """All pairwise distances vanish, so no data-driven scaling exists."""


class InvalidReferenceError(InvalidInputError):
    """The null reference model cannot be used."""


class CalibrationUnavailableError(KernelTestError):
    """The reference model cannot produce fresh null samples."""


class DataParseError(InvalidInputError):
    """CSV content could not be parsed."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateRegressorError(InvalidInputError):
    """A regression parent has no spread, so no bandwidth can be chosen."""


class GridEvaluationError(KernelTestError):
    """A statistic failed at one scaling value of an adaptive grid."""

    def __init__(self, nu: float, cause: Exception):
        super().__init__(f"statistic failed at nu={nu:.6g}: {cause}")
        self.nu = nu
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', EXIT_INVALID_CONFIG)
