"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, data problems
exit 2, numerical failures exit 3.
"""


class CojumpError(Exception):
    """Base class for all package-specific errors."""


class DataError(CojumpError):
    """Malformed or invalid input data (tick files, config files)."""


class TickParseError(DataError):
    """A tick row could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class CalendarError(DataError):
    """Invalid calendar configuration or a timestamp outside any session."""


class SyncError(DataError):
    """Tick series cannot be synchronized (unsorted, empty, no overlap)."""


class TransformError(CojumpError):
    """Invalid wavelet transform request (depth, length, filter mismatch)."""


class EstimatorError(CojumpError):
    """Estimator preconditions violated (grid counts, sample sizes)."""


class NumericalError(CojumpError):
    """A computation degenerated (singular system, zero variance, non-PD matrix)."""
