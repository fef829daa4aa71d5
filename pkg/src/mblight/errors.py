"""Exception types shared across the package.

Plain ``ValueError`` is raised for malformed arguments (wrong lengths,
negative rates, out-of-range values); the classes below cover the cases a
caller may reasonably want to catch separately.
"""


class MblightError(Exception):
    """Base class for package-specific errors."""


class ConflictError(MblightError):
    """An entity with the same identifier is already registered."""


class NotFoundError(MblightError, LookupError):
    """A named entity (material, solver, writer, setup) does not exist."""


class ValidationError(MblightError):
    """A device/scenario combination failed validation.

    Carries the full list of problems so callers can report all of them
    at once instead of fixing one at a time.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class CorruptArchiveError(MblightError):
    """A result archive on disk is inconsistent with its metadata."""


class SolverError(MblightError):
    """The solver hit an unrecoverable state during a run."""
