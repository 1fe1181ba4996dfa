"""Exception hierarchy shared by all scr modules.

The CLI maps these onto exit codes (domain refusals exit 1, integrity and
I/O problems exit 3); the API server maps them onto HTTP statuses.
"""


class ScrError(Exception):
    """Base class for all domain errors raised by this package."""


class FormulaParseError(ScrError):
    """Malformed formula or address text. Carries the character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class IngestionError(ScrError):
    """Workbook document violates the interchange schema."""


class AnalysisError(ScrError):
    """An analysis precondition failed (e.g. reference outside grid bounds)."""


class ConfigError(ScrError):
    """Invalid configuration: bad rating bands, malformed rules, missing profile entries."""


class StateError(ScrError):
    """Workflow operation attempted from a state that does not permit it."""


class WorkflowValidationError(ScrError):
    """Review or submission payload fails workflow validation."""


class StalenessError(ScrError):
    """A report or review refers to a snapshot that is no longer the one under consideration."""


class NotFoundError(ScrError):
    """Requested entry, snapshot, change, or review does not exist."""


class ChainError(ScrError):
    """Change log is not chain-consistent (a result snapshot does not match the next base)."""


class IntegrityError(ScrError):
    """Stored bytes do not match their recorded digest, or an apply postcondition failed."""


class StoreLockError(ScrError):
    """The store's write lock is held by another process."""
