# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Exception hierarchy with CLI exit codes
"""
Exceptions raised by the satisfaction toolkit.

Each class carries the process exit code the CLI returns for it.
"""
from typing import Optional, Sequence


class SatisfactionError(Exception):
    exit_code = 1


class ConfigError(SatisfactionError):
    exit_code = 2


class DataError(SatisfactionError):
    exit_code = 3


class SchemaError(DataError):
    """Malformed input row; names the row number and column."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.row = row
        self.column = column


class DuplicateKeyError(DataError):
    pass


class ClassificationError(DataError):
    pass


class AssemblyError(DataError):
    def __init__(self, message: str, columns: Sequence[str] = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class ContractError(SatisfactionError):
    """A caller broke an operation's precondition."""

    exit_code = 3


class ConvergenceError(SatisfactionError):
    exit_code = 4


class StageError(SatisfactionError):
    """Wraps the cause of a failed pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
