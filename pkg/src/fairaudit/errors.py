"""Exception hierarchy.  Each family carries the CLI exit code it maps to."""
from __future__ import annotations


class FairAuditError(Exception):
    exit_code = 1


class SchemaError(FairAuditError):
    """A required column is missing from the input header."""

    exit_code = 2

    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"missing column: {column!r}")


class DataError(FairAuditError):
    exit_code = 3


class RowError(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class EmptyDatasetError(DataError):
    pass


class DomainError(DataError, ValueError):
    pass


class TrainingError(DataError):
    pass


class GenerationError(DataError):
    pass


class EmbeddingFormatError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class WordLookupError(DataError, KeyError):
    def __init__(self, word: str):
        self.word = word
        super().__init__(f"word not in embedding table: {word!r}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class UndefinedCosineError(DataError):
    pass


class EmptyReportError(DataError):
    pass


class DegenerateDirectionError(DataError):
    pass


class ConfigError(FairAuditError, ValueError):
    exit_code = 4


class IntegrityError(FairAuditError):
    exit_code = 5


class ReplicationMismatch(FairAuditError):
    exit_code = 6
