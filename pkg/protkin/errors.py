"""
Exception hierarchy. Every error raised on purpose by protkin derives from
ProtkinError and carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4


class ProtkinError(Exception):
    exit_code: int = EXIT_DATA

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InputError(ProtkinError):
    """Malformed or inconsistent input values (shapes, residue codes, empty sets)."""


class DomainError(ProtkinError):
    """A value lies outside the mathematical domain of an operation."""


class ParseError(ProtkinError):
    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class TopologyError(ProtkinError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid topology: " + "; ".join(violations))
        self.violations = violations


class FormatError(ProtkinError):
    pass


class DegenerateError(ProtkinError):
    pass


class EvaluationError(ProtkinError):
    pass


class UsageError(ProtkinError):
    exit_code = EXIT_USAGE
