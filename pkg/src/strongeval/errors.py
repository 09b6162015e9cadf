"""Exception types shared by the loaders, kernels and the CLI."""


class StrongEvalError(Exception):
    """Base class; the CLI maps subclasses onto exit codes."""

    exit_code = 1


class ParseError(StrongEvalError, ValueError):
    """Input text could not be parsed. Carries the source location when known."""

    exit_code = 3

    def __init__(self, message, *, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ", ".join(
            part
            for part in (
                None if source is None else str(source),
                None if line is None else f"line {line}",
                None if column is None else f"col {column}",
            )
            if part
        )
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(StrongEvalError, ValueError):
    """Input parsed but violates a data invariant."""

    exit_code = 2


class UnknownClassError(StrongEvalError, KeyError):
    """A class id is not present in the ontology."""

    exit_code = 2

    def __init__(self, class_id):
        self.class_id = class_id
        super().__init__(class_id)

    def __str__(self):
        return f"unknown class id {self.class_id!r}"


class UndefinedMetricError(StrongEvalError, ValueError):
    """A statistic is undefined for the given input (empty side, no positives...)."""

    exit_code = 2
