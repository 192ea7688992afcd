"""Exception hierarchy shared across the package."""


class ParameterError(ValueError):
    """A numeric parameter violates an operation's precondition."""


class GridMismatchError(ValueError):
    """Arrays or fields live on incompatible grids."""


class ConfigError(ValueError):
    """Invalid run configuration. Carries the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line


class NumericalFailure(RuntimeError):
    """A stepper produced non-finite values (explicit substep out of its stability range)."""

    def __init__(self, message: str, time: float | None = None):
        if time is not None:
            message = f"{message} at t={time!r}"
        super().__init__(message)
        self.time = time


class FieldFileError(OSError):
    """Base class for unreadable field files."""


class FieldFormatError(FieldFileError):
    pass


class FieldTruncatedError(FieldFileError):
    pass


class FieldChecksumError(FieldFileError):
    pass
