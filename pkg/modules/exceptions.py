class HardnetError(Exception):
    """
    Base class for every error raised by the reduction library
    """


class InvalidParameterError(HardnetError, ValueError):
    pass


class DomainError(HardnetError, ValueError):
    """
    Raised when a function defined only on hyperedge encodings receives something else
    """


class BoundViolationError(HardnetError):
    """
    A built network has a parameter magnitude above n^3, meaning n is below the regime floor
    """
    def __init__(self, n: int, magnitude: float):
        self.n = n
        self.magnitude = magnitude
        super().__init__(f"parameter magnitude {magnitude:.6g} exceeds n^3 = {n ** 3} for n={n}")


class OracleDepletedError(HardnetError):
    pass


class MissingMetadataError(HardnetError):
    pass


class SecretAbsentError(HardnetError):
    pass


class EmptyHoldoutError(HardnetError, ValueError):
    pass


class SingularSystemError(HardnetError):
    pass


class ConfigError(HardnetError):
    """
    Configuration problem with an optional field name and source line for diagnostics
    """
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        super().__init__(message)

    def diagnostic(self) -> str:
        location = []
        if self.line is not None:
            location.append(f"line {self.line}")
        if self.field is not None:
            location.append(f"field '{self.field}'")
        prefix = ', '.join(location)
        return f"{prefix}: {self}" if prefix else str(self)
