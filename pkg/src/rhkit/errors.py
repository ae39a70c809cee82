"""Exception hierarchy shared by every rhkit module."""


class RHError(Exception):
    """Base class for all errors raised by rhkit."""


class ParameterError(RHError, ValueError):
    """Unbound, missing or malformed parameter values."""


class StructuralError(RHError, ValueError):
    """Qubit indices or register sizes that do not fit together."""


class CapabilityError(RHError):
    """The request is valid but exceeds what the simulator will do."""


class UnsupportedGradientError(RHError):
    """A symbol enters a gate the shift rule cannot differentiate."""


class PositionError(RHError, ValueError):
    """No valid insertion position exists for a perturbation."""


class QasmError(RHError):
    """Syntax or semantic error in OpenQASM input."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)
