"""Exception types raised across the package."""


class InvdimError(Exception):
    """Base class for all package errors."""

    module = "invdim"

    def tagged(self) -> str:
        return f"[{self.module}] {self}"


class InvalidInputError(InvdimError, ValueError):
    module = "input"


class DimensionMismatchError(InvalidInputError):
    module = "linalg"


class UnsupportedOperationError(InvdimError):
    module = "systems"


class SamplerError(InvdimError):
    module = "systems"

    def __init__(self, message, escape_point=None):
        super().__init__(message)
        self.escape_point = escape_point


class InsufficientScalesError(InvdimError):
    module = "boxdim"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OrbitEscapeError(InvdimError):
    module = "bounds"


class NearCriticalValueError(InvdimError):
    module = "bounds"
