"""Exception hierarchy shared by every module of the package."""


class CompactFDError(Exception):
    """Base class for all errors raised by compactfd."""


class GridError(CompactFDError, ValueError):
    pass


class InvalidExtentError(GridError):
    pass


class InvalidCountError(GridError):
    pass


class NodeIndexError(GridError, IndexError):
    pass


class ExprError(CompactFDError):
    pass


class ExprSyntaxError(ExprError):
    """Raised by the parser; carries the byte offset and the expected tokens."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class MissingVariableError(ExprError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"variable {name!r} is not assigned")

    def __str__(self):
        return self.args[0]


class DomainError(ExprError, ArithmeticError):
    pass


class NoFeasibleVariantError(CompactFDError):
    pass


class MissingPartialError(CompactFDError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing partial derivative {name!r}")

    def __str__(self):
        return self.args[0]


class NonPositiveKappaError(CompactFDError):
    pass


class MissingIterateError(CompactFDError):
    pass


class HistoryUnderflowError(CompactFDError):
    pass


class BundleMismatchError(CompactFDError):
    pass


class SolverError(CompactFDError):
    pass


class SingularMatrixError(SolverError):
    pass


class DivergenceError(SolverError):
    def __init__(self, message, residuals=()):
        self.residuals = list(residuals)
        super().__init__(message)


class StartupRatioError(CompactFDError):
    pass


class ConfigError(CompactFDError):
    pass
