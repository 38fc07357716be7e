"""Exception hierarchy shared by every jtmat module."""


class JtmatError(Exception):
    """Base class for all library errors."""


class InvalidInputError(JtmatError, ValueError):
    """Caller passed something that violates an operation's precondition."""


class NumericalDomainError(JtmatError, ArithmeticError):
    """Arithmetic left the domain of valid probability tables (x/0, all-zero mass)."""


class ParseError(InvalidInputError):
    """Malformed network, tree, catalog or query document."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class ValidationError(InvalidInputError):
    """A parsed network breaks one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class PreconditionError(JtmatError):
    """An internal call contract was violated by the caller (e.g. overlapping shortcuts)."""


class InternalError(JtmatError, RuntimeError):
    """An invariant that should hold by construction did not; indicates a bug."""
