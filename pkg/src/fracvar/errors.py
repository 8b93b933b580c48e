"""Exception hierarchy shared by every fracvar module."""


class FracvarError(Exception):
    """Base class for all library errors."""


# special functions

class PoleError(FracvarError, ValueError):
    """Gamma evaluated at zero or a negative integer."""


class ConvergenceError(FracvarError, ArithmeticError):
    """A series did not meet its stopping rule within the term budget."""


# expressions

class ExprSyntaxError(FracvarError, ValueError):
    """Malformed expression text. ``offset`` is the byte offset of the fault."""

    def __init__(self, message, offset=0, text=""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at byte {offset})")


class UnknownVariableError(ExprSyntaxError):
    pass


class NonLiteralExponentError(ExprSyntaxError):
    pass


class DomainError(FracvarError, ValueError):
    """A value outside the domain of an operation (e.g. negative base, real exponent)."""


class MissingVariableError(FracvarError, KeyError):
    pass


class ExponentDomainError(DomainError):
    """Fractional power rule applied to an exponent <= -1."""


# forms

class GradeError(FracvarError, ValueError):
    pass


# equation derivation; the CLI maps these to exit code 3

class DerivationError(FracvarError):
    pass


class DegenerateLagrangianError(DerivationError):
    pass


class NonInvertibleMomentumError(DerivationError):
    pass


class CompositeLhsError(DerivationError):
    pass


class JetOrderError(DerivationError):
    pass


# numerical integration; the CLI maps these to exit code 4

class IntegrationError(FracvarError):
    """Raised during time stepping. ``trajectory`` holds the nodes computed so far."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class SingularMomentumError(IntegrationError, DomainError):
    pass


class BlowupError(IntegrationError):
    pass


class RhsDomainError(IntegrationError, DomainError):
    """The right-hand side left its real domain mid-trajectory."""


class CompileError(FracvarError):
    pass
