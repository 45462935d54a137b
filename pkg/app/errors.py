"""
Exception hierarchy shared by the calculus modules, the CLI and the HTTP API.
Each class carries the process exit code the CLI reports for it.
"""

from typing import Optional

from app.models import ParseDiagnostic


class ProdCalcError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 2

    @property
    def kind(self) -> str:
        return type(self).__name__


# Usage errors (exit 1)

class UsageError(ProdCalcError):
    """Malformed command line or request."""
    exit_code = 1


class ParseError(UsageError):
    """Expression text does not match the grammar."""

    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(
            f"{diagnostic.message} at offset {diagnostic.offset}"
            + (f" (expected {diagnostic.expected})" if diagnostic.expected else "")
        )
        self.diagnostic = diagnostic


class FormSpecError(UsageError):
    """Textual form, simplex or chain notation is malformed."""


# Domain / math errors (exit 2)

class DomainError(ProdCalcError):
    """An expression was evaluated outside its real domain."""


class NonPositiveIntegrand(DomainError):
    """A geometric integrand took a value <= 0; use the signed variant."""


class PositivityViolation(DomainError):
    """A product-form coefficient evaluated to a value <= 0."""


class DegenerateSign(DomainError):
    """The integrand vanishes on a whole sub-segment."""


class DegeneratePartition(DomainError):
    """A Volterra factor 1 + g(c_k) * delta_k is not positive."""


class ShapeMismatch(ProdCalcError):
    """Operands disagree in dimension or degree."""


class DegreeOverflow(ShapeMismatch):
    """The resulting degree would exceed the ambient dimension."""


class DegreeUnderflow(ShapeMismatch):
    """The boundary of a 0-simplex was requested."""


class DegenerateSimplex(ProdCalcError):
    """Simplex edge vectors are linearly dependent."""

    def __init__(self, message: str, gram: Optional[float] = None):
        super().__init__(message)
        self.gram = gram


# Convergence errors (exit 3)

class BudgetExhausted(ProdCalcError):
    """Adaptive quadrature ran out of cells or could not resolve a cell."""
    exit_code = 3


class NonIntegrableSingularity(BudgetExhausted):
    """ln|f| could not be integrated across a root of f."""
