"""
Pydantic models for numeric records, reports and request/response schemas.
"""

import math
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional

from app.config import settings


class ParseDiagnostic(BaseModel):
    """Position and hint for a malformed expression."""
    offset: int = Field(..., ge=0, description="Byte offset of the offending token")
    message: str
    expected: Optional[str] = Field(None, description="Token the parser was expecting")


class Interval(BaseModel):
    """Closed integration interval [a, b] with a < b."""
    model_config = ConfigDict(frozen=True)

    a: float
    b: float

    @model_validator(mode="after")
    def check_bounds(self) -> "Interval":
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("interval bounds must be finite")
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got [{self.a}, {self.b}]")
        return self

    @property
    def width(self) -> float:
        return self.b - self.a


class SignProfile(BaseModel):
    """Piecewise sign structure of a function on an interval."""
    model_config = ConfigDict(frozen=True)

    interval: Interval
    roots: List[float] = Field(default_factory=list, description="Interior roots, increasing")
    signs: List[Literal[-1, 1]] = Field(..., description="Sign of each segment between roots")
    negative_measure: float = Field(..., ge=0.0, description="Total length of negative segments")

    @model_validator(mode="after")
    def check_consistency(self) -> "SignProfile":
        a, b = self.interval.a, self.interval.b
        if any(not a < r < b for r in self.roots):
            raise ValueError("roots must lie strictly inside the interval")
        if any(r0 >= r1 for r0, r1 in zip(self.roots, self.roots[1:])):
            raise ValueError("roots must be strictly increasing")
        if len(self.signs) != len(self.roots) + 1:
            raise ValueError("one sign per segment is required")
        if any(s0 == s1 for s0, s1 in zip(self.signs, self.signs[1:])):
            raise ValueError("signs must alternate at every listed root")
        if self.negative_measure > self.interval.width * (1 + 1e-12):
            raise ValueError("negative measure exceeds the interval length")
        return self

    def segments(self) -> List[Interval]:
        """Sub-intervals between consecutive roots."""
        edges = [self.interval.a, *self.roots, self.interval.b]
        return [Interval(a=lo, b=hi) for lo, hi in zip(edges, edges[1:])]


class ComplexScalar(BaseModel):
    """Complex result of a signed product integral or geometric mean."""
    model_config = ConfigDict(frozen=True)

    re: float
    im: float

    @field_validator("re", "im")
    @classmethod
    def check_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("complex components must be finite")
        return value

    @classmethod
    def from_complex(cls, value: complex) -> "ComplexScalar":
        return cls(re=value.real, im=value.imag)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


class QuadratureRule(BaseModel):
    """Gauss–Legendre rule parameters; defaults come from settings."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["gauss", "adaptive"] = Field(default_factory=lambda: settings.quad_kind)
    order: int = Field(default_factory=lambda: settings.quad_order, ge=1)
    cells: int = Field(default=1, ge=1, description="Equal cells of the fixed rule")
    budget: int = Field(default_factory=lambda: settings.quad_budget, ge=1)
    tolerance: float = Field(default_factory=lambda: settings.quad_tolerance, gt=0.0)

    def as_adaptive(self) -> "QuadratureRule":
        return self.model_copy(update={"kind": "adaptive"})


class ResidualReport(BaseModel):
    """Diagnostic comparison of two log-coefficient tables."""
    max_residual: float = Field(..., ge=0.0)
    worst_slot: Optional[str] = Field(None, description="Slot where the residual peaks")
    worst_point: Optional[List[float]] = None
    point_count: int


class SimplexBreakdown(BaseModel):
    """Per-simplex contribution to a Stokes comparison (log side)."""
    weight: float
    vertices: List[List[float]]
    log_boundary: float
    log_interior: float
    log_discrepancy: float = Field(..., ge=0.0)


class StokesReport(BaseModel):
    """Both sides of the product-form Stokes theorem for one chain."""
    lhs: float = Field(..., gt=0.0, description="Product integral of the form over the boundary")
    rhs: float = Field(..., gt=0.0, description="Product integral of q(form) over the chain")
    log_lhs: float
    log_rhs: float
    log_discrepancy: float = Field(..., ge=0.0)
    breakdown: List[SimplexBreakdown] = Field(default_factory=list)


class ProofIdentityReport(BaseModel):
    """Three-way comparison on the standard simplex: both Stokes sides and the closed form."""
    lhs: float = Field(..., gt=0.0)
    rhs: float = Field(..., gt=0.0)
    closed_form: float = Field(..., gt=0.0)
    lhs_rhs: float = Field(..., ge=0.0)
    lhs_closed: float = Field(..., ge=0.0)
    rhs_closed: float = Field(..., ge=0.0)

    @property
    def max_discrepancy(self) -> float:
        return max(self.lhs_rhs, self.lhs_closed, self.rhs_closed)


class ErrorInfo(BaseModel):
    """Error half of an output envelope."""
    kind: str
    message: str
    exit_code: int
    diagnostic: Optional[ParseDiagnostic] = None


class OutputEnvelope(BaseModel):
    """Single result document emitted per command."""
    command: str = Field(..., description="Echo of the command and its arguments")
    status: Literal["ok", "error"]
    result: Optional[Any] = None
    error: Optional[ErrorInfo] = None
    diagnostics: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_exclusive(self) -> "OutputEnvelope":
        if self.status == "ok" and (self.result is None or self.error is not None):
            raise ValueError("an ok envelope carries a result and no error")
        if self.status == "error" and (self.error is None or self.result is not None):
            raise ValueError("an error envelope carries an error and no result")
        return self

    @property
    def exit_code(self) -> int:
        return 0 if self.error is None else self.error.exit_code


# HTTP request bodies (mirror the CLI flags)

class RuleOptions(BaseModel):
    """Optional quadrature overrides."""
    order: Optional[int] = Field(None, ge=1)
    tol: Optional[float] = Field(None, gt=0.0)
    budget: Optional[int] = Field(None, ge=1)


class PderivRequest(BaseModel):
    f: str = Field(..., min_length=1, description="Function of x1")
    x: float


class PintRequest(RuleOptions):
    f: str = Field(..., min_length=1)
    a: float
    b: float
    signed: bool = False


class GeomeanRequest(RuleOptions):
    f: str = Field(..., min_length=1)
    a: float
    b: float


class VintRequest(RuleOptions):
    g: str = Field(..., min_length=1)
    a: float
    b: float


class QdiffRequest(BaseModel):
    form: str = Field(..., min_length=1, description='Form spec, e.g. "dx1:exp(x1*x2)"')
    n: int = Field(..., ge=1)
    at: Optional[List[float]] = None


class WedgeRequest(BaseModel):
    left: str
    right: str
    n: int = Field(..., ge=1)
    at: Optional[List[float]] = None


class StokesRequest(RuleOptions):
    form: str = Field(..., min_length=1)
    n: int = Field(..., ge=1)
    chain: str = Field(..., min_length=1, description='Chain spec, e.g. "1*[(0,0),(1,0),(0,1)]"')


class HealthResponse(BaseModel):
    """Health check response."""
    status: str
    version: str
    quad_order: int
    quad_tolerance: float


class FormResult(BaseModel):
    """Coefficient table of a product form, optionally evaluated at a point."""
    degree: int
    dimension: int
    coefficients: Dict[str, str] = Field(..., description="Slot label -> coefficient expression")
    values: Optional[Dict[str, float]] = Field(None, description="Slot label -> numeric coefficient")
