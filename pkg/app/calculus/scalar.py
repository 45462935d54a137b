"""
Single-variable multiplicative calculus.

Product derivative, geometric and Volterra product integrals, the
logarithmic derivative, and the complex-valued integrals and geometric means
of functions that change sign. All functions are expressions in x1.
"""

from __future__ import annotations

import cmath
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.calculus.expr import Abs, Div, Exp, Expr, Ln, diff, evaluate, evaluate_batch, simplify
from app.calculus.quad import integrate_interval
from app.config import settings
from app.errors import (
    BudgetExhausted,
    DegenerateSign,
    DegeneratePartition,
    DomainError,
    NonIntegrableSingularity,
    NonPositiveIntegrand,
    ShapeMismatch,
)
from app.models import ComplexScalar, Interval, QuadratureRule, SignProfile


def _univariate(f: Expr) -> Expr:
    if f.max_index > 1:
        raise ShapeMismatch(f"expected a function of x1, got {f}")
    return f


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        raise DomainError(f"exp({value!r}) overflows")


def _nonzero_value(f: Expr, point: Sequence[float]) -> float:
    value = evaluate(f, point)
    if value == 0.0:
        raise DomainError(f"{f} vanishes at {list(point)}")
    return value


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------

def log_derivative_expr(f: Expr) -> Expr:
    """f'/f as an expression."""
    return simplify(Div(diff(_univariate(f), 1), f))


def product_derivative_expr(f: Expr) -> Expr:
    """exp(f'/f) as an expression."""
    return simplify(Exp(log_derivative_expr(f)))


def log_derivative(f: Expr, x: float) -> float:
    """f'(x)/f(x)."""
    value = _nonzero_value(_univariate(f), [x])
    return evaluate(diff(f, 1), [x]) / value


def product_derivative(f: Expr, x: float) -> float:
    """
    Multiplicative derivative e^{f'(x)/f(x)}.

    f may be negative at x; only a zero of f is rejected.
    """
    return _exp(log_derivative(f, x))


def partial_product_derivative(f: Expr, var: int, point: Sequence[float]) -> float:
    """Partial multiplicative derivative of a field with respect to x<var>."""
    value = _nonzero_value(f, point)
    return _exp(evaluate(diff(f, var), point) / value)


def multiplicative_linearization(f: Expr, c: float, x: float) -> float:
    """f(c) * q f(c)^(x - c), the multiplicative tangent at c."""
    value = evaluate(_univariate(f), [c])
    if value <= 0.0:
        raise DomainError(f"multiplicative linearization needs f(c) > 0, got f({c}) = {value!r}")
    return value * product_derivative(f, c) ** (x - c)


# ---------------------------------------------------------------------------
# Product integrals of positive functions
# ---------------------------------------------------------------------------

def _log_integrand(f: Expr) -> Callable[[np.ndarray], np.ndarray]:
    logarithm = simplify(Ln(_univariate(f)))
    if not isinstance(logarithm, Ln):
        return lambda xs: evaluate_batch(logarithm, xs.reshape(-1, 1))

    def integrand(xs: np.ndarray) -> np.ndarray:
        values = evaluate_batch(f, xs.reshape(-1, 1))
        if np.any(values <= 0.0):
            bad = int(np.argmax(values <= 0.0))
            raise NonPositiveIntegrand(
                f"{f} is {values[bad]!r} at x1={xs[bad]!r}; use the signed product integral"
            )
        return np.log(values)

    return integrand


def geometric_integral(f: Expr, interval: Interval, rule: Optional[QuadratureRule] = None) -> float:
    """
    Geometric product integral e^{int_a^b ln f dx} of a positive function.

    Raises:
        NonPositiveIntegrand: f <= 0 at a quadrature node
    """
    log_integral = integrate_interval(_log_integrand(f), interval, rule)
    logger.debug("int ln({}) over [{}, {}] = {!r}", f, interval.a, interval.b, log_integral)
    return _exp(log_integral)


def _midpoints(interval: Interval, n: int) -> Tuple[np.ndarray, float]:
    if n < 1:
        raise ShapeMismatch(f"partition count must be >= 1, got {n}")
    delta = interval.width / n
    return interval.a + delta * (np.arange(n) + 0.5), delta


def riemann_product_oracle(f: Expr, interval: Interval, n: int) -> float:
    """Finite product of f(c_k)^delta over a uniform midpoint partition."""
    midpoints, delta = _midpoints(interval, n)
    values = evaluate_batch(_univariate(f), midpoints.reshape(-1, 1))
    if np.any(values <= 0.0):
        raise NonPositiveIntegrand(f"{f} is not positive at every midpoint of the partition")
    return _exp(math.fsum(delta * np.log(values)))


def volterra_integral(g: Expr, interval: Interval, rule: Optional[QuadratureRule] = None) -> float:
    """Volterra product integral e^{int_a^b g dx}."""
    return _exp(integrate_interval(_univariate(g), interval, rule))


def volterra_riemann_oracle(g: Expr, interval: Interval, n: int) -> float:
    """Finite product of (1 + g(c_k) delta) over a uniform midpoint partition."""
    midpoints, delta = _midpoints(interval, n)
    increments = delta * evaluate_batch(_univariate(g), midpoints.reshape(-1, 1))
    if np.any(1.0 + increments <= 0.0):
        bad = int(np.argmax(1.0 + increments <= 0.0))
        raise DegeneratePartition(
            f"factor 1 + g(c)*delta = {1.0 + increments[bad]!r} at c={midpoints[bad]!r}; refine the partition"
        )
    return _exp(math.fsum(np.log1p(increments)))


# ---------------------------------------------------------------------------
# Sign-changing functions
# ---------------------------------------------------------------------------

def _bisect(f: Expr, lo: float, hi: float, lo_sign: float, tol: float) -> float:
    while hi - lo > tol:
        middle = 0.5 * (lo + hi)
        if middle <= lo or middle >= hi:
            break
        value = evaluate(f, [middle])
        if value == 0.0:
            return middle
        if np.sign(value) == lo_sign:
            lo = middle
        else:
            hi = middle
    return 0.5 * (lo + hi)


def sign_profile(
    f: Expr,
    interval: Interval,
    samples: Optional[int] = None,
    tol: Optional[float] = None,
) -> SignProfile:
    """
    Detect the sign structure of f on an interval.

    f is sampled on a uniform grid; each sign change between neighbouring
    samples is refined by bisection. A sample that is exactly zero between
    samples of opposite sign is itself a root. Zeros at the endpoints are
    ignored.

    Raises:
        DegenerateSign: f is exactly zero on two neighbouring samples
    """
    samples = samples or settings.sign_samples
    tol = settings.sign_tolerance if tol is None else tol
    if samples < 2:
        raise ShapeMismatch(f"sign detection needs at least 2 samples, got {samples}")

    grid = np.linspace(interval.a, interval.b, samples)
    signs = np.sign(evaluate_batch(_univariate(f), grid.reshape(-1, 1)))
    if np.any((signs[:-1] == 0.0) & (signs[1:] == 0.0)):
        raise DegenerateSign(f"{f} vanishes on a whole sub-segment of [{interval.a}, {interval.b}]")
    nonzero = np.flatnonzero(signs)
    if nonzero.size == 0:
        raise DegenerateSign(f"{f} vanishes at every sample of [{interval.a}, {interval.b}]")

    roots: List[float] = []
    for j, k in zip(nonzero, nonzero[1:]):
        if signs[j] == signs[k]:
            continue
        if k == j + 1:
            roots.append(_bisect(f, float(grid[j]), float(grid[k]), signs[j], tol))
        else:
            roots.append(float(grid[j + 1]))

    segment_signs = [int(signs[nonzero[0]])]
    for _ in roots:
        segment_signs.append(-segment_signs[-1])
    edges = [interval.a, *roots, interval.b]
    negative_measure = math.fsum(
        hi - lo for lo, hi, sign in zip(edges, edges[1:], segment_signs) if sign < 0
    )
    profile = SignProfile(
        interval=interval, roots=roots, signs=segment_signs, negative_measure=negative_measure
    )
    logger.debug("Sign profile of {}: roots={}, signs={}, m={!r}", f, roots, segment_signs, negative_measure)
    return profile


def _abs_log_integral(
    f: Expr,
    interval: Interval,
    rule: Optional[QuadratureRule],
    profile: Optional[SignProfile],
) -> Tuple[float, float]:
    """(int_a^b ln|f| dx, negative measure), integrated segment by segment."""
    f = _univariate(f)
    profile = profile or sign_profile(f, interval)
    if profile.interval != interval:
        raise ShapeMismatch(
            f"sign profile covers [{profile.interval.a}, {profile.interval.b}], "
            f"not [{interval.a}, {interval.b}]"
        )
    rule = (rule or QuadratureRule()).as_adaptive()
    magnitude = Abs(f)

    def integrand(xs: np.ndarray) -> np.ndarray:
        values = evaluate_batch(magnitude, xs.reshape(-1, 1))
        if np.any(values == 0.0):
            raise NonIntegrableSingularity(f"{f} vanishes at a quadrature node")
        return np.log(values)

    pieces = []
    for segment in profile.segments():
        try:
            pieces.append(integrate_interval(integrand, segment, rule))
        except NonIntegrableSingularity:
            raise
        except BudgetExhausted as exc:
            raise NonIntegrableSingularity(
                f"ln|{f}| is not integrable on [{segment.a}, {segment.b}]: {exc}"
            ) from exc
    return math.fsum(pieces), profile.negative_measure


def geometric_integral_signed(
    f: Expr,
    interval: Interval,
    rule: Optional[QuadratureRule] = None,
    profile: Optional[SignProfile] = None,
) -> ComplexScalar:
    """
    Product integral of a function with finitely many sign changes.

    Each negative segment contributes a phase e^{i pi (length)}; the result
    is e^{i pi m} e^{int ln|f|} with m the total negative measure.
    """
    log_magnitude, measure = _abs_log_integral(f, interval, rule, profile)
    value = _exp(log_magnitude) * cmath.exp(1j * math.pi * measure)
    return ComplexScalar.from_complex(value)


def geometric_mean(
    f: Expr,
    interval: Interval,
    rule: Optional[QuadratureRule] = None,
    profile: Optional[SignProfile] = None,
) -> ComplexScalar:
    """
    Geometric mean exp((int ln|f| + i pi m) / (b - a)).

    The phase uses the unreduced negative measure m.
    """
    log_magnitude, measure = _abs_log_integral(f, interval, rule, profile)
    exponent = complex(log_magnitude, math.pi * measure) / interval.width
    try:
        value = cmath.exp(exponent)
    except OverflowError:
        raise DomainError(f"geometric mean of {f} overflows")
    return ComplexScalar.from_complex(value)
