"""
Product-form exterior algebra.

A ProductForm of degree p in n variables maps sorted multi-indices to
strictly positive coefficient fields; an absent slot means coefficient 1,
the neutral element of the product-form vector addition. A LogForm is the
classical p-form obtained by taking logarithms of every coefficient.
q_diff is exp . d . log with the classical exterior derivative d.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, ClassVar, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.stats import qmc

from app.calculus.expr import ONE, ZERO, Add, Const, Div, Exp, Expr, Ln, Mul, Neg, Pow, diff, evaluate_batch, simplify
from app.config import settings
from app.errors import DegreeOverflow, DomainError, PositivityViolation, ShapeMismatch
from app.models import ResidualReport


MultiIndex = Tuple[int, ...]


def permutation_parity(indices: Sequence[int]) -> int:
    """+1 for an even permutation of the sorted order, -1 for odd, 0 on repeats."""
    if len(set(indices)) != len(indices):
        return 0
    inversions = sum(1 for i, j in itertools.combinations(range(len(indices)), 2) if indices[i] > indices[j])
    return -1 if inversions % 2 else 1


def multi_indices(n: int, p: int) -> List[MultiIndex]:
    """All sorted degree-p multi-indices over 1..n."""
    return list(itertools.combinations(range(1, n + 1), p))


def slot_label(key: MultiIndex) -> str:
    """Textual slot name: "0" for degree 0, "dx1^dx3" otherwise."""
    return "^".join(f"dx{i}" for i in key) if key else "0"


@dataclass(frozen=True)
class _Form:
    """Shared storage for product and log forms: sorted (key, coefficient) pairs."""

    n: int
    p: int
    terms: Tuple[Tuple[MultiIndex, Expr], ...] = ()

    neutral: ClassVar[Expr] = ONE

    @staticmethod
    def _combine(left: Expr, right: Expr) -> Expr:
        raise NotImplementedError

    @staticmethod
    def _flip(coefficient: Expr) -> Expr:
        raise NotImplementedError

    @classmethod
    def build(cls, n: int, p: int, table: Mapping[Sequence[int], Expr]):
        """
        Build a canonical form from a slot table.

        Unsorted slots are normalized by permutation parity (odd parity stores
        the flipped coefficient); slots with a repeated index vanish. Slots
        whose coefficient simplifies to the neutral constant are dropped.
        """
        if not 0 <= p <= n:
            raise DegreeOverflow(f"degree {p} is impossible in dimension {n}")
        collected: Dict[MultiIndex, Expr] = {}
        for raw_key, coefficient in table.items():
            raw_key = tuple(raw_key)
            if len(raw_key) != p:
                raise ShapeMismatch(f"slot {slot_label(raw_key)} does not have degree {p}")
            if any(not 1 <= i <= n for i in raw_key):
                raise ShapeMismatch(f"slot {slot_label(raw_key)} is outside dimension {n}")
            if coefficient.max_index > n:
                raise ShapeMismatch(f"coefficient {coefficient} references x{coefficient.max_index} in dimension {n}")
            parity = permutation_parity(raw_key)
            if parity == 0:
                continue
            key = tuple(sorted(raw_key))
            if parity < 0:
                coefficient = cls._flip(coefficient)
            collected[key] = cls._combine(collected[key], coefficient) if key in collected else coefficient

        terms = []
        for key in sorted(collected):
            coefficient = simplify(collected[key])
            if coefficient != cls.neutral:
                terms.append((key, coefficient))
        return cls(n=n, p=p, terms=tuple(terms))

    @property
    def table(self) -> Dict[MultiIndex, Expr]:
        return dict(self.terms)

    def keys(self) -> List[MultiIndex]:
        return [key for key, _ in self.terms]

    def items(self) -> List[Tuple[MultiIndex, Expr]]:
        return list(self.terms)

    def coefficient(self, key: Sequence[int]) -> Expr:
        return self.table.get(tuple(key), self.neutral)

    @property
    def is_neutral(self) -> bool:
        return not self.terms

    def to_spec(self) -> str:
        """Textual notation "dx1:expr; dx1^dx2:expr"."""
        return "; ".join(f"{slot_label(key)}:{coefficient}" for key, coefficient in self.terms)

    def __str__(self) -> str:
        return self.to_spec() or f"<neutral {self.p}-form in R^{self.n}>"


@dataclass(frozen=True)
class ProductForm(_Form):
    """Degree-p product form; absent slots have coefficient 1."""

    neutral: ClassVar[Expr] = ONE

    @staticmethod
    def _combine(left: Expr, right: Expr) -> Expr:
        return Mul(left, right)

    @staticmethod
    def _flip(coefficient: Expr) -> Expr:
        return Div(ONE, coefficient)


@dataclass(frozen=True)
class LogForm(_Form):
    """Classical degree-p form; absent slots have coefficient 0."""

    neutral: ClassVar[Expr] = ZERO

    @staticmethod
    def _combine(left: Expr, right: Expr) -> Expr:
        return Add(left, right)

    @staticmethod
    def _flip(coefficient: Expr) -> Expr:
        return Neg(coefficient)


def _require_same_shape(*forms: _Form) -> None:
    first = forms[0]
    for other in forms[1:]:
        if (other.n, other.p) != (first.n, first.p):
            raise ShapeMismatch(
                f"forms differ in shape: {first.p}-form in R^{first.n} vs {other.p}-form in R^{other.n}"
            )


# ---------------------------------------------------------------------------
# Vector-space operations
# ---------------------------------------------------------------------------

def identity_form(n: int, p: int) -> ProductForm:
    """The neutral product form I: every coefficient equal to 1."""
    return ProductForm.build(n, p, {})


def oplus(alpha: ProductForm, beta: ProductForm) -> ProductForm:
    """Vector addition: coefficientwise product."""
    _require_same_shape(alpha, beta)
    table = alpha.table
    for key, coefficient in beta.terms:
        table[key] = Mul(table[key], coefficient) if key in table else coefficient
    return ProductForm.build(alpha.n, alpha.p, table)


def scalar_odot(a: float, alpha: ProductForm) -> ProductForm:
    """Scalar multiplication: coefficientwise power a_i ** a."""
    if a == 0.0:
        return identity_form(alpha.n, alpha.p)
    if a == 1.0:
        return alpha
    return ProductForm.build(alpha.n, alpha.p, {key: Pow(c, Const(a)) for key, c in alpha.terms})


def inverse(alpha: ProductForm) -> ProductForm:
    """Coefficientwise reciprocal, the additive inverse of the product-form space."""
    return ProductForm.build(alpha.n, alpha.p, {key: Div(ONE, c) for key, c in alpha.terms})


def wedge_p(alpha: ProductForm, beta: ProductForm) -> ProductForm:
    """
    Product wedge on monomials, (a)^{S} ^ (b)^{T} = (ab)^{S^T}, extended by
    gathering like terms. Overlapping slots contribute nothing; an odd
    permutation to the sorted slot stores the reciprocal.
    """
    if alpha.n != beta.n:
        raise ShapeMismatch(f"wedge of forms in R^{alpha.n} and R^{beta.n}")
    degree = alpha.p + beta.p
    if degree > alpha.n:
        raise DegreeOverflow(f"wedge of a {alpha.p}-form and a {beta.p}-form exceeds dimension {alpha.n}")

    table: Dict[MultiIndex, Expr] = {}
    for left_key, a in alpha.terms:
        for right_key, b in beta.terms:
            concatenated = left_key + right_key
            parity = permutation_parity(concatenated)
            if parity == 0:
                continue
            key = tuple(sorted(concatenated))
            product = Mul(a, b)
            contribution = product if parity > 0 else Div(ONE, product)
            table[key] = Mul(table[key], contribution) if key in table else contribution
    return ProductForm.build(alpha.n, degree, table)


# ---------------------------------------------------------------------------
# Log / exp bridge and the q differential
# ---------------------------------------------------------------------------

def log_map(alpha: ProductForm) -> LogForm:
    """Coefficientwise logarithm."""
    return LogForm.build(alpha.n, alpha.p, {key: Ln(c) for key, c in alpha.terms})


def exp_map(omega: LogForm) -> ProductForm:
    """Coefficientwise exponential."""
    return ProductForm.build(omega.n, omega.p, {key: Exp(c) for key, c in omega.terms})


def zero_log_form(n: int, p: int) -> LogForm:
    return LogForm.build(n, p, {})


def log_add(omega: LogForm, eta: LogForm) -> LogForm:
    """Classical addition of p-forms."""
    _require_same_shape(omega, eta)
    table = omega.table
    for key, coefficient in eta.terms:
        table[key] = Add(table[key], coefficient) if key in table else coefficient
    return LogForm.build(omega.n, omega.p, table)


def log_scale(a: float, omega: LogForm) -> LogForm:
    """Classical real scaling of a p-form."""
    return LogForm.build(omega.n, omega.p, {key: Mul(Const(a), c) for key, c in omega.terms})


def exterior_derivative(omega: LogForm) -> LogForm:
    """
    Classical exterior derivative: the coefficient c on dx^S contributes
    d_k c on the sorted slot {k} + S with the sign of moving dx_k past the
    indices of S smaller than k.
    """
    if omega.p >= omega.n:
        raise DegreeOverflow(f"d of a {omega.p}-form in R^{omega.n} has no room")
    table: Dict[MultiIndex, Expr] = {}
    for key, coefficient in omega.terms:
        for k in range(1, omega.n + 1):
            if k in key:
                continue
            partial = diff(coefficient, k)
            if partial == ZERO:
                continue
            if sum(1 for i in key if i < k) % 2:
                partial = Neg(partial)
            target = tuple(sorted(key + (k,)))
            table[target] = Add(table[target], partial) if target in table else partial
    return LogForm.build(omega.n, omega.p + 1, table)


def q_diff(alpha: ProductForm) -> ProductForm:
    """The q differential exp . d . log; q(q(alpha)) is the identity form."""
    result = exp_map(exterior_derivative(log_map(alpha)))
    logger.debug("q({}) = {}", alpha, result)
    return result


# ---------------------------------------------------------------------------
# Evaluation and semantic comparison
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def sample_points(n: int, count: Optional[int] = None) -> np.ndarray:
    """Deterministic low-discrepancy points in [0.1, 0.9]^n."""
    count = count or settings.form_sample_points
    if n == 0:
        return np.zeros((1, 0))
    unit = qmc.Halton(d=n, scramble=False).random(count)
    return qmc.scale(unit, [0.1] * n, [0.9] * n)


def _log_values(coefficient: Expr, points: np.ndarray, key: MultiIndex) -> np.ndarray:
    logarithm = simplify(Ln(coefficient))
    if not isinstance(logarithm, Ln):
        return evaluate_batch(logarithm, points)
    values = evaluate_batch(coefficient, points)
    if np.any(values <= 0.0):
        bad = int(np.argmax(values <= 0.0))
        raise PositivityViolation(
            f"coefficient {coefficient} on slot {slot_label(key)} is {values[bad]!r} "
            f"at {points[bad].tolist()}"
        )
    return np.log(values)


def log_coefficients(
    alpha: ProductForm,
    points: np.ndarray,
    keys: Optional[Iterable[MultiIndex]] = None,
) -> Dict[MultiIndex, np.ndarray]:
    """Log coefficients at a batch of points; absent slots give zeros."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != alpha.n:
        raise ShapeMismatch(f"points of shape {points.shape} for a form in R^{alpha.n}")
    wanted = alpha.keys() if keys is None else list(keys)
    table = alpha.table
    return {
        key: _log_values(table[key], points, key) if key in table else np.zeros(points.shape[0])
        for key in wanted
    }


def evaluate_form(alpha: ProductForm, point: Sequence[float]) -> Dict[MultiIndex, float]:
    """Numeric coefficient of every slot at one point; absent slots report 1."""
    if len(point) != alpha.n:
        raise ShapeMismatch(f"point has {len(point)} coordinates, form lives in R^{alpha.n}")
    row = np.asarray([list(point)], dtype=float)
    table = alpha.table
    values: Dict[MultiIndex, float] = {}
    for key in multi_indices(alpha.n, alpha.p):
        if key not in table:
            values[key] = 1.0
            continue
        value = float(evaluate_batch(table[key], row)[0])
        if value <= 0.0:
            raise PositivityViolation(f"coefficient on slot {slot_label(key)} is {value!r} at {list(point)}")
        values[key] = value
    return values


def compare_forms(left: ProductForm, right: ProductForm, points: Optional[np.ndarray] = None) -> ResidualReport:
    """Largest absolute difference of log coefficients over a set of points."""
    _require_same_shape(left, right)
    points = sample_points(left.n) if points is None else np.asarray(points, dtype=float)
    keys = sorted(set(left.keys()) | set(right.keys()))
    lhs = log_coefficients(left, points, keys)
    rhs = log_coefficients(right, points, keys)

    worst, worst_key, worst_row = 0.0, None, None
    for key in keys:
        gap = np.abs(lhs[key] - rhs[key])
        row = int(np.argmax(gap))
        if gap[row] > worst:
            worst, worst_key, worst_row = float(gap[row]), key, row
    return ResidualReport(
        max_residual=worst,
        worst_slot=slot_label(worst_key) if worst_key is not None else None,
        worst_point=points[worst_row].tolist() if worst_row is not None else None,
        point_count=points.shape[0],
    )


def forms_equal(
    alpha: ProductForm,
    beta: ProductForm,
    points: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> bool:
    """Semantic equality: log coefficients agree at the sample points."""
    tol = settings.form_tolerance if tol is None else tol
    if (alpha.n, alpha.p) != (beta.n, beta.p):
        return False
    return compare_forms(alpha, beta, points).max_residual <= tol


def is_closed(alpha: ProductForm, points: Optional[np.ndarray] = None, tol: Optional[float] = None) -> bool:
    """A product form is closed when its q differential is the identity form."""
    if alpha.p == alpha.n:
        return True
    q_alpha = q_diff(alpha)
    return forms_equal(q_alpha, identity_form(q_alpha.n, q_alpha.p), points, tol)


# ---------------------------------------------------------------------------
# Diagnostics for identities that only hold in special cases
# ---------------------------------------------------------------------------

def check_associativity(
    alpha: ProductForm,
    beta: ProductForm,
    gamma: ProductForm,
    points: Optional[np.ndarray] = None,
) -> ResidualReport:
    """Compare alpha ^ (beta ^ gamma) with (alpha ^ beta) ^ gamma; no verdict."""
    left = wedge_p(alpha, wedge_p(beta, gamma))
    right = wedge_p(wedge_p(alpha, beta), gamma)
    report = compare_forms(left, right, points)
    logger.info(f"Associativity residual {report.max_residual:.3e} at slot {report.worst_slot}")
    return report


def check_leibniz(alpha: ProductForm, beta: ProductForm, points: Optional[np.ndarray] = None) -> ResidualReport:
    """
    Compare q(alpha ^ beta) with (q alpha ^ beta) (+) (-1)^p (.) (alpha ^ q beta),
    p being the degree of alpha; no verdict.
    """
    left = q_diff(wedge_p(alpha, beta))
    right = oplus(
        wedge_p(q_diff(alpha), beta),
        scalar_odot(float((-1) ** alpha.p), wedge_p(alpha, q_diff(beta))),
    )
    report = compare_forms(left, right, points)
    logger.info(f"Leibniz residual {report.max_residual:.3e} at slot {report.worst_slot}")
    return report
