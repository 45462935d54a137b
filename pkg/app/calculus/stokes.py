"""
Product integrals of product forms over chains and the Stokes verifier.

Everything is integrated on the log side and exponentiated once at the end.
"""

from __future__ import annotations

import itertools
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.calculus.expr import ONE, Add, Const, Expr, Exp, Ln, Mul, Pow, Sub, Var, simplify, substitute
from app.calculus.forms import ProductForm, log_coefficients, log_map, multi_indices, q_diff
from app.calculus.geometry import Chain, Simplex, boundary, boundary_chain, standard_simplex
from app.calculus.quad import collapsed_simplex_rule, integrate_logform_over_simplex, integrate_std_simplex
from app.config import settings
from app.errors import DomainError, ShapeMismatch
from app.models import ProofIdentityReport, QuadratureRule, SimplexBreakdown, StokesReport


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        raise DomainError(f"product integral e^{value!r} overflows")


def _check_positive_on(alpha: ProductForm, simplex: Simplex, rule: QuadratureRule) -> None:
    """Evaluate the log coefficients at the mapped quadrature nodes of the simplex."""
    nodes, _ = collapsed_simplex_rule(simplex.degree, rule.order)
    mapped = np.asarray(simplex.vertices[0]) + nodes @ simplex.edge_matrix()
    log_coefficients(alpha, mapped)


def _log_integral(alpha: ProductForm, simplex: Simplex, rule: QuadratureRule) -> float:
    _check_positive_on(alpha, simplex, rule)
    return integrate_logform_over_simplex(log_map(alpha), simplex, rule)


def _check_chain(alpha: ProductForm, chain: Chain) -> None:
    if chain.dimension is not None and chain.dimension != alpha.n:
        raise ShapeMismatch(f"form lives in R^{alpha.n}, chain in R^{chain.dimension}")
    if chain.degree is not None and chain.degree != alpha.p:
        raise ShapeMismatch(f"cannot integrate a {alpha.p}-form over a {chain.degree}-chain")


def log_product_integral(alpha: ProductForm, chain: Chain, rule: Optional[QuadratureRule] = None) -> float:
    """sum_i a_i * int_{sigma_i} log(alpha)."""
    rule = rule or QuadratureRule()
    _check_chain(alpha, chain)
    return math.fsum(weight * _log_integral(alpha, simplex, rule) for weight, simplex in chain.terms)


def product_integral_over_chain(alpha: ProductForm, chain: Chain, rule: Optional[QuadratureRule] = None) -> float:
    """
    Product integral of a p-form over a chain of p-simplices.

    Chain weights act as exponents, so doubling every weight squares the
    result. An empty chain gives 1.

    Raises:
        PositivityViolation: a coefficient is <= 0 at a quadrature node
        DegenerateSimplex: a simplex of the chain is degenerate
    """
    return _exp(log_product_integral(alpha, chain, rule))


def stokes_check(alpha: ProductForm, chain: Chain, rule: Optional[QuadratureRule] = None) -> StokesReport:
    """
    Compare the product integral of alpha over the boundary of a chain with
    the product integral of q(alpha) over the chain itself.

    The report carries both sides and their log discrepancy; no verdict.
    """
    rule = rule or QuadratureRule()
    if chain.degree is not None and chain.degree != alpha.p + 1:
        raise ShapeMismatch(f"Stokes for a {alpha.p}-form needs a {alpha.p + 1}-chain, got degree {chain.degree}")
    if chain.dimension is not None and chain.dimension != alpha.n:
        raise ShapeMismatch(f"form lives in R^{alpha.n}, chain in R^{chain.dimension}")
    q_alpha = q_diff(alpha)

    breakdown: List[SimplexBreakdown] = []
    for weight, simplex in chain.terms:
        log_boundary = weight * log_product_integral(alpha, boundary(simplex), rule)
        log_interior = weight * _log_integral(q_alpha, simplex, rule)
        breakdown.append(SimplexBreakdown(
            weight=weight,
            vertices=[list(vertex) for vertex in simplex.vertices],
            log_boundary=log_boundary,
            log_interior=log_interior,
            log_discrepancy=abs(log_boundary - log_interior),
        ))

    log_lhs = log_product_integral(alpha, boundary_chain(chain), rule)
    log_rhs = math.fsum(entry.log_interior for entry in breakdown)
    report = StokesReport(
        lhs=_exp(log_lhs),
        rhs=_exp(log_rhs),
        log_lhs=log_lhs,
        log_rhs=log_rhs,
        log_discrepancy=abs(log_lhs - log_rhs),
        breakdown=breakdown,
    )
    logger.debug("Stokes for {}: ln lhs={!r}, ln rhs={!r}", alpha, log_lhs, log_rhs)
    return report


def proof_identity_check(A: Expr, n: int, rule: Optional[QuadratureRule] = None) -> ProofIdentityReport:
    """
    Three-way check for eta = (A)^{dx1^...^dxn} on the standard (n+1)-simplex.

    Both Stokes sides are compared with the closed form
    exp((-1)^n int_{standard n-simplex} [ln A(x, 1 - sum x) - ln A(x, 0)]).
    """
    rule = rule or QuadratureRule()
    if n < 1:
        raise ShapeMismatch(f"the identity needs n >= 1, got {n}")
    if A.max_index > n + 1:
        raise ShapeMismatch(f"{A} references x{A.max_index}, expected a function of x1..x{n + 1}")

    eta = ProductForm.build(n + 1, n, {tuple(range(1, n + 1)): A})
    report = stokes_check(eta, Chain.of(standard_simplex(n + 1)), rule)

    log_a = simplify(Ln(A))
    remainder: Expr = ONE
    for i in range(1, n + 1):
        remainder = Sub(remainder, Var(i))
    top = substitute(log_a, {n + 1: remainder})
    bottom = substitute(log_a, {n + 1: Const(0.0)})
    log_closed = (-1) ** n * integrate_std_simplex(simplify(Sub(top, bottom)), n, rule)

    return ProofIdentityReport(
        lhs=report.lhs,
        rhs=report.rhs,
        closed_form=_exp(log_closed),
        lhs_rhs=abs(report.log_lhs - report.log_rhs),
        lhs_closed=abs(report.log_lhs - log_closed),
        rhs_closed=abs(report.log_rhs - log_closed),
    )


# ---------------------------------------------------------------------------
# Randomized cases
# ---------------------------------------------------------------------------

def random_polynomial(rng: np.random.Generator, n: int, degree: int = 3) -> Expr:
    """Polynomial in x1..xn of total degree <= degree with coefficients in [-1, 1]."""
    total: Expr = Const(float(rng.uniform(-1.0, 1.0)))
    for exponents in itertools.product(range(degree + 1), repeat=n):
        if not 0 < sum(exponents) <= degree:
            continue
        term: Expr = Const(float(rng.uniform(-1.0, 1.0)))
        for index, power in enumerate(exponents, start=1):
            if power == 1:
                term = Mul(term, Var(index))
            elif power > 1:
                term = Mul(term, Pow(Var(index), Const(float(power))))
        total = Add(total, term)
    return simplify(total)


def random_exponential_field(rng: np.random.Generator, n: int, degree: int = 3) -> Expr:
    """e^{polynomial}, positive everywhere."""
    return Exp(random_polynomial(rng, n, degree))


def random_simplex(rng: np.random.Generator, n: int, k: int, min_gram: Optional[float] = None) -> Simplex:
    """k-simplex with vertices in [0, 1]^n and Gram determinant >= min_gram."""
    min_gram = settings.case_min_gram if min_gram is None else min_gram
    while True:
        simplex = Simplex(tuple(map(tuple, rng.uniform(0.0, 1.0, size=(k + 1, n)))))
        if simplex.gram_determinant() >= min_gram:
            return simplex


def random_case(rng: np.random.Generator, n: int, p: int) -> Tuple[ProductForm, Chain]:
    """A dense p-form with e^{poly} coefficients and a weighted chain of (p+1)-simplices."""
    if not 0 <= p < n:
        raise ShapeMismatch(f"a Stokes case needs 0 <= p < n, got p={p}, n={n}")
    alpha = ProductForm.build(
        n, p, {key: random_exponential_field(rng, n) for key in multi_indices(n, p)}
    )
    count = int(rng.integers(1, 3))
    pairs = [
        (float(rng.choice([-2.0, -1.0, 0.5, 1.0, 2.0])), random_simplex(rng, n, p + 1))
        for _ in range(count)
    ]
    return alpha, Chain.build(pairs)


SUITE_SHAPES: Sequence[Tuple[int, int]] = ((2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


def suite_cases(count: int, seed: int = 0) -> List[Tuple[ProductForm, Chain]]:
    """Randomized cases cycling through (n, p) in SUITE_SHAPES."""
    rng = np.random.default_rng(seed)
    return [random_case(rng, *SUITE_SHAPES[i % len(SUITE_SHAPES)]) for i in range(count)]


def run_suite(
    cases: Sequence[Tuple[ProductForm, Chain]],
    rule: Optional[QuadratureRule] = None,
) -> List[StokesReport]:
    """Run stokes_check on every case."""
    rule = rule or QuadratureRule(kind="gauss", order=16)
    reports = [stokes_check(alpha, chain, rule) for alpha, chain in cases]
    if reports:
        worst = max(report.log_discrepancy for report in reports)
        logger.info(f"Stokes suite: {len(reports)} cases, worst log discrepancy {worst:.3e}")
    return reports
