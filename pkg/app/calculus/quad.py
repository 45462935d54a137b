"""
Deterministic Gauss–Legendre quadrature on intervals and standard simplices.

Every sum is accumulated with math.fsum in ascending node order, so results
are reproducible bit for bit. Gauss nodes are interior to their cell, which
lets the adaptive rule integrate log singularities sitting on cell edges.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.calculus.expr import Expr, evaluate_batch
from app.calculus.forms import LogForm
from app.calculus.geometry import Simplex, affine_map, pullback_log
from app.config import settings
from app.errors import BudgetExhausted, ShapeMismatch
from app.models import Interval, QuadratureRule


# A vectorized integrand maps an (N,) array of abscissae to (N,) values.
Integrand = Union[Expr, Callable[[np.ndarray], np.ndarray]]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the order-point rule on [0, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def _as_callable(f: Integrand) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, Expr):
        if f.max_index > 1:
            raise ShapeMismatch(f"interval integrand must depend on x1 only: {f}")
        return lambda xs: evaluate_batch(f, xs.reshape(-1, 1))
    return f


def _cell_estimate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, order: int) -> float:
    nodes, weights = gauss_legendre(order)
    width = b - a
    values = f(a + width * nodes)
    return width * math.fsum(weights * values)


def _fixed(f, interval: Interval, rule: QuadratureRule) -> float:
    edges = np.linspace(interval.a, interval.b, rule.cells + 1)
    return math.fsum(
        _cell_estimate(f, float(lo), float(hi), rule.order) for lo, hi in zip(edges, edges[1:])
    )


def _adaptive(f, interval: Interval, rule: QuadratureRule) -> float:
    min_width = settings.quad_min_width
    accepted: List[Tuple[float, float]] = []
    pending = [(interval.a, interval.b, _cell_estimate(f, interval.a, interval.b, rule.order))]
    cells = 1

    while pending:
        a, b, parent = pending.pop()
        middle = 0.5 * (a + b)
        left = _cell_estimate(f, a, middle, rule.order)
        right = _cell_estimate(f, middle, b, rule.order)
        cells += 2
        refined = left + right

        if abs(refined - parent) <= rule.tolerance * (1.0 + abs(refined)):
            accepted.append((a, refined))
            continue
        if b - a < min_width:
            raise BudgetExhausted(
                f"unresolved singularity near x={middle!r}: cell width {b - a:.3e} "
                f"still changes by {abs(refined - parent):.3e}"
            )
        if cells > rule.budget:
            raise BudgetExhausted(f"adaptive quadrature exceeded its budget of {rule.budget} cells")
        pending.append((middle, b, right))
        pending.append((a, middle, left))

    accepted.sort()
    logger.debug(f"Adaptive quadrature on [{interval.a}, {interval.b}] used {cells} cells")
    return math.fsum(value for _, value in accepted)


def integrate_interval(f: Integrand, interval: Interval, rule: Optional[QuadratureRule] = None) -> float:
    """
    Integrate a function of x1 over an interval.

    Args:
        f: Expression in x1, or a vectorized callable
        interval: Integration bounds
        rule: Quadrature parameters (settings defaults when omitted)

    Returns:
        Approximation of the integral
    """
    rule = rule or QuadratureRule()
    integrand = _as_callable(f)
    if rule.kind == "gauss":
        return _fixed(integrand, interval, rule)
    return _adaptive(integrand, interval, rule)


@lru_cache(maxsize=32)
def collapsed_simplex_rule(k: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor Gauss rule mapped onto the standard k-simplex.

    Uses the collapsed coordinates x1 = u1, x_j = u_j (1 - x1 - ... - x_{j-1})
    with Jacobian prod_j (1 - x1 - ... - x_{j-1}). Points are returned in
    lexicographic order of the tensor grid.

    Returns:
        (points of shape (order**k, k), weights of shape (order**k,))
    """
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    nodes, weights = gauss_legendre(order)
    grid = np.stack(np.meshgrid(*([nodes] * k), indexing="ij"), axis=-1).reshape(-1, k)
    tensor_weights = np.prod(
        np.stack(np.meshgrid(*([weights] * k), indexing="ij"), axis=-1).reshape(-1, k), axis=1
    )

    points = np.empty_like(grid)
    jacobian = np.ones(grid.shape[0])
    remaining = np.ones(grid.shape[0])
    for j in range(k):
        points[:, j] = grid[:, j] * remaining
        jacobian *= remaining
        remaining = remaining - points[:, j]
    return points, tensor_weights * jacobian


def integrate_std_simplex(f: Integrand, k: int, rule: Optional[QuadratureRule] = None) -> float:
    """Integrate a function of x1..xk over the standard k-simplex."""
    rule = rule or QuadratureRule()
    if k < 0:
        raise ShapeMismatch(f"simplex dimension must be >= 0, got {k}")
    if isinstance(f, Expr) and f.max_index > k:
        raise ShapeMismatch(f"integrand references x{f.max_index} on a {k}-simplex")
    points, weights = collapsed_simplex_rule(k, rule.order)
    values = evaluate_batch(f, points) if isinstance(f, Expr) else f(points)
    return math.fsum(weights * values)


def integrate_logform_over_simplex(omega: LogForm, simplex: Simplex, rule: Optional[QuadratureRule] = None) -> float:
    """
    Integral of a classical p-form over an oriented p-simplex.

    The form is pulled back along the affine parametrization of the simplex and
    its single top coefficient is integrated over the standard p-simplex.
    Swapping two vertices flips the sign through the Jacobian minors.
    """
    if omega.n != simplex.dimension:
        raise ShapeMismatch(f"{omega.p}-form in R^{omega.n} cannot be integrated over a simplex in R^{simplex.dimension}")
    if omega.p != simplex.degree:
        raise ShapeMismatch(f"cannot integrate a {omega.p}-form over a {simplex.degree}-simplex")
    parametrization = affine_map(simplex)
    pulled = pullback_log(parametrization, omega)
    top = pulled.coefficient(tuple(range(1, simplex.degree + 1)))
    return integrate_std_simplex(top, simplex.degree, rule)
