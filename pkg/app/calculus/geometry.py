"""
Simplices, chains, the boundary operator, and pullbacks along smooth maps.

Vertex order is the orientation of a simplex. Chains combine only terms
whose ordered vertex lists are identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.calculus.expr import ZERO, Add, Const, Expr, Mul, Neg, Var, diff, evaluate, simplify, substitute
from app.calculus.forms import LogForm, ProductForm, exp_map, log_map, multi_indices
from app.config import settings
from app.errors import DegenerateSimplex, DegreeUnderflow, ShapeMismatch


Point = Tuple[float, ...]


@dataclass(frozen=True)
class Simplex:
    """Ordered vertices P0..Pk in R^m."""

    vertices: Tuple[Point, ...]

    def __post_init__(self):
        vertices = tuple(tuple(float(c) for c in vertex) for vertex in self.vertices)
        if not vertices:
            raise ShapeMismatch("a simplex needs at least one vertex")
        if len({len(vertex) for vertex in vertices}) != 1:
            raise ShapeMismatch(f"vertices of mixed dimension: {vertices}")
        if not all(math.isfinite(c) for vertex in vertices for c in vertex):
            raise ShapeMismatch("vertex coordinates must be finite")
        object.__setattr__(self, "vertices", vertices)

    @property
    def dimension(self) -> int:
        """Ambient dimension m."""
        return len(self.vertices[0])

    @property
    def degree(self) -> int:
        return len(self.vertices) - 1

    def edge_matrix(self) -> np.ndarray:
        """Rows P_i - P0, shape (k, m)."""
        points = np.asarray(self.vertices, dtype=float)
        return points[1:] - points[0]

    def gram_determinant(self) -> float:
        edges = self.edge_matrix()
        if edges.shape[0] == 0:
            return 1.0
        return float(np.linalg.det(edges @ edges.T))

    def ensure_nondegenerate(self, tol: Optional[float] = None) -> None:
        tol = settings.gram_tolerance if tol is None else tol
        gram = self.gram_determinant()
        if gram <= tol:
            raise DegenerateSimplex(
                f"edge vectors of {list(self.vertices)} are dependent (Gram determinant {gram:.3e})",
                gram=gram,
            )

    def face(self, i: int) -> "Simplex":
        """The simplex with vertex i omitted."""
        return Simplex(self.vertices[:i] + self.vertices[i + 1:])


@dataclass(frozen=True)
class Chain:
    """Real-weighted formal sum of simplices of one degree in one R^m."""

    terms: Tuple[Tuple[float, Simplex], ...] = ()
    degree: Optional[int] = None
    dimension: Optional[int] = None

    @classmethod
    def build(
        cls,
        pairs: Iterable[Tuple[float, Simplex]],
        degree: Optional[int] = None,
        dimension: Optional[int] = None,
    ) -> "Chain":
        """Combine identical vertex lists by adding weights and drop zero weights."""
        weights: Dict[Tuple[Point, ...], float] = {}
        for weight, simplex in pairs:
            if degree is None:
                degree, dimension = simplex.degree, simplex.dimension
            if (simplex.degree, simplex.dimension) != (degree, dimension):
                raise ShapeMismatch(
                    f"chain mixes a {simplex.degree}-simplex in R^{simplex.dimension} "
                    f"with {degree}-simplices in R^{dimension}"
                )
            weights[simplex.vertices] = weights.get(simplex.vertices, 0.0) + float(weight)
        terms = tuple((w, Simplex(vertices)) for vertices, w in weights.items() if w != 0.0)
        return cls(terms=terms, degree=degree, dimension=dimension)

    @classmethod
    def of(cls, simplex: Simplex, weight: float = 1.0) -> "Chain":
        return cls.build([(weight, simplex)])

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def __add__(self, other: "Chain") -> "Chain":
        return Chain.build(
            list(self.terms) + list(other.terms),
            degree=self.degree if self.degree is not None else other.degree,
            dimension=self.dimension if self.dimension is not None else other.dimension,
        )

    def scale(self, factor: float) -> "Chain":
        return Chain.build(
            [(factor * w, s) for w, s in self.terms], degree=self.degree, dimension=self.dimension
        )

    def __neg__(self) -> "Chain":
        return self.scale(-1.0)


@dataclass(frozen=True)
class SmoothMap:
    """phi: R^m -> R^n given by n component expressions in x1..xm."""

    domain_dim: int
    components: Tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for component in self.components:
            if component.max_index > self.domain_dim:
                raise ShapeMismatch(
                    f"component {component} references x{component.max_index} "
                    f"but the domain is R^{self.domain_dim}"
                )

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    @cached_property
    def jacobian(self) -> Tuple[Tuple[Expr, ...], ...]:
        """Symbolic partials d(phi_i)/d(x_j), rows indexed by codomain."""
        return tuple(
            tuple(diff(component, j) for j in range(1, self.domain_dim + 1))
            for component in self.components
        )

    def compose(self, e: Expr) -> Expr:
        """e(phi(x)) for an expression in the codomain variables."""
        if e.max_index > self.codomain_dim:
            raise ShapeMismatch(f"{e} references x{e.max_index} outside R^{self.codomain_dim}")
        return simplify(substitute(e, {i + 1: c for i, c in enumerate(self.components)}))

    def __call__(self, point: Sequence[float]) -> List[float]:
        return [evaluate(component, point) for component in self.components]


def identity_map(n: int) -> SmoothMap:
    return SmoothMap(n, tuple(Var(i) for i in range(1, n + 1)))


def standard_simplex(k: int) -> Simplex:
    """Origin followed by the unit points of R^k."""
    if k < 0:
        raise ShapeMismatch(f"simplex degree must be >= 0, got {k}")
    origin = (0.0,) * k
    units = [tuple(1.0 if j == i else 0.0 for j in range(k)) for i in range(k)]
    return Simplex((origin, *units))


def boundary(s: Simplex) -> Chain:
    """Alternating sum of the faces of s."""
    if s.degree < 1:
        raise DegreeUnderflow("a 0-simplex has no boundary")
    return Chain.build(
        [((-1.0) ** i, s.face(i)) for i in range(s.degree + 1)],
        degree=s.degree - 1,
        dimension=s.dimension,
    )


def boundary_chain(c: Chain) -> Chain:
    """Linear extension of the boundary over chain weights."""
    if c.degree is not None and c.degree < 1:
        raise DegreeUnderflow("a 0-chain has no boundary")
    pairs: List[Tuple[float, Simplex]] = []
    for weight, simplex in c.terms:
        pairs.extend((weight * w, face) for w, face in boundary(simplex).terms)
    degree = None if c.degree is None else c.degree - 1
    return Chain.build(pairs, degree=degree, dimension=c.dimension)


def affine_map(s: Simplex) -> SmoothMap:
    """x(t) = P0 + sum_i t_i (P_i - P0), mapping the standard k-simplex onto s."""
    s.ensure_nondegenerate()
    origin = s.vertices[0]
    edges = s.edge_matrix()
    components = []
    for j in range(s.dimension):
        component: Expr = Const(origin[j])
        for i in range(s.degree):
            component = Add(component, Mul(Const(float(edges[i, j])), Var(i + 1)))
        components.append(simplify(component))
    return SmoothMap(s.degree, tuple(components))


def _determinant(matrix: List[List[Expr]]) -> Expr:
    """Cofactor expansion along the first row."""
    if len(matrix) == 1:
        return matrix[0][0]
    total: Expr = ZERO
    for j, entry in enumerate(matrix[0]):
        if entry == ZERO:
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = Mul(entry, _determinant(minor))
        total = Add(total, Neg(term) if j % 2 else term)
    return simplify(total)


def pullback_log(phi: SmoothMap, omega: LogForm) -> LogForm:
    """
    Pull a classical p-form back along phi.

    The coefficient on a domain slot L is the sum over codomain slots K of
    a_K(phi(x)) times the p x p minor of the Jacobian with rows K, columns L.
    """
    if omega.n != phi.codomain_dim:
        raise ShapeMismatch(f"form lives in R^{omega.n}, map lands in R^{phi.codomain_dim}")
    if omega.p > phi.domain_dim:
        raise ShapeMismatch(f"cannot pull a {omega.p}-form back to R^{phi.domain_dim}")

    if omega.p == 0:
        table = {key: phi.compose(c) for key, c in omega.terms}
        return LogForm.build(phi.domain_dim, 0, table)

    jacobian = phi.jacobian
    table: Dict[Tuple[int, ...], Expr] = {}
    for target in multi_indices(phi.domain_dim, omega.p):
        total: Expr = ZERO
        for source, coefficient in omega.terms:
            minor = _determinant([[jacobian[k - 1][l - 1] for l in target] for k in source])
            if minor == ZERO:
                continue
            total = Add(total, Mul(phi.compose(coefficient), minor))
        table[target] = total
    pulled = LogForm.build(phi.domain_dim, omega.p, table)
    logger.debug("Pullback of {} -> {}", omega, pulled)
    return pulled


def pullback_product(phi: SmoothMap, alpha: ProductForm) -> ProductForm:
    """exp . pullback_log . log; coefficient powers follow the Jacobian minors."""
    return exp_map(pullback_log(phi, log_map(alpha)))


