import math
import sys

import numpy as np
import pytest
from loguru import logger

from conftest import dense_form, form

import app.calculus.expr as expr_module
from app.calculus.expr import Const, Var, evaluate, parse
from app.calculus.forms import (
    LogForm,
    ProductForm,
    evaluate_form,
    forms_equal,
    identity_form,
    q_diff,
    wedge_p,
)
from app.calculus.geometry import (
    Chain,
    Simplex,
    SmoothMap,
    affine_map,
    boundary,
    boundary_chain,
    identity_map,
    pullback_log,
    pullback_product,
    standard_simplex,
)
from app.calculus.stokes import random_simplex
from app.errors import DegenerateSimplex, DegreeUnderflow, ShapeMismatch


def weights_by_vertices(chain):
    return {simplex.vertices: weight for weight, simplex in chain.terms}


class TestSimplex:
    def test_standard_simplices(self):
        assert standard_simplex(1).vertices == ((0.0,), (1.0,))
        assert standard_simplex(2).vertices == ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
        assert standard_simplex(0).vertices == ((),)
        assert standard_simplex(3).degree == 3

    def test_vertices_are_floats(self):
        s = Simplex(((0, 0), (1, 0)))
        assert s.vertices == ((0.0, 0.0), (1.0, 0.0))
        assert (s.dimension, s.degree) == (2, 1)

    @pytest.mark.parametrize("vertices", [(), ((0, 0), (1,)), ((0, float("nan")),)])
    def test_invalid_vertices(self, vertices):
        with pytest.raises(ShapeMismatch):
            Simplex(vertices)

    def test_gram_determinant(self):
        assert standard_simplex(2).gram_determinant() == pytest.approx(1.0)
        assert Simplex(((1.0, 2.0),)).gram_determinant() == 1.0
        assert Simplex(((0, 0, 0), (2, 0, 0))).gram_determinant() == pytest.approx(4.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateSimplex) as exc:
            Simplex(((0, 0), (1, 1), (2, 2))).ensure_nondegenerate()
        assert exc.value.gram is not None and exc.value.gram <= 1e-12
        with pytest.raises(DegenerateSimplex):
            Simplex(((0, 0), (0, 0))).ensure_nondegenerate()

    def test_face(self):
        s = standard_simplex(2)
        assert s.face(0).vertices == ((1.0, 0.0), (0.0, 1.0))
        assert s.face(2).vertices == ((0.0, 0.0), (1.0, 0.0))


class TestChain:
    def test_combines_identical_vertex_lists(self):
        s = standard_simplex(2)
        chain = Chain.build([(1.0, s), (2.5, s)])
        assert chain.terms == ((3.5, s),)

    def test_opposite_orientation_is_kept_apart(self):
        s = Simplex(((0,), (1,)))
        chain = Chain.build([(1.0, s), (1.0, Simplex(((1,), (0,))))])
        assert len(chain.terms) == 2

    def test_cancellation(self):
        c = Chain.build([(2.0, standard_simplex(2)), (-1.0, Simplex(((0, 0), (1, 1), (0, 1))))])
        assert (c + (-c)).is_empty
        assert c.scale(0.0).is_empty

    def test_mixed_degrees_rejected(self):
        with pytest.raises(ShapeMismatch):
            Chain.build([(1.0, standard_simplex(2)), (1.0, Simplex(((0, 0), (1, 0))))])


class TestBoundary:
    def test_segment(self):
        p0, p1 = (0.5,), (2.0,)
        assert weights_by_vertices(boundary(Simplex((p0, p1)))) == {(p1,): 1.0, (p0,): -1.0}

    def test_triangle(self):
        r0, r1, r2 = standard_simplex(2).vertices
        assert weights_by_vertices(boundary(standard_simplex(2))) == {
            (r1, r2): 1.0,
            (r0, r2): -1.0,
            (r0, r1): 1.0,
        }

    def test_zero_simplex_has_no_boundary(self):
        with pytest.raises(DegreeUnderflow):
            boundary(standard_simplex(0))
        with pytest.raises(DegreeUnderflow):
            boundary_chain(Chain.of(Simplex(((1.0, 2.0),))))

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_boundary_of_boundary_is_empty(self, k):
        assert boundary_chain(boundary(standard_simplex(k))).is_empty

    def test_boundary_of_boundary_random_chains(self, rng):
        for _ in range(10):
            chain = Chain.build([(float(rng.uniform(-2, 2)), random_simplex(rng, 3, 3)) for _ in range(3)])
            assert boundary_chain(boundary_chain(chain)).is_empty

    def test_weights_scale(self):
        s = standard_simplex(2)
        doubled = weights_by_vertices(boundary_chain(Chain.of(s, 2.0)))
        single = weights_by_vertices(boundary(s))
        assert doubled == {vertices: 2.0 * w for vertices, w in single.items()}

    def test_shared_faces_cancel(self):
        # unit square split along its diagonal
        lower = Simplex(((0, 0), (1, 0), (1, 1)))
        upper = Simplex(((0, 0), (1, 1), (0, 1)))
        edges = boundary_chain(Chain.build([(1.0, lower), (1.0, upper)]))
        assert len(edges.terms) == 4
        assert ((0.0, 0.0), (1.0, 1.0)) not in weights_by_vertices(edges)


class TestAffineMap:
    def test_standard_simplex_is_identity(self):
        phi = affine_map(standard_simplex(3))
        assert phi.components == (Var(1), Var(2), Var(3))

    def test_segment(self):
        phi = affine_map(Simplex(((1,), (3,))))
        assert phi([0.25]) == [1.5]
        assert phi.domain_dim == 1 and phi.codomain_dim == 1

    def test_maps_vertices(self, rng):
        s = random_simplex(rng, 3, 2)
        phi = affine_map(s)
        for t, vertex in zip([[0, 0], [1, 0], [0, 1]], s.vertices):
            np.testing.assert_allclose(phi(t), vertex, rtol=0, atol=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateSimplex):
            affine_map(Simplex(((0, 0), (1, 1), (2, 2))))


class TestSmoothMap:
    def test_jacobian(self):
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2")))
        assert phi.jacobian[0][1] == Const(1.0)
        assert evaluate(phi.jacobian[0][0], [3.0, 0.0]) == 6.0
        assert phi.jacobian[1] == (Var(2), Var(1))

    def test_components_outside_domain(self):
        with pytest.raises(ShapeMismatch):
            SmoothMap(1, (parse("x2"),))

    def test_compose(self):
        phi = SmoothMap(1, (parse("x1^2"), parse("1 - x1")))
        assert evaluate(phi.compose(parse("x1*x2")), [3.0]) == -18.0
        with pytest.raises(ShapeMismatch):
            phi.compose(parse("x3"))


class TestPullback:
    def test_square_map_one_form(self):
        phi = SmoothMap(1, (parse("x1^2"),))
        pulled = pullback_log(phi, LogForm.build(1, 1, {(1,): parse("sin(x1)")}))
        t = 0.7
        assert evaluate(pulled.coefficient((1,)), [t]) == pytest.approx(math.sin(t * t) * 2 * t, rel=1e-15)

    def test_identity_map_only_substitutes(self):
        omega = LogForm.build(3, 2, {(1, 2): parse("x1*x3"), (2, 3): parse("exp(x2)")})
        assert pullback_log(identity_map(3), omega) == omega

    def test_linear_map_scales_by_determinant(self):
        phi = SmoothMap(2, (parse("2*x1 + x2"), parse("x1 + 3*x2")))
        pulled = pullback_log(phi, LogForm.build(2, 2, {(1, 2): parse("1")}))
        assert pulled.coefficient((1, 2)) == Const(5.0)

    def test_zero_form_composes(self):
        phi = SmoothMap(1, (parse("x1"), parse("2*x1")))
        pulled = pullback_log(phi, LogForm.build(2, 0, {(): parse("x1*x2")}))
        assert evaluate(pulled.coefficient(()), [3.0]) == 18.0

    def test_shape_checks(self):
        phi = SmoothMap(1, (parse("x1"), parse("x1")))
        with pytest.raises(ShapeMismatch):
            pullback_log(phi, LogForm.build(3, 1, {(1,): parse("1")}))
        with pytest.raises(ShapeMismatch):
            pullback_log(phi, LogForm.build(2, 2, {(1, 2): parse("1")}))

    def test_product_pullback(self):
        phi = SmoothMap(1, (parse("x1^2"),))
        pulled = pullback_product(phi, form(1, 1, dx1="exp(x1) + 1"))
        t = 0.8
        expected = (math.exp(t * t) + 1) ** (2 * t)
        assert evaluate_form(pulled, [t])[(1,)] == pytest.approx(expected, rel=1e-13)

    def test_identity_form_pulls_back_to_identity(self):
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2"), parse("sin(x1)")))
        assert pullback_product(phi, identity_form(3, 2)) == identity_form(2, 2)

    def test_naturality_of_q(self, rng):
        # q commutes with pullback: phi*(q alpha) = q(phi* alpha)
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2")))
        alpha = form(2, 1, dx1="exp(x1*x2)")
        points = rng.uniform(0.1, 0.9, size=(50, 2))
        left = pullback_product(phi, q_diff(alpha))
        right = q_diff(pullback_product(phi, alpha))
        assert forms_equal(left, right, points, tol=1e-8)

    def test_naturality_of_q_on_zero_forms(self, rng):
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2"), parse("x2^3 + 1")))
        f = ProductForm.build(3, 0, {(): parse("exp(x1*x2 + x3^2)")})
        points = rng.uniform(0.1, 0.9, size=(50, 2))
        left = pullback_product(phi, q_diff(f))
        right = q_diff(pullback_product(phi, f))
        assert (left.n, left.p) == (2, 1)
        assert forms_equal(left, right, points, tol=1e-8)

    @pytest.mark.parametrize("p", [0, 1])
    def test_naturality_under_polynomial_map(self, rng, p):
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2 - x2"), parse("x2^2 + 3*x1")))
        alpha = dense_form(rng, 3, p)
        points = rng.uniform(0.1, 0.9, size=(50, 2))
        left = pullback_product(phi, q_diff(alpha))
        right = q_diff(pullback_product(phi, alpha))
        assert forms_equal(left, right, points, tol=1e-8)

    def test_naturality_random(self, rng):
        phi = SmoothMap(3, (parse("x1 + x2*x3"), parse("x2^2 + 1"), parse("x3*x1")))
        alpha = dense_form(rng, 3, 1)
        left = pullback_product(phi, q_diff(alpha))
        right = q_diff(pullback_product(phi, alpha))
        assert forms_equal(left, right, tol=1e-8)

    def test_zero_form_wedge_commutes_with_pullback(self, rng):
        phi = SmoothMap(2, (parse("x1 + x2"), parse("x2*x1"), parse("x1^2")))
        alpha, beta = dense_form(rng, 3, 0), dense_form(rng, 3, 0)
        left = pullback_product(phi, wedge_p(alpha, beta))
        right = wedge_p(pullback_product(phi, alpha), pullback_product(phi, beta))
        assert forms_equal(left, right, tol=1e-10)

    def test_degree_above_domain_is_rejected(self):
        phi = SmoothMap(1, (parse("x1"), parse("x1^2")))
        with pytest.raises(ShapeMismatch):
            pullback_product(phi, form(2, 2, dx1dx2="exp(x1)"))

    def test_curve_pullback_matches_line_integrand(self):
        # gamma(t) = (cos t, sin t) pulls (x1 dx2 - x2 dx1) back to dt
        phi = SmoothMap(1, (parse("cos(x1)"), parse("sin(x1)")))
        omega = LogForm.build(2, 1, {(1,): parse("0 - x2"), (2,): parse("x1")})
        pulled = pullback_log(phi, omega)
        for t in (0.0, 0.4, 2.5):
            assert evaluate(pulled.coefficient((1,)), [t]) == pytest.approx(1.0, rel=1e-15)


class TestPullbackLogging:
    def test_debug_message_names_both_forms(self):
        phi = SmoothMap(1, (parse("x1^2"),))
        messages = []
        handler = logger.add(messages.append, level="DEBUG", format="{message}")
        try:
            pullback_log(phi, LogForm.build(1, 1, {(1,): parse("sin(x1)")}))
        finally:
            logger.remove(handler)
        assert any(m.startswith("Pullback of dx1:sin(x1) -> dx1:") for m in messages)

    def test_forms_are_not_printed_when_debug_is_off(self, monkeypatch):
        phi = SmoothMap(2, (parse("x1^2 + x2"), parse("x1*x2"), parse("sin(x1)")))
        omega = LogForm.build(3, 2, {(1, 2): parse("x1*x3"), (2, 3): parse("exp(x2)")})
        logger.remove()
        logger.add(sys.stderr, level="WARNING")

        def refuse(e):
            raise AssertionError(f"printed {e!r} with debug logging off")

        monkeypatch.setattr(expr_module, "to_text", refuse)
        pulled = pullback_log(phi, omega)
        assert (pulled.n, pulled.p) == (2, 2)
