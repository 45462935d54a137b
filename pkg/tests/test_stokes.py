import math

import numpy as np
import pytest

from conftest import form

from app.calculus.expr import Const, evaluate, parse
from app.calculus.forms import ProductForm
from app.calculus.geometry import Chain, Simplex, boundary, standard_simplex
from app.calculus.stokes import (
    SUITE_SHAPES,
    log_product_integral,
    product_integral_over_chain,
    proof_identity_check,
    random_case,
    random_exponential_field,
    random_simplex,
    run_suite,
    stokes_check,
    suite_cases,
)
from app.errors import DegenerateSimplex, PositivityViolation, ShapeMismatch


def zero_form(n, text):
    return ProductForm.build(n, 0, {(): parse(text)})


class TestProductIntegral:
    def test_zero_form_over_point_chain(self, gauss16):
        chain = boundary(Simplex(((0,), (1,))))
        assert product_integral_over_chain(zero_form(1, "exp(x1)"), chain, gauss16) == pytest.approx(math.e, rel=1e-15)

    def test_one_form_over_triangle_boundary(self, gauss16):
        alpha = form(2, 1, dx1="exp(x1*x2)")
        value = product_integral_over_chain(alpha, boundary(standard_simplex(2)), gauss16)
        assert value == pytest.approx(math.exp(-1 / 6), rel=1e-13)

    def test_weights_are_exponents(self, gauss16):
        alpha = form(2, 1, dx1="exp(x1*x2)", dx2="x1 + 2")
        chain = Chain.build([(1.0, Simplex(((0, 0), (1, 0.5)))), (-0.5, Simplex(((1, 0.5), (0.2, 1))))])
        once = product_integral_over_chain(alpha, chain, gauss16)
        twice = product_integral_over_chain(alpha, chain.scale(2.0), gauss16)
        assert twice == pytest.approx(once ** 2, rel=1e-13)

    def test_empty_chain(self):
        assert product_integral_over_chain(form(2, 1, dx1="5"), Chain.build([], degree=1, dimension=2)) == 1.0

    def test_identity_form_integrates_to_one(self, gauss16):
        assert log_product_integral(form(2, 2), Chain.of(standard_simplex(2)), gauss16) == 0.0

    def test_positivity_violation(self, gauss16):
        with pytest.raises(PositivityViolation):
            product_integral_over_chain(form(1, 1, dx1="x1 - 0.5"), Chain.of(Simplex(((0,), (1,)))), gauss16)

    def test_shape_checks(self, gauss16):
        alpha = form(2, 1, dx1="2")
        with pytest.raises(ShapeMismatch):
            product_integral_over_chain(alpha, Chain.of(standard_simplex(2)), gauss16)
        with pytest.raises(ShapeMismatch):
            product_integral_over_chain(alpha, Chain.of(Simplex(((0, 0, 0), (1, 0, 0)))), gauss16)


class TestStokesCheck:
    def test_zero_form_on_unit_segment(self, gauss16):
        report = stokes_check(zero_form(1, "exp(x1)"), Chain.of(Simplex(((0,), (1,)))), gauss16)
        assert report.lhs == pytest.approx(math.e, rel=1e-15)
        assert report.rhs == pytest.approx(math.e, rel=1e-14)
        assert report.log_discrepancy <= 1e-14

    def test_one_form_on_standard_triangle(self, gauss16):
        report = stokes_check(form(2, 1, dx1="exp(x1*x2)"), Chain.of(standard_simplex(2)), gauss16)
        assert report.lhs == pytest.approx(math.exp(-1 / 6), rel=1e-13)
        assert report.rhs == pytest.approx(math.exp(-1 / 6), rel=1e-13)
        assert report.log_discrepancy <= 1e-8
        assert len(report.breakdown) == 1

    def test_constant_coefficients(self, gauss16):
        alpha = form(3, 1, dx1="2", dx2="7", dx3="0.5")
        report = stokes_check(alpha, Chain.of(Simplex(((0, 0, 0), (1, 0.2, 0), (0.3, 1, 0.5)))), gauss16)
        assert report.rhs == 1.0
        assert report.lhs == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("n,a,b", [(1, [0.2], [1.7]), (2, [0.1, 0.2], [0.7, 0.9])])
    def test_zero_form_is_ratio_of_endpoint_values(self, gauss16, n, a, b):
        f = "2 + sin(x1)" if n == 1 else "exp(x1*x2)"
        report = stokes_check(zero_form(n, f), Chain.of(Simplex((tuple(a), tuple(b)))), gauss16)
        expected = evaluate(parse(f), b) / evaluate(parse(f), a)
        assert report.lhs == pytest.approx(expected, rel=1e-10)
        assert report.rhs == pytest.approx(expected, rel=1e-10)

    def test_chain_report_is_consistent(self, gauss16):
        alpha = form(2, 1, dx1="exp(x1*x2)", dx2="exp(x1 - x2^2)")
        lower = Simplex(((0, 0), (1, 0), (1, 1)))
        upper = Simplex(((0, 0), (1, 1), (0, 1)))
        report = stokes_check(alpha, Chain.build([(2.0, lower), (-0.5, upper)]), gauss16)
        assert report.log_rhs == pytest.approx(math.fsum(entry.log_interior for entry in report.breakdown), abs=0)
        assert report.log_discrepancy <= math.fsum(entry.log_discrepancy for entry in report.breakdown) + 1e-12
        assert [entry.weight for entry in report.breakdown] == [2.0, -0.5]

    def test_chain_degree_must_exceed_form_degree(self, gauss16):
        with pytest.raises(ShapeMismatch):
            stokes_check(form(2, 1, dx1="2"), Chain.of(Simplex(((0, 0), (1, 0)))), gauss16)

    def test_degenerate_simplex(self, gauss16):
        with pytest.raises(DegenerateSimplex):
            stokes_check(form(2, 1, dx1="exp(x1*x2)"), Chain.of(Simplex(((0, 0), (1, 1), (2, 2)))), gauss16)
        with pytest.raises(DegenerateSimplex):
            stokes_check(form(2, 1, dx1="exp(x1*x2)"), Chain.of(Simplex(((0, 0), (0, 0), (1, 0)))), gauss16)


class TestRandomizedSuite:
    def test_case_shapes(self, rng):
        for n, p in SUITE_SHAPES:
            alpha, chain = random_case(rng, n, p)
            assert (alpha.n, alpha.p) == (n, p)
            assert (chain.dimension, chain.degree) == (n, p + 1)
            assert 1 <= len(chain.terms) <= 2

    def test_case_requires_room(self, rng):
        with pytest.raises(ShapeMismatch):
            random_case(rng, 2, 2)

    def test_random_simplex_is_well_conditioned(self, rng):
        for _ in range(20):
            assert random_simplex(rng, 3, 2).gram_determinant() >= 1e-3

    def test_suite_is_reproducible(self):
        first, second = suite_cases(5, seed=3), suite_cases(5, seed=3)
        assert [alpha for alpha, _ in first] == [alpha for alpha, _ in second]
        assert [chain for _, chain in first] == [chain for _, chain in second]

    def test_hundred_cases(self, gauss16):
        reports = run_suite(suite_cases(100, seed=0), gauss16)
        assert len(reports) == 100
        worst = max(report.log_discrepancy for report in reports)
        assert worst <= 1e-8


class TestProofIdentity:
    def test_constant(self, gauss16):
        report = proof_identity_check(Const(3.0), 1, gauss16)
        assert report.lhs == pytest.approx(1.0, abs=1e-14)
        assert report.rhs == 1.0
        assert report.closed_form == 1.0

    def test_exponential_of_last_coordinate(self, gauss16):
        report = proof_identity_check(parse("exp(x2)"), 1, gauss16)
        for value in (report.lhs, report.rhs, report.closed_form):
            assert value == pytest.approx(math.exp(-0.5), rel=1e-13)

    def test_mixed_exponential(self, gauss16):
        report = proof_identity_check(parse("exp(x1*x2)"), 1, gauss16)
        assert report.closed_form == pytest.approx(math.exp(-1 / 6), rel=1e-13)
        assert report.max_discrepancy <= 1e-10

    def test_random_fields(self, gauss16):
        rng = np.random.default_rng(5)
        for i in range(20):
            n = 1 + i % 2
            report = proof_identity_check(random_exponential_field(rng, n + 1), n, gauss16)
            assert report.max_discrepancy <= 1e-8

    def test_shape_checks(self):
        with pytest.raises(ShapeMismatch):
            proof_identity_check(parse("x1"), 0)
        with pytest.raises(ShapeMismatch):
            proof_identity_check(parse("exp(x3)"), 1)
