"""
Commands shared by the CLI and the HTTP routes.
Each cmd_* function runs one computation and returns exactly one envelope.
"""

import shlex
from typing import Any, Callable, List, Optional, Sequence, Tuple

from loguru import logger
from pydantic import ValidationError

from app.api.formatter import formatter
from app.api.specs import form_table, parse_chain, parse_form
from app.calculus.expr import Const, parse
from app.calculus.forms import ProductForm, evaluate_form, q_diff, slot_label, wedge_p
from app.calculus.scalar import (
    geometric_integral,
    geometric_integral_signed,
    geometric_mean,
    product_derivative,
    sign_profile,
    volterra_integral,
)
from app.calculus.stokes import stokes_check
from app.errors import ProdCalcError, UsageError
from app.models import FormResult, Interval, OutputEnvelope, QuadratureRule


def echo(name: str, *flags: Tuple[str, Any]) -> str:
    """Command line echo, e.g. "pint --f 'exp(x1)' --a 0 --b 1"."""
    parts = [name]
    for flag, value in flags:
        if value is None or value is False:
            continue
        if value is True:
            parts.append(f"--{flag}")
        elif isinstance(value, (list, tuple)):
            parts.extend([f"--{flag}", ",".join(repr(float(v)) for v in value)])
        else:
            parts.extend([f"--{flag}", shlex.quote(str(value))])
    return " ".join(parts)


def run(command: str, compute: Callable[[], Tuple[Any, List[str]]]) -> OutputEnvelope:
    """Run a computation; toolkit errors and invalid records become error envelopes."""
    logger.info(f"Running {command}")
    try:
        result, diagnostics = compute()
    except ProdCalcError as e:
        return formatter.format_error_response(command, e)
    except ValidationError as e:
        messages = "; ".join(error["msg"] for error in e.errors())
        return formatter.format_error_response(command, UsageError(messages))
    return formatter.format_success_response(command, result, diagnostics)


def build_rule(order: Optional[int] = None, tol: Optional[float] = None, budget: Optional[int] = None) -> QuadratureRule:
    """Quadrature rule with the given overrides on top of the settings defaults."""
    overrides = {"order": order, "tolerance": tol, "budget": budget}
    return QuadratureRule(**{key: value for key, value in overrides.items() if value is not None})


def _form_result(alpha: ProductForm, at: Optional[Sequence[float]]) -> FormResult:
    values = None
    if at is not None:
        values = {slot_label(key): v for key, v in evaluate_form(alpha, list(at)).items()}
    elif all(isinstance(c, Const) for _, c in alpha.terms):
        values = {slot_label(key): v for key, v in evaluate_form(alpha, [0.0] * alpha.n).items()}
    return FormResult(
        degree=alpha.p, dimension=alpha.n, coefficients=form_table(alpha), values=values
    )


def cmd_pderiv(f: str, x: float) -> OutputEnvelope:
    """Multiplicative derivative of f at x."""
    return run(
        echo("pderiv", ("f", f), ("x", x)),
        lambda: (product_derivative(parse(f), x), []),
    )


def cmd_pint(
    f: str,
    a: float,
    b: float,
    signed: bool = False,
    order: Optional[int] = None,
    tol: Optional[float] = None,
    budget: Optional[int] = None,
) -> OutputEnvelope:
    """Geometric product integral; complex-valued with signed=True."""
    def compute():
        expression, interval, rule = parse(f), Interval(a=a, b=b), build_rule(order, tol, budget)
        if not signed:
            return geometric_integral(expression, interval, rule), []
        profile = sign_profile(expression, interval)
        notes = [f"negative measure {profile.negative_measure!r}"] if profile.roots else []
        return geometric_integral_signed(expression, interval, rule, profile), notes

    flags = (("f", f), ("a", a), ("b", b), ("signed", signed), ("order", order), ("tol", tol), ("budget", budget))
    return run(echo("pint", *flags), compute)


def cmd_geomean(
    f: str,
    a: float,
    b: float,
    order: Optional[int] = None,
    tol: Optional[float] = None,
    budget: Optional[int] = None,
) -> OutputEnvelope:
    """Geometric mean; a real payload when f never goes negative, {re, im} otherwise."""
    def compute():
        expression, interval = parse(f), Interval(a=a, b=b)
        profile = sign_profile(expression, interval)
        mean = geometric_mean(expression, interval, build_rule(order, tol, budget), profile)
        notes = [f"sign changes at x1 = {root!r}" for root in profile.roots]
        if profile.negative_measure == 0.0:
            return mean.re, notes
        return mean, notes

    flags = (("f", f), ("a", a), ("b", b), ("order", order), ("tol", tol), ("budget", budget))
    return run(echo("geomean", *flags), compute)


def cmd_vint(
    g: str,
    a: float,
    b: float,
    order: Optional[int] = None,
    tol: Optional[float] = None,
    budget: Optional[int] = None,
) -> OutputEnvelope:
    """Volterra product integral of 1 + g dx."""
    flags = (("g", g), ("a", a), ("b", b), ("order", order), ("tol", tol), ("budget", budget))
    return run(
        echo("vint", *flags),
        lambda: (volterra_integral(parse(g), Interval(a=a, b=b), build_rule(order, tol, budget)), []),
    )


def cmd_qdiff(form: str, n: int, at: Optional[Sequence[float]] = None) -> OutputEnvelope:
    """q differential of a product form."""
    return run(
        echo("qdiff", ("form", form), ("n", n), ("at", at)),
        lambda: (_form_result(q_diff(parse_form(form, n)), at), []),
    )


def cmd_wedge(left: str, right: str, n: int, at: Optional[Sequence[float]] = None) -> OutputEnvelope:
    """Product wedge of two product forms."""
    return run(
        echo("wedge", ("left", left), ("right", right), ("n", n), ("at", at)),
        lambda: (_form_result(wedge_p(parse_form(left, n), parse_form(right, n)), at), []),
    )


def cmd_stokes(
    form: str,
    n: int,
    chain: str,
    order: Optional[int] = None,
    tol: Optional[float] = None,
    budget: Optional[int] = None,
) -> OutputEnvelope:
    """Both sides of the product Stokes theorem for a form and a chain."""
    flags = (("form", form), ("n", n), ("chain", chain), ("order", order), ("tol", tol), ("budget", budget))
    return run(
        echo("stokes", *flags),
        lambda: (stokes_check(parse_form(form, n), parse_chain(chain), build_rule(order, tol, budget)), []),
    )
