"""
Shared fixtures for the test suites.
"""

import json

import numpy as np
import pytest

from app.calculus.expr import parse
from app.calculus.forms import ProductForm, multi_indices
from app.calculus.stokes import random_exponential_field
from app.cli import main
from app.models import QuadratureRule


@pytest.fixture
def gauss16():
    """Fixed order-16 rule, one cell."""
    return QuadratureRule(kind="gauss", order=16)


@pytest.fixture
def adaptive():
    return QuadratureRule(kind="adaptive", order=16, tolerance=1e-10)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def points3(rng):
    """100 random points in [0.1, 0.9]^3."""
    return rng.uniform(0.1, 0.9, size=(100, 3))


def dense_form(rng, n, p, degree=2):
    """Product form with an e^{poly} coefficient on every slot."""
    return ProductForm.build(
        n, p, {key: random_exponential_field(rng, n, degree) for key in multi_indices(n, p)}
    )


def form(n, p, **slots):
    """form(3, 1, dx1="2", dx3="exp(x1)") -> ProductForm."""
    table = {}
    for slot, text in slots.items():
        key = tuple(int(part) for part in slot.replace("dx", " ").split())
        table[key] = parse(text)
    return ProductForm.build(n, p, table)


@pytest.fixture
def run_cli(capsys):
    """Run the CLI in-process; returns (exit status, stdout)."""
    def runner(*argv):
        status = main(list(argv))
        return status, capsys.readouterr().out
    return runner


@pytest.fixture
def run_json(run_cli):
    """Run the CLI with --json; returns (exit status, parsed envelope)."""
    def runner(*argv):
        status, out = run_cli("--json", *argv)
        return status, json.loads(out)
    return runner
