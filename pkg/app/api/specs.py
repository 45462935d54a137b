"""
Textual notations shared by the CLI and the HTTP API.

    form     "dx1:exp(x1*x2); dx2:x1^2+1"   or   "0:exp(x1)" for a 0-form
    simplex  "[(0,0),(1,0),(0,1)]"
    chain    "2*[(0,0),(1,0)] - [(1,0),(1,1)]"
    point    "0.5,0.25"
"""

import math
import re
from typing import Dict, List, Tuple

from app.calculus.expr import Expr, parse
from app.calculus.forms import ProductForm, multi_indices, slot_label
from app.calculus.geometry import Chain, Simplex
from app.errors import FormSpecError


_SLOT_RE = re.compile(r"dx([1-9]\d*)((?:\^dx[1-9]\d*)*)")
_TUPLE_RE = re.compile(r"\(([^()]*)\)")
_CHAIN_TERM_RE = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?:(?P<weight>[^\[\]*]+?)\s*\*\s*)?(?P<simplex>\[[^\[\]]*\])\s*"
)


def _number(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormSpecError(f"{what} {text.strip()!r} is not a number")
    if not math.isfinite(value):
        raise FormSpecError(f"{what} {text.strip()!r} is not finite")
    return value


def parse_slot(text: str) -> Tuple[int, ...]:
    """"0" -> (), "dx1^dx3" -> (1, 3); indices must strictly increase."""
    text = text.strip()
    if text == "0":
        return ()
    if not _SLOT_RE.fullmatch(text):
        raise FormSpecError(f"slot {text!r} is neither '0' nor of the form dxI^dxJ^...")
    key = tuple(int(part[2:]) for part in text.split("^"))
    if any(i >= j for i, j in zip(key, key[1:])):
        raise FormSpecError(f"slot {text!r} must list strictly increasing indices")
    return key


def parse_form(text: str, n: int) -> ProductForm:
    """Parse "slot:expr; slot:expr" into a product form in R^n."""
    table: Dict[Tuple[int, ...], Expr] = {}
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        slot, separator, body = chunk.partition(":")
        if not separator:
            raise FormSpecError(f"term {chunk.strip()!r} lacks a 'slot:expression' separator")
        key = parse_slot(slot)
        if key in table:
            raise FormSpecError(f"slot {slot_label(key)} appears twice")
        if key and key[-1] > n:
            raise FormSpecError(f"slot {slot_label(key)} does not exist in R^{n}")
        table[key] = parse(body.strip())

    if not table:
        raise FormSpecError("a form needs at least one 'slot:expression' term")
    degrees = {len(key) for key in table}
    if len(degrees) != 1:
        raise FormSpecError(f"all slots of a form must share one degree, got {sorted(degrees)}")
    return ProductForm.build(n, degrees.pop(), table)


def form_table(alpha: ProductForm) -> Dict[str, str]:
    """Every slot of the form with its coefficient text; absent slots show 1."""
    table = alpha.table
    return {
        slot_label(key): str(table[key]) if key in table else "1"
        for key in multi_indices(alpha.n, alpha.p)
    }


def parse_point(text: str) -> List[float]:
    """"0.5,0.25" or "(0.5, 0.25)" -> [0.5, 0.25]."""
    body = text.strip().strip("()[]")
    if not body:
        return []
    return [_number(part, "coordinate") for part in body.split(",")]


def parse_simplex(text: str) -> Simplex:
    """"[(0,0),(1,0),(0,1)]" -> Simplex."""
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise FormSpecError(f"simplex {body!r} must be a bracketed list of vertex tuples")
    inner = body[1:-1]
    if _TUPLE_RE.sub("", inner).replace(",", "").strip():
        raise FormSpecError(f"simplex {body!r} contains text outside its vertex tuples")
    vertices = []
    for match in _TUPLE_RE.finditer(inner):
        parts = [part for part in match.group(1).split(",") if part.strip()]
        vertices.append(tuple(_number(part, "coordinate") for part in parts))
    if not vertices:
        raise FormSpecError(f"simplex {body!r} has no vertices")
    return Simplex(tuple(vertices))


def parse_chain(text: str) -> Chain:
    """"w1*S1 + w2*S2"; a bare simplex has weight 1."""
    pairs = []
    position = 0
    text = text.strip()
    while position < len(text):
        match = _CHAIN_TERM_RE.match(text, position)
        if not match or match.end() == position:
            raise FormSpecError(f"cannot read a chain term at offset {position} of {text!r}")
        if pairs and not match.group("sign"):
            raise FormSpecError(f"chain terms must be joined by '+' or '-' (offset {position})")
        sign = -1.0 if match.group("sign") == "-" else 1.0
        weight = _number(match.group("weight"), "weight") if match.group("weight") else 1.0
        pairs.append((sign * weight, parse_simplex(match.group("simplex"))))
        position = match.end()
    if not pairs:
        raise FormSpecError("a chain needs at least one simplex")
    return Chain.build(pairs)

