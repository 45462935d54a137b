"""
Expression language for scalar fields.
Parses text such as "x1^2 * sin(x2)" into an immutable tree, prints it back,
evaluates it over batches of points and differentiates it symbolically.

Grammar (unary minus binds tighter than ^, ^ is right-associative):

    expr  := term (('+' | '-') term)*
    term  := power (('*' | '/') power)*
    power := unary ('^' power)?
    unary := '-' unary | atom
    atom  := number | 'pi' | 'e' | xN | fn '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.errors import DomainError, ParseError, ShapeMismatch
from app.models import ParseDiagnostic


Number = Union[int, float]

# Printing precedence: higher binds tighter.
PREC_SUM = 1
PREC_PRODUCT = 2
PREC_POWER = 3
PREC_UNARY = 4
PREC_ATOM = 5


class Expr:
    """Base class of every expression node."""

    precedence: ClassVar[int] = PREC_ATOM

    @property
    def children(self) -> Tuple["Expr", ...]:
        return ()

    def rebuild(self, children: Sequence["Expr"]) -> "Expr":
        return self

    @cached_property
    def variables(self) -> FrozenSet[int]:
        """Indices of the variables referenced anywhere in the tree."""
        found: FrozenSet[int] = frozenset()
        for child in self.children:
            found |= child.variables
        return found

    @property
    def max_index(self) -> int:
        return max(self.variables, default=0)

    def _values(self, columns: List[np.ndarray], size: int) -> np.ndarray:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)

    # Operator overloads build trees; numbers are promoted to constants.
    def __add__(self, other: "ExprLike") -> "Expr":
        return Add(self, as_expr(other))

    def __radd__(self, other: "ExprLike") -> "Expr":
        return Add(as_expr(other), self)

    def __sub__(self, other: "ExprLike") -> "Expr":
        return Sub(self, as_expr(other))

    def __rsub__(self, other: "ExprLike") -> "Expr":
        return Sub(as_expr(other), self)

    def __mul__(self, other: "ExprLike") -> "Expr":
        return Mul(self, as_expr(other))

    def __rmul__(self, other: "ExprLike") -> "Expr":
        return Mul(as_expr(other), self)

    def __truediv__(self, other: "ExprLike") -> "Expr":
        return Div(self, as_expr(other))

    def __rtruediv__(self, other: "ExprLike") -> "Expr":
        return Div(as_expr(other), self)

    def __pow__(self, other: "ExprLike") -> "Expr":
        return Pow(self, as_expr(other))

    def __neg__(self) -> "Expr":
        return Neg(self)


ExprLike = Union[Expr, Number]


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError(f"constants must be finite, got {self.value}")
        object.__setattr__(self, "value", float(self.value))

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return PREC_UNARY if _is_negative(self.value) else PREC_ATOM

    def _values(self, columns, size):
        return np.full(size, self.value)


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ShapeMismatch(f"variable indices start at 1, got x{self.index}")

    @cached_property
    def variables(self) -> FrozenSet[int]:
        return frozenset({self.index})

    def _values(self, columns, size):
        return columns[self.index - 1]


@dataclass(frozen=True)
class Binary(Expr):
    left: Expr
    right: Expr

    symbol: ClassVar[str] = "?"

    @property
    def children(self):
        return (self.left, self.right)

    def rebuild(self, children):
        return type(self)(*children)


@dataclass(frozen=True)
class Add(Binary):
    symbol: ClassVar[str] = "+"
    precedence: ClassVar[int] = PREC_SUM

    def _values(self, columns, size):
        return _evaluate(self.left, columns, size) + _evaluate(self.right, columns, size)


@dataclass(frozen=True)
class Sub(Binary):
    symbol: ClassVar[str] = "-"
    precedence: ClassVar[int] = PREC_SUM

    def _values(self, columns, size):
        return _evaluate(self.left, columns, size) - _evaluate(self.right, columns, size)


@dataclass(frozen=True)
class Mul(Binary):
    symbol: ClassVar[str] = "*"
    precedence: ClassVar[int] = PREC_PRODUCT

    def _values(self, columns, size):
        return _evaluate(self.left, columns, size) * _evaluate(self.right, columns, size)


@dataclass(frozen=True)
class Div(Binary):
    symbol: ClassVar[str] = "/"
    precedence: ClassVar[int] = PREC_PRODUCT

    def _values(self, columns, size):
        numerator = _evaluate(self.left, columns, size)
        denominator = _evaluate(self.right, columns, size)
        if np.any(denominator == 0.0):
            raise DomainError(f"division by zero in {self}")
        return numerator / denominator


@dataclass(frozen=True)
class Pow(Binary):
    symbol: ClassVar[str] = "^"
    precedence: ClassVar[int] = PREC_POWER

    def _values(self, columns, size):
        base = _evaluate(self.left, columns, size)
        exponent = _evaluate(self.right, columns, size)
        if np.any(base < 0.0):
            # a negative base needs a constant integer exponent
            if self.right.variables or np.any(exponent != np.floor(exponent)):
                raise DomainError(f"negative base needs a constant integer exponent in {self}")
        if np.any((base == 0.0) & (exponent < 0.0)):
            raise DomainError(f"zero raised to a negative power in {self}")
        return np.power(base, exponent)


@dataclass(frozen=True)
class Unary(Expr):
    arg: Expr

    name: ClassVar[str] = "?"

    @property
    def children(self):
        return (self.arg,)

    def rebuild(self, children):
        return type(self)(*children)


@dataclass(frozen=True)
class Neg(Unary):
    name: ClassVar[str] = "-"
    precedence: ClassVar[int] = PREC_UNARY

    def _values(self, columns, size):
        return -_evaluate(self.arg, columns, size)


@dataclass(frozen=True)
class Exp(Unary):
    name: ClassVar[str] = "exp"

    def _values(self, columns, size):
        return np.exp(_evaluate(self.arg, columns, size))


@dataclass(frozen=True)
class Ln(Unary):
    name: ClassVar[str] = "ln"

    def _values(self, columns, size):
        values = _evaluate(self.arg, columns, size)
        if np.any(values <= 0.0):
            bad = float(values[values <= 0.0][0])
            raise DomainError(f"ln of non-positive value {bad!r} in {self}")
        return np.log(values)


@dataclass(frozen=True)
class Sin(Unary):
    name: ClassVar[str] = "sin"

    def _values(self, columns, size):
        return np.sin(_evaluate(self.arg, columns, size))


@dataclass(frozen=True)
class Cos(Unary):
    name: ClassVar[str] = "cos"

    def _values(self, columns, size):
        return np.cos(_evaluate(self.arg, columns, size))


@dataclass(frozen=True)
class Abs(Unary):
    name: ClassVar[str] = "abs"

    def _values(self, columns, size):
        return np.abs(_evaluate(self.arg, columns, size))


@dataclass(frozen=True)
class Sign(Unary):
    name: ClassVar[str] = "sign"

    def _values(self, columns, size):
        return np.sign(_evaluate(self.arg, columns, size))


FUNCTIONS: Dict[str, type] = {cls.name: cls for cls in (Exp, Ln, Sin, Cos, Abs, Sign)}
KEYWORD_CONSTANTS: Dict[str, float] = {"pi": math.pi, "e": math.e}

ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value: ExprLike) -> Expr:
    """Promote a number to a constant node."""
    if isinstance(value, Expr):
        return value
    return Const(float(value))


def _is_negative(value: float) -> bool:
    return math.copysign(1.0, value) < 0.0


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _evaluate(e: Expr, columns: List[np.ndarray], size: int) -> np.ndarray:
    with np.errstate(all="ignore"):
        values = e._values(columns, size)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"non-finite value (overflow) while evaluating {e}")
    return values


def evaluate_batch(e: Expr, points: np.ndarray) -> np.ndarray:
    """
    Evaluate an expression at many points at once.

    Args:
        e: Expression tree
        points: Array of shape (N, n) with n >= e.max_index

    Returns:
        Array of shape (N,)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ShapeMismatch(f"points must be a 2-D array, got shape {points.shape}")
    if points.shape[1] < e.max_index:
        raise ShapeMismatch(
            f"expression references x{e.max_index} but points have {points.shape[1]} coordinates"
        )
    columns = [points[:, i] for i in range(points.shape[1])]
    return _evaluate(e, columns, points.shape[0])


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """IEEE-double evaluation of an expression at one point."""
    return float(evaluate_batch(e, np.asarray([list(point)], dtype=float).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _format_number(value: float) -> str:
    magnitude = abs(value)
    if magnitude == math.pi:
        text = "pi"
    elif magnitude == math.e:
        text = "e"
    elif magnitude.is_integer() and magnitude < 1e16:
        text = str(int(magnitude))
    else:
        text = repr(magnitude)
    return f"-{text}" if _is_negative(value) else text


def _wrap(child: Expr, minimum: int) -> str:
    text = to_text(child)
    return f"({text})" if child.precedence < minimum else text


def to_text(e: Expr) -> str:
    """Canonical printer; the output parses back to a structurally equal tree."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Pow):
        return f"{_wrap(e.left, PREC_POWER + 1)}^{_wrap(e.right, PREC_POWER)}"
    if isinstance(e, Binary):
        return f"{_wrap(e.left, e.precedence)}{e.symbol}{_wrap(e.right, e.precedence + 1)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, PREC_UNARY)}"
    if isinstance(e, Unary):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"unknown expression node {type(e).__name__}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_VARIABLE_RE = re.compile(r"x([1-9]\d*)")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> List[Token]:
    """Split expression text into tokens, ending with an 'end' token."""
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN_RE.match(text, position)
        if not match or match.end() == position:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ParseError(ParseDiagnostic(
                offset=offset,
                message=f"unexpected character {text[offset]!r}",
                expected="number, variable, function or operator",
            ))
        kind = match.lastgroup or "op"
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class ExpressionParser:
    """Recursive-descent parser for the expression grammar."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.position = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.current
        self.position += 1
        return token

    def _fail(self, message: str, expected: Optional[str]) -> ParseError:
        offset = min(self.current.offset, max(len(self.text) - 1, 0))
        return ParseError(ParseDiagnostic(offset=offset, message=message, expected=expected))

    def _expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind == "end":
            found = self.current.text or "end of input"
            raise self._fail(f"unexpected {found!r}", repr(text))
        return self._advance()

    def parse(self) -> Expr:
        if self.current.kind == "end":
            raise ParseError(ParseDiagnostic(offset=0, message="empty expression", expected="expression"))
        tree = self._expr()
        if self.current.kind != "end":
            raise self._fail(f"unexpected {self.current.text!r}", "operator or end of input")
        return tree

    def _expr(self) -> Expr:
        tree = self._term()
        while self.current.kind == "op" and self.current.text in "+-":
            node = Add if self._advance().text == "+" else Sub
            tree = node(tree, self._term())
        return tree

    def _term(self) -> Expr:
        tree = self._power()
        while self.current.kind == "op" and self.current.text in "*/":
            node = Mul if self._advance().text == "*" else Div
            tree = node(tree, self._power())
        return tree

    def _power(self) -> Expr:
        base = self._unary()
        if self.current.kind == "op" and self.current.text == "^":
            self._advance()
            return Pow(base, self._power())
        return base

    def _unary(self) -> Expr:
        if self.current.kind == "op" and self.current.text == "-":
            self._advance()
            return Neg(self._unary())
        return self._atom()

    def _atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self._advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ParseError(ParseDiagnostic(
                    offset=token.offset, message=f"literal {token.text} is not finite", expected="finite number",
                ))
            return Const(value)
        if token.kind == "name":
            return self._name()
        if token.kind == "op" and token.text == "(":
            self._advance()
            inner = self._expr()
            self._expect(")")
            return inner
        found = token.text or "end of input"
        raise self._fail(f"unexpected {found!r}", "number, variable, function or '('")

    def _name(self) -> Expr:
        token = self._advance()
        if token.text in FUNCTIONS:
            self._expect("(")
            argument = self._expr()
            self._expect(")")
            return FUNCTIONS[token.text](argument)
        if token.text in KEYWORD_CONSTANTS:
            return Const(KEYWORD_CONSTANTS[token.text])
        variable = _VARIABLE_RE.fullmatch(token.text)
        if variable:
            return Var(int(variable.group(1)))
        raise ParseError(ParseDiagnostic(
            offset=token.offset,
            message=f"unknown name {token.text!r}",
            expected="variable x1..xN, pi, e or one of " + ", ".join(sorted(FUNCTIONS)),
        ))


def parse(text: str) -> Expr:
    """Parse expression text into a tree."""
    tree = ExpressionParser(text).parse()
    logger.debug("Parsed {!r} -> {}", text, tree)
    return tree


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------

def _const_value(e: Expr) -> Optional[float]:
    return e.value if isinstance(e, Const) else None


def _fold(e: Expr) -> Expr:
    """Replace an all-constant node by its value when it evaluates cleanly."""
    try:
        return Const(float(_evaluate(e, [], 1)[0]))
    except DomainError:
        return e


def _rewrite(e: Expr) -> Expr:
    if e.children and all(isinstance(child, Const) for child in e.children):
        return _fold(e)

    if isinstance(e, Binary):
        left, right = _const_value(e.left), _const_value(e.right)
        if isinstance(e, Add):
            if left == 0.0:
                return e.right
            if right == 0.0:
                return e.left
        elif isinstance(e, Sub):
            if right == 0.0:
                return e.left
            if left == 0.0:
                return _rewrite(Neg(e.right))
        elif isinstance(e, Mul):
            if left == 0.0 or right == 0.0:
                return ZERO
            if left == 1.0:
                return e.right
            if right == 1.0:
                return e.left
            if left == -1.0:
                return _rewrite(Neg(e.right))
        elif isinstance(e, Div):
            if right == 1.0:
                return e.left
            if left == 0.0:
                return ZERO
        elif isinstance(e, Pow):
            if right == 1.0:
                return e.left
            if right == 0.0 or left == 1.0:
                return ONE
    elif isinstance(e, Neg) and isinstance(e.arg, Neg):
        return e.arg.arg
    elif isinstance(e, Ln) and isinstance(e.arg, Exp):
        return e.arg.arg
    elif isinstance(e, Exp) and isinstance(e.arg, Ln):
        # valid wherever the original evaluates, i.e. where the argument is positive
        return e.arg.arg
    return e


def simplify(e: Expr) -> Expr:
    """Constant folding and identity elimination, bottom-up."""
    if not e.children:
        return e
    rebuilt = e.rebuild([simplify(child) for child in e.children])
    return _rewrite(rebuilt)


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace variables by expressions; unmapped variables are kept."""
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if not e.children or not e.variables.intersection(mapping):
        return e
    return e.rebuild([substitute(child, mapping) for child in e.children])


def depends_on(e: Expr, var: int) -> bool:
    return var in e.variables


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def _derivative(e: Expr, var: int) -> Expr:
    if not depends_on(e, var):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return Add(_derivative(e.left, var), _derivative(e.right, var))
    if isinstance(e, Sub):
        return Sub(_derivative(e.left, var), _derivative(e.right, var))
    if isinstance(e, Mul):
        return Add(
            Mul(_derivative(e.left, var), e.right),
            Mul(e.left, _derivative(e.right, var)),
        )
    if isinstance(e, Div):
        return Div(
            Sub(Mul(_derivative(e.left, var), e.right), Mul(e.left, _derivative(e.right, var))),
            Pow(e.right, Const(2.0)),
        )
    if isinstance(e, Pow):
        base, exponent = e.left, e.right
        if not depends_on(exponent, var):
            return Mul(Mul(exponent, Pow(base, Sub(exponent, ONE))), _derivative(base, var))
        return Mul(e, Add(
            Mul(_derivative(exponent, var), Ln(base)),
            Div(Mul(exponent, _derivative(base, var)), base),
        ))
    if isinstance(e, Neg):
        return Neg(_derivative(e.arg, var))

    inner = _derivative(e.arg, var)
    if isinstance(e, Exp):
        return Mul(inner, e)
    if isinstance(e, Ln):
        return Div(inner, e.arg)
    if isinstance(e, Sin):
        return Mul(inner, Cos(e.arg))
    if isinstance(e, Cos):
        return Neg(Mul(inner, Sin(e.arg)))
    if isinstance(e, Abs):
        # sign(u) * u', with sign(0) = 0 at the kink
        return Mul(Sign(e.arg), inner)
    if isinstance(e, Sign):
        return ZERO
    raise TypeError(f"cannot differentiate node {type(e).__name__}")


def diff(e: Expr, var: int) -> Expr:
    """Symbolic partial derivative with respect to x<var>."""
    if var < 1:
        raise ShapeMismatch(f"variable indices start at 1, got {var}")
    return simplify(_derivative(e, var))
