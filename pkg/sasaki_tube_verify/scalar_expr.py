#!/usr/bin/python
"""Immutable scalar expressions over chart coordinates.

Every metric entry, structure component and Christoffel symbol in the engine is
a :class:`ScalarExpr`: a thin wrapper over a sympy expression restricted to a
closed function set. Numeric literals are held as exact rationals, so a
manifest value such as ``0.1`` evaluates to the same double the literal would.

Text syntax (manifest files)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := number | "pi" | xN | func "(" expr ")" | "(" expr ")"
    func   := sin | cos | exp | log | sqrt

Exponents must be rational numbers. Coordinates are written ``x1 .. xN`` and
map to indices ``0 .. N-1``.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable, Iterable, Mapping, Sequence
from fractions import Fraction
from functools import lru_cache
from tokenize import TokenError
from typing import Any

import numpy as np
import sympy
from agent_utilities.base_utilities import get_logger
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr as _sympy_parse,
    rationalize,
    standard_transformations,
)
from sympy.printing.str import StrPrinter

from sasaki_tube_verify.exceptions import ArityError, DomainError, ExpressionSyntaxError

logger = get_logger(__name__)

FUNCTIONS: dict[str, Any] = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
}
_FUNCTION_CLASSES = (sympy.sin, sympy.cos, sympy.exp, sympy.log)
_UNDEFINED = (sympy.zoo, sympy.nan, sympy.oo, -sympy.oo, sympy.I)
_TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)

_ALLOWED_TEXT = re.compile(r"[0-9A-Za-z_.+\-*/^()\s]*")
_WORD = re.compile(
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
)
_COORD_NAME = re.compile(r"x([1-9][0-9]*)")


@lru_cache(maxsize=None)
def _symbol(index: int) -> sympy.Symbol:
    return sympy.Symbol(f"x{index + 1}")


def _symbols(count: int) -> tuple[sympy.Symbol, ...]:
    return tuple(_symbol(i) for i in range(count))


def _coordinate_index(symbol: sympy.Symbol) -> int:
    match = _COORD_NAME.fullmatch(symbol.name)
    if match is None:
        raise ExpressionSyntaxError(f"Unknown symbol {symbol.name!r}")
    return int(match.group(1)) - 1


def _exact(value: Any) -> sympy.Expr:
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("Cannot use a boolean in a scalar expression")
    if isinstance(value, (int, np.integer)):
        return sympy.Integer(int(value))
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"Non-finite constant {value!r}")
        return sympy.Rational(value)
    raise TypeError(f"Cannot use {type(value).__name__} in a scalar expression")


class ScalarExpr:
    """An expression over chart coordinates.

    Equality and hashing are structural, inherited from the wrapped sympy tree.
    ``coords`` holds the zero-based indices of the coordinates that occur.
    """

    __slots__ = ("sym", "coords", "_compiled")

    def __init__(self, sym: sympy.Expr):
        if not isinstance(sym, sympy.Expr):
            raise TypeError(f"Expected a sympy expression, got {type(sym).__name__}")
        self.sym = sym
        self.coords: frozenset[int] = frozenset(
            _coordinate_index(s) for s in sym.free_symbols
        )
        self._compiled: Callable[..., Any] | None = None

    def __hash__(self) -> int:
        return hash(self.sym)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScalarExpr):
            return NotImplemented
        return self.sym == other.sym

    def __repr__(self) -> str:
        return f"ScalarExpr({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    # Arithmetic builders

    def __add__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(self.sym + _coerce(other).sym)

    def __radd__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(_coerce(other).sym + self.sym)

    def __sub__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(self.sym - _coerce(other).sym)

    def __rsub__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(_coerce(other).sym - self.sym)

    def __mul__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(self.sym * _coerce(other).sym)

    def __rmul__(self, other: Any) -> ScalarExpr:
        return ScalarExpr(_coerce(other).sym * self.sym)

    def __truediv__(self, other: Any) -> ScalarExpr:
        return _quotient(self, _coerce(other))

    def __rtruediv__(self, other: Any) -> ScalarExpr:
        return _quotient(_coerce(other), self)

    def __pow__(self, exponent: int | Fraction) -> ScalarExpr:
        r = Fraction(exponent)
        if self.is_zero() and r < 0:
            raise DomainError("zero raised to a negative power")
        return ScalarExpr(self.sym ** sympy.Rational(r.numerator, r.denominator))

    def __neg__(self) -> ScalarExpr:
        return ScalarExpr(-self.sym)

    @property
    def is_const(self) -> bool:
        return not self.coords

    def is_zero(self) -> bool:
        return self.sym == sympy.S.Zero

    def is_one(self) -> bool:
        return self.sym == sympy.S.One


def const(value: float) -> ScalarExpr:
    return ScalarExpr(_exact(value))


def coord(index: int) -> ScalarExpr:
    if index < 0:
        raise ArityError(f"Coordinate index must be non-negative, got {index}")
    return ScalarExpr(_symbol(index))


ZERO = ScalarExpr(sympy.S.Zero)
ONE = ScalarExpr(sympy.S.One)


def _coerce(value: Any) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    return ScalarExpr(_exact(value))


def _quotient(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if b.is_zero():
        raise DomainError("division by zero")
    return ScalarExpr(a.sym / b.sym)


def add(*terms: ScalarExpr) -> ScalarExpr:
    return ScalarExpr(sympy.Add(*(t.sym for t in terms)))


def mul(*factors: ScalarExpr) -> ScalarExpr:
    return ScalarExpr(sympy.Mul(*(f.sym for f in factors)))


def neg(e: ScalarExpr) -> ScalarExpr:
    return -e


def sin(e: Any) -> ScalarExpr:
    return ScalarExpr(sympy.sin(_coerce(e).sym))


def cos(e: Any) -> ScalarExpr:
    return ScalarExpr(sympy.cos(_coerce(e).sym))


def exp(e: Any) -> ScalarExpr:
    return ScalarExpr(sympy.exp(_coerce(e).sym))


def log(e: Any) -> ScalarExpr:
    return ScalarExpr(sympy.log(_coerce(e).sym))


def sqrt(e: Any) -> ScalarExpr:
    return ScalarExpr(sympy.sqrt(_coerce(e).sym))


# Evaluation


def _arg_count(coords: frozenset[int]) -> int:
    return max(coords) + 1 if coords else 0


def _lambdify(count: int, body: Any) -> Callable[..., Any]:
    # Plain math module: singularities surface as Python exceptions, not nan.
    return sympy.lambdify(_symbols(count), body, modules="math")


def _check_arity(coords: frozenset[int], p: Sequence[float], dim: int | None) -> None:
    if dim is not None and len(p) != dim:
        raise ArityError(f"Expected {dim} coordinates, got {len(p)}")
    if coords and max(coords) >= len(p):
        raise ArityError(
            f"Expression uses x{max(coords) + 1} but the point has {len(p)} coordinates"
        )


def _call(fn: Callable[..., Any], count: int, p: Sequence[float]) -> Any:
    point = [float(x) for x in p[:count]]
    try:
        return fn(*point)
    except ZeroDivisionError as exc:
        raise DomainError(f"division by zero at {point}") from exc
    except (ValueError, OverflowError) as exc:
        raise DomainError(f"{exc} at {point}") from exc


def _real(value: Any, point: Sequence[float]) -> float:
    if isinstance(value, complex):
        raise DomainError(f"Complex value {value!r} at {list(point)}")
    return float(value)


def evaluate(e: ScalarExpr, p: Sequence[float], dim: int | None = None) -> float:
    """Evaluate ``e`` at the coordinate tuple ``p``.

    :param e: Expression to evaluate.
    :type e: ScalarExpr
    :param p: Coordinates of the point.
    :type p: Sequence[float]
    :param dim: Chart dimension the expression was built against, if known.
    :type dim: int | None
    :return: Value of the expression.
    :rtype: float
    :raises ArityError: If ``p`` has the wrong length.
    :raises DomainError: If a singularity is hit.
    """
    _check_arity(e.coords, p, dim)
    count = _arg_count(e.coords)
    if e._compiled is None:
        e._compiled = _lambdify(count, [e.sym])
    return _real(_call(e._compiled, count, p)[0], p)


class ExprProgram:
    """Many expressions compiled into one function.

    Used for whole tensor grids. Each output is computed by the same generated
    code :func:`evaluate` would run for that expression alone.
    """

    def __init__(self, exprs: Iterable[ScalarExpr]):
        self.exprs = tuple(exprs)
        self.coords = frozenset().union(*(e.coords for e in self.exprs))
        self._count = _arg_count(self.coords)
        self._fn = _lambdify(self._count, [e.sym for e in self.exprs])
        logger.debug("Compiled %d expressions over %d coordinates", len(self.exprs), self._count)

    def __len__(self) -> int:
        return len(self.exprs)

    def run(self, p: Sequence[float], dim: int | None = None) -> np.ndarray:
        _check_arity(self.coords, p, dim)
        values = _call(self._fn, self._count, p)
        return np.array([_real(v, p) for v in values], dtype=float)


def central_difference(
    e: ScalarExpr, i: int, p: Sequence[float], step: float = 1e-5
) -> float:
    forward = list(map(float, p))
    backward = list(forward)
    forward[i] += step
    backward[i] -= step
    return (evaluate(e, forward) - evaluate(e, backward)) / (2.0 * step)


# Simplification


def _fold_value(node: sympy.Expr) -> sympy.Expr | None:
    value = node.evalf(20)
    if not value.is_Number or not value.is_finite:
        return None
    folded = float(value)
    return sympy.Rational(folded) if math.isfinite(folded) else None


def simplify(e: ScalarExpr) -> ScalarExpr:
    """Fold coordinate-free subtrees into exact rationals of their double value.

    Zero and unit identities and double negation are already removed when a
    sympy tree is built. No trigonometric or algebraic rewriting is done.
    """
    # node -> (rebuilt node, coordinate-free)
    memo: dict[sympy.Expr, tuple[sympy.Expr, bool]] = {}

    def walk(node: sympy.Expr) -> tuple[sympy.Expr, bool]:
        if node in memo:
            return memo[node]
        if not node.args:
            result = (node, not isinstance(node, sympy.Symbol))
        else:
            parts = [walk(a) for a in node.args]
            args = tuple(part[0] for part in parts)
            rebuilt = node if args == node.args else node.func(*args)
            constant = all(part[1] for part in parts)
            if constant and rebuilt.args:
                folded = _fold_value(rebuilt)
                if folded is not None:
                    rebuilt = folded
            result = (rebuilt, constant)
        memo[node] = result
        return result

    return ScalarExpr(walk(e.sym)[0])


def differentiate(e: ScalarExpr, i: int) -> ScalarExpr:
    """Exact partial derivative of ``e`` in coordinate ``i``.

    :raises ArityError: If ``i`` is negative.
    """
    if i < 0:
        raise ArityError(f"Coordinate index must be non-negative, got {i}")
    if i not in e.coords:
        return ZERO
    return simplify(ScalarExpr(sympy.diff(e.sym, _symbol(i))))


def substitute(e: ScalarExpr, values: Mapping[int, float]) -> ScalarExpr:
    """Replace coordinates by constants, then simplify."""
    replacements = {_symbol(i): _exact(float(v)) for i, v in values.items() if i in e.coords}
    if not replacements:
        return e
    return simplify(ScalarExpr(e.sym.xreplace(replacements)))


# Text form


def _check_closed(expr: sympy.Expr, text: str) -> None:
    if expr.has(*_UNDEFINED):
        raise DomainError(f"Expression {text!r} is undefined")
    for node in sympy.preorder_traversal(expr):
        if isinstance(node, sympy.Symbol) or node.is_Number:
            continue
        if node in (sympy.pi, sympy.E):
            continue
        if isinstance(node, (sympy.Add, sympy.Mul, *_FUNCTION_CLASSES)):
            continue
        if isinstance(node, sympy.Pow):
            if not node.exp.is_Rational:
                raise ExpressionSyntaxError(f"Exponent must be a rational number in {text!r}")
            continue
        raise ExpressionSyntaxError(f"Unsupported construct {node} in {text!r}")


def _names(text: str, dim: int | None) -> dict[str, Any]:
    local: dict[str, Any] = {"pi": sympy.pi, **FUNCTIONS}
    for match in _WORD.finditer(text):
        name = match.group("name")
        if name is None or name in local:
            continue
        coordinate = _COORD_NAME.fullmatch(name)
        if coordinate is None:
            raise ExpressionSyntaxError(f"Unknown name {name!r} in {text!r}")
        index = int(coordinate.group(1)) - 1
        if dim is not None and index >= dim:
            raise ArityError(f"Coordinate {name} exceeds chart dimension {dim} in {text!r}")
        local[name] = _symbol(index)
    return local


def parse_expr(text: str, dim: int | None = None) -> ScalarExpr:
    """Parse manifest expression text into a :class:`ScalarExpr`.

    :param text: Infix expression text.
    :type text: str
    :param dim: Chart dimension; coordinates beyond it are rejected.
    :type dim: int | None
    :return: The parsed expression.
    :rtype: ScalarExpr
    :raises ExpressionSyntaxError: On malformed input or a construct outside the function set.
    :raises ArityError: If a coordinate exceeds ``dim``.
    :raises DomainError: If the text is a constant singularity such as ``1/0``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError(f"Empty expression {text!r}")
    if not _ALLOWED_TEXT.fullmatch(text):
        raise ExpressionSyntaxError(f"Unexpected character in {text!r}")
    local = _names(text, dim)
    try:
        parsed = _sympy_parse(text, local_dict=local, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TokenError, TypeError, AttributeError, ValueError) as exc:
        raise ExpressionSyntaxError(f"Cannot parse {text!r}: {exc}") from exc
    if isinstance(parsed, (int, Fraction)):
        parsed = sympy.sympify(parsed)
    if not isinstance(parsed, sympy.Expr):
        raise ExpressionSyntaxError(f"{text!r} is not a scalar expression")
    _check_closed(parsed, text)
    return ScalarExpr(parsed)


class _ManifestPrinter(StrPrinter):
    def _print_Exp1(self, expr: Any) -> str:
        return "exp(1)"


_PRINTER = _ManifestPrinter()


def to_text(e: ScalarExpr) -> str:
    """Render ``e`` in the manifest syntax; ``parse_expr`` inverts it."""
    return _PRINTER.doprint(e.sym).replace("**", "^")


def grid_program(grid: Sequence[Sequence[ScalarExpr]]) -> ExprProgram:
    """Compile a rectangular grid of expressions row by row."""
    return ExprProgram(e for row in grid for e in row)


__all__ = [
    "ExprProgram",
    "ONE",
    "ScalarExpr",
    "ZERO",
    "add",
    "central_difference",
    "const",
    "coord",
    "cos",
    "differentiate",
    "evaluate",
    "exp",
    "grid_program",
    "log",
    "mul",
    "neg",
    "parse_expr",
    "simplify",
    "sin",
    "sqrt",
    "substitute",
    "to_text",
]
