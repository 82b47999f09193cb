"""Arc-weight expression language.

Arc weights are arithmetic/trigonometric expressions over constants and
current token counts, written in ASCII:

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | "pi" | "m" "(" IDENT ")" | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := "cos" | "sin" | "sqrt"

`m(p9)` reads the token count of place p9 from the marking the expression is
evaluated against.  There is no implicit multiplication; `^` is
right-associative; scientific-notation literals (`1e-28`) are accepted.

Two evaluators are provided: :func:`evaluate` walks the tree (the reference
semantics), and :func:`compile_fn` emits a plain Python callable over a dense
marking vector for use in hot simulation loops.  Tests assert they agree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from .errors import (
    DivisionByZeroError,
    EvaluationError,
    ExprSyntaxError,
    MalformedNumberError,
    NegativeSqrtError,
    NonFiniteResultError,
    UnknownFunctionError,
    UnknownPlaceError,
)

__all__ = [
    "WeightExpr",
    "Constant",
    "Pi",
    "MarkRef",
    "Negate",
    "Add",
    "Subtract",
    "Multiply",
    "Divide",
    "Power",
    "Cos",
    "Sin",
    "Sqrt",
    "parse",
    "evaluate",
    "free_places",
    "format_expr",
    "compile_fn",
]


# --- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class MarkRef:
    place: str


@dataclass(frozen=True)
class Negate:
    operand: "WeightExpr"


@dataclass(frozen=True)
class Add:
    left: "WeightExpr"
    right: "WeightExpr"


@dataclass(frozen=True)
class Subtract:
    left: "WeightExpr"
    right: "WeightExpr"


@dataclass(frozen=True)
class Multiply:
    left: "WeightExpr"
    right: "WeightExpr"


@dataclass(frozen=True)
class Divide:
    left: "WeightExpr"
    right: "WeightExpr"


@dataclass(frozen=True)
class Power:
    base: "WeightExpr"
    exponent: "WeightExpr"


@dataclass(frozen=True)
class Cos:
    operand: "WeightExpr"


@dataclass(frozen=True)
class Sin:
    operand: "WeightExpr"


@dataclass(frozen=True)
class Sqrt:
    operand: "WeightExpr"


WeightExpr = Union[
    Constant, Pi, MarkRef, Negate, Add, Subtract, Multiply, Divide, Power, Cos, Sin, Sqrt
]

_FUNCTIONS = {"cos": Cos, "sin": Sin, "sqrt": Sqrt}


# --- tokenizer ------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'ident' | one of + - * / ^ ( ) | 'end'
    text: str
    line: int
    column: int


def _tokenize(text: str, operators: tuple[str, ...] = ()) -> list[_Token]:
    """Token stream for the expression grammar.

    ``operators`` adds extra multi-character operator tokens (longest match
    first); the predicate language in :mod:`qpn.analysis` uses it for the
    comparison operators.
    """
    ordered_ops = sorted(operators, key=len, reverse=True)
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        matched_op = next((op for op in ordered_ops if text.startswith(op, i)), None)
        if matched_op is not None:
            tokens.append(_Token(matched_op, matched_op, line, col))
            i += len(matched_op)
            col += len(matched_op)
            continue
        if ch in "+-*/^()":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit() or ch == ".":
            match = _NUMBER_RE.match(text, i)
            if not match:
                raise MalformedNumberError(f"malformed number starting at {text[i:i+8]!r}", line, col)
            following = text[match.end()] if match.end() < n else ""
            if following == "." or following in ("e", "E"):
                # "1.2.3", or "1e"/"1e+" whose exponent digits are missing
                raise MalformedNumberError(
                    f"malformed number {text[i:match.end() + 1]!r}", line, col
                )
            tokens.append(_Token("num", match.group(), line, col))
            col += match.end() - i
            i = match.end()
            continue
        match = _IDENT_RE.match(text, i)
        if match:
            tokens.append(_Token("ident", match.group(), line, col))
            col += match.end() - i
            i = match.end()
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


tokenize = _tokenize  # shared with the predicate parser in qpn.analysis


# --- parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExprSyntaxError(
                f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                tok.line,
                tok.column,
                expected,
            )
        return self.advance()

    def parse_expr(self) -> WeightExpr:
        node = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            right = self.parse_term()
            node = Add(node, right) if op == "+" else Subtract(node, right)
        return node

    def parse_term(self) -> WeightExpr:
        node = self.parse_factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            right = self.parse_factor()
            node = Multiply(node, right) if op == "*" else Divide(node, right)
        return node

    def parse_factor(self) -> WeightExpr:
        if self.peek().kind == "-":
            self.advance()
            return Negate(self.parse_factor())
        return self.parse_power()

    def parse_power(self) -> WeightExpr:
        base = self.parse_atom()
        if self.peek().kind == "^":
            self.advance()
            return Power(base, self.parse_factor())
        return base

    def parse_atom(self) -> WeightExpr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            try:
                value = float(tok.text)
            except ValueError:
                raise MalformedNumberError(f"malformed number {tok.text!r}", tok.line, tok.column)
            if not math.isfinite(value):
                raise MalformedNumberError(f"non-finite literal {tok.text!r}", tok.line, tok.column)
            return Constant(value)
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")", ("')'",))
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name == "pi":
                return Pi()
            if name == "m":
                self.expect("(", ("'('",))
                ident = self.expect("ident", ("place identifier",))
                self.expect(")", ("')'",))
                return MarkRef(ident.text)
            if name in _FUNCTIONS:
                self.expect("(", ("'('",))
                node = self.parse_expr()
                self.expect(")", ("')'",))
                return _FUNCTIONS[name](node)
            if self.peek().kind == "(":
                raise UnknownFunctionError(
                    f"unknown function {name!r}", tok.line, tok.column, ("cos", "sin", "sqrt", "m")
                )
            raise ExprSyntaxError(
                f"unexpected identifier {name!r}", tok.line, tok.column,
                ("number", "'pi'", "'m(...)'", "function call", "'('"),
            )
        raise ExprSyntaxError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.line,
            tok.column,
            ("number", "'pi'", "'m(...)'", "function call", "'('", "'-'"),
        )


def parse(text: str) -> WeightExpr:
    """Parse expression text into its unique tree; whitespace-insensitive."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"trailing input {tok.text!r}", tok.line, tok.column, ("end of input",))
    return node


# --- evaluation -------------------------------------------------------------------


def evaluate(expr: WeightExpr, marking: Mapping[str, float]) -> float:
    """Evaluate against a place-id -> token-count mapping.

    Pure: the same (expr, marking) always yields the same value.  Raises
    UnknownPlaceError / DivisionByZeroError / NegativeSqrtError, and
    NonFiniteResultError if the final value overflows.
    """
    value = _eval(expr, marking)
    if not math.isfinite(value):
        raise NonFiniteResultError(f"expression evaluated to {value!r}")
    return value


def _eval(expr: WeightExpr, env: Mapping[str, float]) -> float:
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, Pi):
        return math.pi
    if isinstance(expr, MarkRef):
        try:
            return env[expr.place]
        except KeyError:
            raise UnknownPlaceError(f"unknown place {expr.place!r}") from None
    if isinstance(expr, Negate):
        return -_eval(expr.operand, env)
    if isinstance(expr, Add):
        return _eval(expr.left, env) + _eval(expr.right, env)
    if isinstance(expr, Subtract):
        return _eval(expr.left, env) - _eval(expr.right, env)
    if isinstance(expr, Multiply):
        return _eval(expr.left, env) * _eval(expr.right, env)
    if isinstance(expr, Divide):
        denom = _eval(expr.right, env)
        if denom == 0.0:
            raise DivisionByZeroError(f"division by zero in {format_expr(expr)}")
        return _eval(expr.left, env) / denom
    if isinstance(expr, Power):
        base = _eval(expr.base, env)
        exponent = _eval(expr.exponent, env)
        try:
            return math.pow(base, exponent)
        except ValueError:
            raise EvaluationError(f"invalid power {base!r} ^ {exponent!r}") from None
        except OverflowError:
            raise NonFiniteResultError(f"overflow in {base!r} ^ {exponent!r}") from None
    if isinstance(expr, Cos):
        return math.cos(_eval(expr.operand, env))
    if isinstance(expr, Sin):
        return math.sin(_eval(expr.operand, env))
    if isinstance(expr, Sqrt):
        operand = _eval(expr.operand, env)
        if operand < 0.0:
            raise NegativeSqrtError(f"sqrt of negative value {operand!r}")
        return math.sqrt(operand)
    raise TypeError(f"not a WeightExpr: {expr!r}")


def free_places(expr: WeightExpr) -> frozenset[str]:
    """Exactly the place ids referenced via m(...) anywhere in the tree."""
    out: set[str] = set()
    _collect(expr, out)
    return frozenset(out)


def _collect(expr: WeightExpr, out: set[str]) -> None:
    if isinstance(expr, MarkRef):
        out.add(expr.place)
    elif isinstance(expr, (Negate, Cos, Sin, Sqrt)):
        _collect(expr.operand, out)
    elif isinstance(expr, (Add, Subtract, Multiply, Divide)):
        _collect(expr.left, out)
        _collect(expr.right, out)
    elif isinstance(expr, Power):
        _collect(expr.base, out)
        _collect(expr.exponent, out)


# --- formatting ---------------------------------------------------------------

# precedence: +,- = 1; *,/ = 2; unary - = 3; ^ = 4; atoms = 5
_PREC = {
    Add: 1,
    Subtract: 1,
    Multiply: 2,
    Divide: 2,
    Negate: 3,
    Power: 4,
    Constant: 5,
    Pi: 5,
    MarkRef: 5,
    Cos: 5,
    Sin: 5,
    Sqrt: 5,
}


def format_expr(expr: WeightExpr) -> str:
    """Canonical rendering: parse(format_expr(e)) is structurally equal to e.

    Canonical trees carry non-negative constants (the parser never produces a
    negative Constant; negation is a Negate node).
    """
    return _fmt(expr, 0)


def _fmt(expr: WeightExpr, context: int) -> str:
    prec = _PREC[type(expr)]
    if isinstance(expr, Constant):
        text = _fmt_number(expr.value)
        if text.startswith("-"):
            # non-canonical negative constant: render as a negation
            return _fmt(Negate(Constant(-expr.value)), context)
        return text
    if isinstance(expr, Pi):
        return "pi"
    if isinstance(expr, MarkRef):
        return f"m({expr.place})"
    if isinstance(expr, Cos):
        return f"cos({_fmt(expr.operand, 0)})"
    if isinstance(expr, Sin):
        return f"sin({_fmt(expr.operand, 0)})"
    if isinstance(expr, Sqrt):
        return f"sqrt({_fmt(expr.operand, 0)})"
    if isinstance(expr, Negate):
        text = "-" + _fmt(expr.operand, 3)
    elif isinstance(expr, Add):
        text = f"{_fmt(expr.left, 1)}+{_fmt(expr.right, 2)}"
    elif isinstance(expr, Subtract):
        text = f"{_fmt(expr.left, 1)}-{_fmt(expr.right, 2)}"
    elif isinstance(expr, Multiply):
        text = f"{_fmt(expr.left, 2)}*{_fmt(expr.right, 3)}"
    elif isinstance(expr, Divide):
        text = f"{_fmt(expr.left, 2)}/{_fmt(expr.right, 3)}"
    elif isinstance(expr, Power):
        text = f"{_fmt(expr.base, 5)}^{_fmt(expr.exponent, 3)}"
    else:
        raise TypeError(f"not a WeightExpr: {expr!r}")
    return f"({text})" if prec < context else text


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


# --- compilation ---------------------------------------------------------------

_COMPILE_GLOBALS = {
    "_cos": math.cos,
    "_sin": math.sin,
    "_sqrt": math.sqrt,
    "_pow": math.pow,
    "_pi": math.pi,
    "__builtins__": {},
}


def compile_fn(expr: WeightExpr, place_index: Mapping[str, int]) -> Callable[[Sequence[float]], float]:
    """Compile to a callable over a dense marking vector.

    The emitted code is generated from the AST (never from user text) and
    agrees with :func:`evaluate` wherever the latter succeeds; runtime faults
    (division by zero, negative sqrt) surface as the underlying ValueError /
    ZeroDivisionError for the caller to wrap with context.
    """
    source = f"lambda m: {_emit(expr, place_index)}"
    return eval(source, dict(_COMPILE_GLOBALS))  # noqa: S307 - source built from our own AST


def _emit(expr: WeightExpr, index: Mapping[str, int]) -> str:
    if isinstance(expr, Constant):
        return repr(expr.value)
    if isinstance(expr, Pi):
        return "_pi"
    if isinstance(expr, MarkRef):
        try:
            return f"m[{index[expr.place]}]"
        except KeyError:
            raise UnknownPlaceError(f"unknown place {expr.place!r}") from None
    if isinstance(expr, Negate):
        return f"(-{_emit(expr.operand, index)})"
    if isinstance(expr, Add):
        return f"({_emit(expr.left, index)}+{_emit(expr.right, index)})"
    if isinstance(expr, Subtract):
        return f"({_emit(expr.left, index)}-{_emit(expr.right, index)})"
    if isinstance(expr, Multiply):
        return f"({_emit(expr.left, index)}*{_emit(expr.right, index)})"
    if isinstance(expr, Divide):
        return f"({_emit(expr.left, index)}/{_emit(expr.right, index)})"
    if isinstance(expr, Power):
        return f"_pow({_emit(expr.base, index)},{_emit(expr.exponent, index)})"
    if isinstance(expr, Cos):
        return f"_cos({_emit(expr.operand, index)})"
    if isinstance(expr, Sin):
        return f"_sin({_emit(expr.operand, index)})"
    if isinstance(expr, Sqrt):
        return f"_sqrt({_emit(expr.operand, index)})"
    raise TypeError(f"not a WeightExpr: {expr!r}")
