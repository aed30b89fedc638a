"""A small exact expression language for sequence sums.

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
            | "sum" "(" IDENT "=" expr ".." expr "," expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-2^2`` is
-4 and ``2^-1`` is 1/2.  ``3/2`` written without spaces is a single rational
literal; any other ``/`` is division.  Sequence calls are ``F(n)``, ``L(n)``,
``P(n)``, ``Q(n)`` and ``U(a, b, r, n)``.  Sum bounds are inclusive.
"""

from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Union

from .identities import IdentityReport
from .sequences import FIBONACCI, LUCAS, PELL, PELL_LUCAS, SequenceParams, format_rational, term_fast

Pos = tuple[int, int]

SEQUENCE_ARITY = {"F": 1, "L": 1, "P": 1, "Q": 1, "U": 4}
_NAMED_PARAMS = {"F": FIBONACCI, "L": LUCAS, "P": PELL, "Q": PELL_LUCAS}


class ExprError(Exception):
    def __init__(self, message: str, pos: Pos = (0, 0), token: str | None = None):
        self.message = message
        self.line, self.column = pos
        self.token = token
        self.side: str | None = None
        super().__init__(message)

    def __str__(self):
        where = f"line {self.line}, column {self.column}: " if self.line else ""
        side = f"{self.side}: " if self.side else ""
        return f"{side}{where}{self.message}"


class ParseError(ExprError):
    pass


class EvalError(ExprError):
    pass


# -- AST ---------------------------------------------------------------------
# Positions are excluded from equality so that reparsed trees compare equal.


@dataclass(frozen=True)
class Num:
    value: Fraction
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    child: "Node"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Sum:
    var: str
    lower: "Node"
    upper: "Node"
    body: "Node"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


Node = Union[Num, Var, BinOp, Neg, Call, Sum]


# -- lexer -------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    pos: Pos
    value: Fraction | None = None


_OPERATORS = set("+-*/^(),=")


def tokenize(source: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)

    def digits_end(j):
        while j < n and source[j].isdigit():
            j += 1
        return j

    while i < n:
        ch = source[i]
        pos = (line, col)
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch.isdigit():
            j = digits_end(i)
            value = Fraction(int(source[i:j]))
            if j + 1 < n and source[j] == "/" and source[j + 1].isdigit():
                k = digits_end(j + 1)
                den = int(source[j + 1:k])
                if den == 0:
                    raise ParseError("zero denominator in rational literal", pos, source[i:k])
                value = Fraction(int(source[i:j]), den)
                j = k
            tokens.append(Token("num", source[i:j], pos, value))
        elif ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("ident", source[i:j], pos))
        elif source.startswith("..", i):
            j = i + 2
            tokens.append(Token("op", "..", pos))
        elif ch in _OPERATORS:
            j = i + 1
            tokens.append(Token("op", ch, pos))
        else:
            raise ParseError(f"unexpected character {ch!r}", pos, ch)
        col += j - i
        i = j
    tokens.append(Token("eof", "", (line, col)))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str):
        tok = self.tok
        shown = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {shown}", tok.pos, tok.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            self.fail("unexpected token")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            node = BinOp(op.text, node, self.term(), op.pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()
            node = BinOp(op.text, node, self.unary(), op.pos)
        return node

    def unary(self) -> Node:
        if self.at("-"):
            op = self.advance()
            return Neg(self.unary(), op.pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at("^"):
            op = self.advance()
            return BinOp("^", base, self.unary(), op.pos)
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(tok.value, tok.pos)
        if tok.kind == "ident":
            self.advance()
            if tok.text == "sum":
                return self.sum_tail(tok)
            if self.at("("):
                return self.call_tail(tok)
            return Var(tok.text, tok.pos)
        if self.at("("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('")

    def call_tail(self, name: Token) -> Node:
        if name.text not in SEQUENCE_ARITY:
            raise ParseError(f"unknown function {name.text!r}", name.pos, name.text)
        self.expect("(")
        args = [self.expr()]
        while self.at(","):
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = SEQUENCE_ARITY[name.text]
        if len(args) != arity:
            raise ParseError(
                f"{name.text} takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)}",
                name.pos, name.text,
            )
        return Call(name.text, tuple(args), name.pos)

    def sum_tail(self, kw: Token) -> Node:
        self.expect("(")
        var = self.tok
        if var.kind != "ident" or var.text == "sum":
            self.fail("expected summation index name")
        self.advance()
        self.expect("=")
        lower = self.expr()
        self.expect("..")
        upper = self.expr()
        self.expect(",")
        body = self.expr()
        self.expect(")")
        return Sum(var.text, lower, upper, body, kw.pos)


def parse(source: str) -> Node:
    """Parse ``source`` into an AST; raises :class:`ParseError` with line/column."""
    return _Parser(source).parse()


# -- printer -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _POW_PREC if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def to_source(node: Node) -> str:
    """Render an AST back to source text that reparses to an equal tree."""
    if isinstance(node, Num):
        return format_rational(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, Sum):
        return (f"sum({node.var} = {to_source(node.lower)}..{to_source(node.upper)}, "
                f"{to_source(node.body)})")
    if isinstance(node, Neg):
        return "-" + _wrap(node.child, _prec(node.child) < _NEG_PREC)
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) < _ATOM_PREC)
        right = _wrap(node.right, _prec(node.right) < _NEG_PREC)
        return f"{left}^{right}"
    prec = _PREC[node.op]
    left = _wrap(node.left, _prec(node.left) < prec)
    right = _wrap(node.right, _prec(node.right) <= prec)
    # spaces keep "x / 3 / 2" from lexing as x / (3/2)
    return f"{left} {node.op} {right}"


def _wrap(node: Node, paren: bool) -> str:
    text = to_source(node)
    return f"({text})" if paren else text


# -- evaluator ---------------------------------------------------------------


@functools.lru_cache(maxsize=1 << 16)
def _term(a: Fraction, b: Fraction, r: Fraction, n: int) -> Fraction:
    return term_fast(SequenceParams(a, b, r), n)


def _integer(value: Fraction, what: str, node: Node) -> int:
    if value.denominator != 1:
        raise EvalError(f"{what} must be an integer, got {format_rational(value)}", node.pos)
    return value.numerator


def evaluate(node: Node | str, env: Mapping[str, Fraction | int] | None = None) -> Fraction:
    """Evaluate exactly.  ``env`` binds free variables to rationals."""
    if isinstance(node, str):
        node = parse(node)
    scope = {name: Fraction(value) for name, value in (env or {}).items()}
    return compile_node(node)(scope)


Evaluator = Callable[[dict], Fraction]


def compile_node(node: Node) -> Evaluator:
    """Turn an AST into a closure over a ``{name: Fraction}`` scope.

    Compile once when evaluating the same tree under many bindings.
    """
    if isinstance(node, Num):
        value = node.value
        return lambda env: value
    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise EvalError(f"unbound variable {name!r}", node.pos, name) from None
        return var
    if isinstance(node, Neg):
        child = compile_node(node.child)
        return lambda env: -child(env)
    if isinstance(node, BinOp):
        return _compile_binop(node)
    if isinstance(node, Call):
        return _compile_call(node)
    return _compile_sum(node)


def _compile_binop(node: BinOp) -> Evaluator:
    left, right = compile_node(node.left), compile_node(node.right)
    op = node.op
    if op == "+":
        return lambda env: left(env) + right(env)
    if op == "-":
        return lambda env: left(env) - right(env)
    if op == "*":
        return lambda env: left(env) * right(env)
    if op == "/":
        def div(env):
            divisor = right(env)
            if divisor == 0:
                raise EvalError("division by zero", node.pos, "/")
            return left(env) / divisor
        return div

    def power(env):
        base = left(env)
        exponent = _integer(right(env), "exponent", node)
        if base == 0 and exponent < 0:
            raise EvalError("0 raised to a negative power", node.pos, "^")
        return base ** exponent
    return power


def _compile_call(node: Call) -> Evaluator:
    args = [compile_node(a) for a in node.args]
    what = f"{node.name} index"
    if node.name == "U":
        a, b, r, n = args

        def call_u(env):
            return _term(a(env), b(env), r(env), _integer(n(env), what, node))
        return call_u
    params = _NAMED_PARAMS[node.name]
    index = args[0]
    return lambda env: _term(params.a, params.b, params.r, _integer(index(env), what, node))


def _compile_sum(node: Sum) -> Evaluator:
    lower, upper, body = compile_node(node.lower), compile_node(node.upper), compile_node(node.body)
    var = node.var

    def total(env):
        lo = _integer(lower(env), "sum lower bound", node)
        hi = _integer(upper(env), "sum upper bound", node)
        if lo > hi + 1:
            raise EvalError(f"sum bounds {lo}..{hi} are reversed", node.pos, "sum")
        # copy so the index shadows an outer binding only inside the body
        inner = dict(env)
        acc = Fraction(0)
        for i in range(lo, hi + 1):
            inner[var] = Fraction(i)
            acc += body(inner)
        return acc
    return total


def check_equal(lhs_source: str, rhs_source: str,
                env: Mapping[str, Fraction | int] | None = None) -> IdentityReport:
    """Evaluate both expressions and compare them exactly."""
    start = time.perf_counter()
    values = []
    for side, source in (("lhs", lhs_source), ("rhs", rhs_source)):
        try:
            values.append(evaluate(source, env))
        except ExprError as err:
            err.side = side
            raise
    return IdentityReport(None, values[0], values[1], time.perf_counter() - start)
