"""Coefficient-function expression language.

All coefficient functions (connection coefficients, form and bivector
components, loop parametrizations) are written in a small arithmetic
language over declared chart coordinates.  Grammar, whitespace-insensitive:

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | atom ("^" integer)?
    atom   := number | ident | ident "(" expr ("," expr)? ")" | "(" expr ")"

Numbers are decimal with optional fraction and exponent (``4.0e-2``).
``^`` takes a literal (possibly negative) integer exponent; general powers
are spelled ``exp(b*log(a))``.  There is no implicit multiplication.

Functions: sin, cos, tan, exp, log, sqrt (unary) and atan2 (binary).

``parse(pretty(e))`` is structurally identical to ``e`` for every AST the
parser or the builders in this package can produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

__all__ = [
    "Expr", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "ExprError", "DslSyntaxError", "UnknownIdentifierError", "ArityError",
    "parse", "pretty", "variables", "derive", "FUNCTIONS",
]

FUNCTIONS = {"sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "sqrt": 1, "atan2": 2}


class ExprError(ValueError):
    """Base class for expression-language errors."""


class DslSyntaxError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownIdentifierError(DslSyntaxError):
    def __init__(self, name: str, line: int, col: int):
        DslSyntaxError.__init__(self, f"unknown identifier {name!r}", line, col)
        self.name = name


class ArityError(DslSyntaxError):
    def __init__(self, name: str, expected: int, got: int, line: int, col: int):
        DslSyntaxError.__init__(
            self, f"{name} takes {expected} argument(s), got {got}", line, col)
        self.name = name


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Num | Var | Neg | Add | Sub | Mul | Div | Pow | Call


# ---------------------------------------------------------------------------
# tokenizer

@dataclass(frozen=True)
class _Token:
    kind: str          # "num", "ident", "op", "end"
    text: str
    line: int
    col: int
    is_integer: bool = False


_OPS = set("+-*/^(),")


def _tokenize(source: str) -> Iterator[_Token]:
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            is_integer = True
            if j < n and source[j] == ".":
                j += 1
                if j >= n or not source[j].isdigit():
                    raise DslSyntaxError("malformed number", start_line, start_col)
                while j < n and source[j].isdigit():
                    j += 1
                is_integer = False
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k >= n or not source[k].isdigit():
                    raise DslSyntaxError("malformed exponent", start_line, start_col)
                while k < n and source[k].isdigit():
                    k += 1
                j = k
                is_integer = False
            text = source[i:j]
            col += j - i
            i = j
            yield _Token("num", text, start_line, start_col, is_integer)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            yield _Token("ident", text, start_line, start_col)
            continue
        if c in _OPS:
            i += 1
            col += 1
            yield _Token("op", c, start_line, start_col)
            continue
        raise DslSyntaxError(f"unexpected character {c!r}", line, col)
    yield _Token("end", "", line, col)


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, source: str, coords: Sequence[str]):
        self.tokens = list(_tokenize(source))
        self.pos = 0
        self.coords = set(coords)

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise DslSyntaxError(f"expected {text!r}", tok.line, tok.col)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise DslSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        e = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            e = Pow(e, self.integer())
        return e

    def integer(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1
        tok = self.peek()
        if tok.kind != "num" or not tok.is_integer:
            raise DslSyntaxError("exponent must be an integer", tok.line, tok.col)
        self.advance()
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(tok.text, tok.line, tok.col)
                self.advance()
                args = [self.expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect_op(")")
                arity = FUNCTIONS[tok.text]
                if len(args) != arity:
                    raise ArityError(tok.text, arity, len(args), tok.line, tok.col)
                return Call(tok.text, tuple(args))
            if tok.text not in self.coords:
                raise UnknownIdentifierError(tok.text, tok.line, tok.col)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise DslSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.line, tok.col)


def parse(source: str, coords: Sequence[str]) -> Expr:
    """Parse ``source`` against the declared coordinate names."""
    return _Parser(source, coords).parse()


# ---------------------------------------------------------------------------
# pretty printer (exact inverse of the parser on ASTs)

def _p_expr(e: Expr) -> str:
    if isinstance(e, Add):
        return f"{_p_expr(e.left)} + {_p_term(e.right)}"
    if isinstance(e, Sub):
        return f"{_p_expr(e.left)} - {_p_term(e.right)}"
    return _p_term(e)


def _p_term(e: Expr) -> str:
    if isinstance(e, Mul):
        return f"{_p_term_left(e.left)}*{_p_factor(e.right)}"
    if isinstance(e, Div):
        return f"{_p_term_left(e.left)}/{_p_factor(e.right)}"
    return _p_factor(e)


def _p_term_left(e: Expr) -> str:
    # left operand of * or / may itself be a product chain
    if isinstance(e, (Mul, Div)):
        return _p_term(e)
    return _p_factor(e)


def _p_factor(e: Expr) -> str:
    if isinstance(e, Neg):
        return f"-{_p_factor(e.arg)}"
    if isinstance(e, Pow):
        return f"{_p_atom(e.base)}^{e.exponent}"
    return _p_atom(e)


def _p_atom(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(_p_expr(a) for a in e.args)})"
    return f"({_p_expr(e)})"


def pretty(e: Expr) -> str:
    """Render an AST; ``parse(pretty(e))`` reproduces ``e`` exactly."""
    return _p_expr(e)


def variables(e: Expr) -> set[str]:
    """Names of all coordinates appearing in the expression."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= variables(a)
        return out
    return variables(e.left) | variables(e.right)


# ---------------------------------------------------------------------------
# symbolic derivative (AST to AST; used to synthesize serializable
# coefficients such as curvature components — evaluation still goes
# through forward-mode jets)

ZERO = Num(0.0)
ONE = Num(1.0)


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 1.0


def add(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_zero(a) or _is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_zero(a):
        return ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def derive(e: Expr, name: str) -> Expr:
    """Partial derivative with respect to the coordinate ``name``.

    Only trivial zero/one pruning is applied; no general simplification.
    """
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == name else ZERO
    if isinstance(e, Neg):
        return neg(derive(e.arg, name))
    if isinstance(e, Add):
        return add(derive(e.left, name), derive(e.right, name))
    if isinstance(e, Sub):
        return sub(derive(e.left, name), derive(e.right, name))
    if isinstance(e, Mul):
        return add(mul(derive(e.left, name), e.right), mul(e.left, derive(e.right, name)))
    if isinstance(e, Div):
        # (u/v)' = u'/v - u*v'/v^2
        u, v = e.left, e.right
        return sub(div(derive(u, name), v), div(mul(u, derive(v, name)), Pow(v, 2)))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        du = derive(e.base, name)
        if e.exponent == 1:
            return du
        return mul(mul(Num(float(e.exponent)), Pow(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        if e.fn == "atan2":
            y, x = e.args
            dy, dx = derive(y, name), derive(x, name)
            denom = add(mul(x, x), mul(y, y))
            return div(sub(mul(x, dy), mul(y, dx)), denom)
        (u,) = e.args
        du = derive(u, name)
        if e.fn == "sin":
            return mul(Call("cos", (u,)), du)
        if e.fn == "cos":
            return neg(mul(Call("sin", (u,)), du))
        if e.fn == "tan":
            return div(du, Pow(Call("cos", (u,)), 2))
        if e.fn == "exp":
            return mul(e, du)
        if e.fn == "log":
            return div(du, u)
        if e.fn == "sqrt":
            return div(du, mul(Num(2.0), e))
        raise ExprError(f"no derivative rule for {e.fn}")
    raise ExprError(f"cannot differentiate {e!r}")
