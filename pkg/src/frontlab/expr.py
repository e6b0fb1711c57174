"""Scalar expressions in the coordinates (u, v).

Grammar (``^`` binds tightest and is right associative, then unary minus,
then ``* /``, then ``+ -``)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "u" | "v" | "pi" | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := sin | cos | tan | exp | log | sqrt | atan | abs

Expressions evaluate to :class:`~frontlab.jet.Jet2` objects, i.e. exact
truncated Taylor expansions, so every partial derivative used downstream comes
from here rather than from finite differences.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jet as J
from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "atan", "abs")
CONSTANTS = {"pi": math.pi}
VARIABLES = ("u", "v")


@dataclass(frozen=True)
class Num:
    text: str

    @property
    def value(self):
        return float(self.text)


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(_byte_offset(text, start), ["number", "name", "operator"], text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        _, _, pos = self.peek()
        raise ExprSyntaxError(_byte_offset(self.text, pos), expected, self.text)

    def expect_op(self, op):
        kind, val, _ = self.peek()
        if kind != "op" or val != op:
            self.fail(["'%s'" % op])
        self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(["operator", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.unary())
            else:
                return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(val)
        if kind == "name":
            self.advance()
            if val in VARIABLES:
                return Sym(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            raise UnknownIdentifier(val, _byte_offset(self.text, pos))
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail(["number", "name", "'('"])


def parse(text):
    """Parse ``text`` into an expression tree."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


# printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def to_string(node):
    """Render with the fewest parentheses that still re-parse to the same tree."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, (Sym, Const)):
        return node.name
    if isinstance(node, Call):
        return "%s(%s)" % (node.func, to_string(node.arg))
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        if _prec(node.arg) < 3:
            inner = "(%s)" % inner
        return "-" + inner
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) < 5:
            left = "(%s)" % left
        if _prec(node.right) < 3:
            right = "(%s)" % right
        return "%s^%s" % (left, right)
    if _prec(node.left) < p:
        left = "(%s)" % left
    if _prec(node.right) <= p:
        right = "(%s)" % right
    return "%s %s %s" % (left, node.op, right)


def is_constant(node):
    if isinstance(node, Sym):
        return False
    if isinstance(node, (Num, Const)):
        return True
    if isinstance(node, (Neg, Call)):
        return is_constant(node.arg)
    return is_constant(node.left) and is_constant(node.right)


# evaluation --------------------------------------------------------------
#
# A tree is compiled once into nested closures.  Constant subtrees are folded
# to plain floats, so jets are only built where (u, v) actually enter.


class _Context:
    def __init__(self, u, v, order):
        self.u = np.asarray(u, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.order = order
        self.shape = np.broadcast(self.u, self.v).shape

    def domain_error(self, node, mask):
        mask = np.broadcast_to(mask, self.shape)
        idx = np.argwhere(mask)
        k = tuple(idx[0]) if idx.size else ()
        u = np.broadcast_to(self.u, self.shape)
        v = np.broadcast_to(self.v, self.shape)
        raise DomainError(to_string(node), (float(u[k]), float(v[k])))


_UNARY = {"sin": J.sin, "cos": J.cos, "exp": J.exp, "atan": J.atan}
_UNARY_FLOAT = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "atan": math.atan,
                "tan": math.tan, "sqrt": math.sqrt, "log": math.log, "abs": abs}


def _fold(node):
    """Value of a constant subtree, with the same domain rules as jet evaluation."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_fold(node.arg)
    if isinstance(node, Call):
        a = _fold(node.arg)
        bad = ((node.func == "sqrt" and a < 0) or (node.func == "log" and a <= 0)
               or (node.func == "tan" and math.cos(a) == 0))
        if bad:
            raise DomainError(to_string(node), (0.0, 0.0))
        return _UNARY_FLOAT[node.func](a)
    a, b = _fold(node.left), _fold(node.right)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b == 0:
            raise DomainError(to_string(node), (0.0, 0.0))
        return a / b
    if b == round(b) and abs(b) < 1e6:
        if a == 0 and b < 0:
            raise DomainError(to_string(node), (0.0, 0.0))
        return a ** int(round(b))
    if a <= 0:
        raise DomainError(to_string(node), (0.0, 0.0))
    return a ** b


def _compile(node):
    """Return a float (constant subtree) or a function ctx -> Jet2."""
    if is_constant(node):
        return _fold(node)
    if isinstance(node, Sym):
        which = VARIABLES.index(node.name)

        def var(ctx):
            val = ctx.u if which == 0 else ctx.v
            return J.Jet2.variable(np.broadcast_to(val, ctx.shape), which, ctx.order)

        return var
    if isinstance(node, Neg):
        arg = _compile(node.arg)
        return lambda ctx: -arg(ctx)
    if isinstance(node, Call):
        return _compile_call(node, _compile(node.arg))
    left = _compile(node.left)
    if node.op == "^":
        return _compile_power(node, left)
    right = _compile(node.right)
    lf = left if callable(left) else (lambda ctx, c=left: c)
    rf = right if callable(right) else (lambda ctx, c=right: c)
    if node.op == "+":
        return lambda ctx: lf(ctx) + rf(ctx)
    if node.op == "-":
        return lambda ctx: lf(ctx) - rf(ctx)
    if node.op == "*":
        return lambda ctx: lf(ctx) * rf(ctx)
    if not callable(right):
        if right == 0:
            raise DomainError(to_string(node), (0.0, 0.0))
        inv = 1.0 / right
        return lambda ctx: lf(ctx) * inv

    def div(ctx):
        den = right(ctx)
        zero = den.value == 0
        if np.any(zero):
            ctx.domain_error(node, zero)
        return lf(ctx) / den

    return div


def _compile_power(node, base):
    expo = node.right
    if is_constant(expo):
        p = _fold(expo)
        if p == round(p) and abs(p) < 1e6:
            n = int(round(p))

            def ipow(ctx):
                b = base(ctx)
                if n < 0 and np.any(b.value == 0):
                    ctx.domain_error(node, b.value == 0)
                return b.powi(n)

            return ipow

        def rpow(ctx):
            b = base(ctx)
            if np.any(b.value <= 0):
                ctx.domain_error(node, b.value <= 0)
            return J.powr(b, p)

        return rpow
    ef = _compile(expo)

    def gpow(ctx):
        b = base(ctx) if callable(base) else base
        bval = b.value if isinstance(b, J.Jet2) else np.asarray(b)
        if np.any(bval <= 0):
            ctx.domain_error(node, bval <= 0)
        logb = J.log(b) if isinstance(b, J.Jet2) else math.log(b)
        return J.exp(ef(ctx) * logb)

    return gpow


def _compile_call(node, arg):
    f = node.func

    def call(ctx):
        x = arg(ctx)
        a = x.value
        if f == "sqrt":
            bad = a < 0 if ctx.order == 0 else a <= 0
            if np.any(bad):
                ctx.domain_error(node, bad)
            return J.sqrt(x)
        if f == "log":
            if np.any(a <= 0):
                ctx.domain_error(node, a <= 0)
            return J.log(x)
        if f == "abs":
            if ctx.order > 0 and np.any(a == 0):
                ctx.domain_error(node, a == 0)
            return J.absolute(x)
        if f == "tan":
            if np.any(np.cos(a) == 0):
                ctx.domain_error(node, np.cos(a) == 0)
            return J.tan(x)
        return _UNARY[f](x)

    return call


def _run(compiled, u, v, order):
    ctx = _Context(u, v, order)
    if callable(compiled):
        out = compiled(ctx)
    else:
        out = J.Jet2.constant(compiled, order)
    if out.shape != ctx.shape:
        out = J.Jet2(np.broadcast_to(out.coef, ctx.shape + out.coef.shape[-1:]).copy(), order)
    return out


def eval_jet(e, point, order=0):
    """Taylor jet of ``e`` at ``point = (u, v)``; u and v may be arrays (batch evaluation)."""
    if order < 0 or order > J.MAX_ORDER:
        raise ValueError("jet order must be in 0..%d" % J.MAX_ORDER)
    if isinstance(e, Expression):
        return e.jet(*point, order)
    if isinstance(e, str):
        e = parse(e)
    u, v = point
    return _run(_compile(e), u, v, order)


def evaluate(e, u, v):
    """Plain values (order-0 jets) as an array."""
    return eval_jet(e, (u, v), 0).value


class Expression:
    """Parsed expression bundled with its source text; callable as a jet field."""

    def __init__(self, text):
        if isinstance(text, Expression):
            text = text.text
        self.text = text
        self.tree = parse(text)
        self._compiled = _compile(self.tree)

    def jet(self, u, v, order):
        if order < 0 or order > J.MAX_ORDER:
            raise ValueError("jet order must be in 0..%d" % J.MAX_ORDER)
        return _run(self._compiled, u, v, order)

    def __repr__(self):
        return "Expression(%r)" % self.text

    def __str__(self):
        return to_string(self.tree)
