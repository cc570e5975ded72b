"""A small arithmetic expression language for metric components.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?          # right-associative
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

so ``-2^2 == -4``, ``2^3^2 == 512`` and ``2^-1 == 0.5``. Evaluation is
vectorized: bindings may be numpy arrays.

Example::

    >>> e = parse("2^3 + y1")
    >>> eval_expr(e, {"y1": 1.0})
    9.0
"""

from dataclasses import dataclass
import re

import numpy as np

from .spacetime import DomainError, MetricProvider

__all__ = [
    "ParseError",
    "UnboundVariableError",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "FUNCTIONS",
    "parse",
    "to_source",
    "eval_expr",
    "free_variables",
    "MetricSource",
    "DSLMetric",
    "parse_metric",
]

COORDINATES = ("y0", "y1", "y2", "y3")


class ParseError(ValueError):
    """Syntax error. ``pos`` is the 0-based character offset."""

    def __init__(self, message, text, pos, context=None):
        self.text = text
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.context = context
        where = f"line {self.line}, column {self.column} (position {pos})"
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}{message} at {where}")


class UnboundVariableError(NameError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


def _checked(name, cond):
    def wrap(fn):
        def f(x):
            if np.any(cond(x)):
                raise DomainError(f"{name} argument out of domain")
            return fn(x)
        return f
    return wrap


FUNCTIONS = {
    "sqrt": _checked("sqrt", lambda x: np.asarray(x) < 0)(np.sqrt),
    "log": _checked("log", lambda x: np.asarray(x) <= 0)(np.log),
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "asinh": np.arcsinh,
    "exp": np.exp,
    "abs": np.abs,
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text, context):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos, context)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, context=None):
        self.text = text
        self.context = context
        self.tokens = _tokenize(text, context)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, self.text, tok[2], self.context)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            self.error(f"expected {value!r}, found {found}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.advance()
            return Unary(tok[1], self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            self.advance()
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTIONS:
                    self.error(f"unknown function {value!r}", tok)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {value!r}")


def parse(text, context=None):
    """Parse ``text`` into an expression tree; raises ParseError."""
    return _Parser(text, context).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PREC = 3
_ATOM_PREC = 5


def _prec(node):
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def to_source(node):
    """Print ``node`` with the minimal parentheses that preserve its shape."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Unary):
        inner = to_source(node.operand)
        if _prec(node.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return node.op + inner
    p = _PREC[node.op]
    left = to_source(node.left)
    right = to_source(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _UNARY_PREC:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


def free_variables(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Call):
        return free_variables(node.arg)
    if isinstance(node, Unary):
        return free_variables(node.operand)
    return free_variables(node.left) | free_variables(node.right)


def _power(a, b):
    with np.errstate(all="ignore"):
        out = np.power(np.asarray(a, dtype=float), b)
    if not np.all(np.isfinite(out)):
        raise DomainError("power out of domain")
    return out


def eval_expr(node, bindings):
    """Evaluate ``node``; values in ``bindings`` may be floats or arrays."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return bindings[node.name]
        except KeyError:
            raise UnboundVariableError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Call):
        return FUNCTIONS[node.func](eval_expr(node.arg, bindings))
    if isinstance(node, Unary):
        x = eval_expr(node.operand, bindings)
        return -x if node.op == "-" else x
    a = eval_expr(node.left, bindings)
    b = eval_expr(node.right, bindings)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        return a / b
    return _power(a, b)


@dataclass(frozen=True)
class MetricSource:
    """Component expressions ``{(a, b): text}`` with ``a <= b`` plus parameters."""

    components: dict
    params: dict

    @classmethod
    def from_mapping(cls, mapping, params=None):
        """Accept keys like ``(0, 1)``, ``"(0,1)"``, ``"0,1"``, ``"01"`` or ``"g01"``."""
        comps = {}
        for key, text in mapping.items():
            a, b = _index_pair(key)
            if (a, b) in comps:
                raise ValueError(f"duplicate metric component ({a},{b})")
            comps[(a, b)] = str(text)
        return cls(comps, {k: float(v) for k, v in (params or {}).items()})


def _index_pair(key):
    if isinstance(key, tuple):
        a, b = (int(k) for k in key)
    else:
        digits = re.sub(r"[^0-9]", "", str(key).lstrip("gG"))
        if len(digits) != 2:
            raise ValueError(f"cannot read metric index pair from {key!r}")
        a, b = int(digits[0]), int(digits[1])
    if not (0 <= a <= 3 and 0 <= b <= 3):
        raise ValueError(f"metric index out of range in {key!r}")
    return (a, b) if a <= b else (b, a)


class DSLMetric(MetricProvider):
    """Metric whose components are DSL expressions in ``y0..y3`` and parameters.

    Derivatives use :func:`qlm.spacetime.fd_derivative`.
    """

    name = "custom-dsl"

    def __init__(self, source):
        super().__init__(source.params)
        self.source = source
        self._exprs = {}
        allowed = set(COORDINATES) | set(source.params)
        for (a, b), text in sorted(source.components.items()):
            node = parse(text, context=f"component ({a},{b})")
            unknown = free_variables(node) - allowed
            if unknown:
                raise ParseError(
                    f"unknown identifier {sorted(unknown)[0]!r}", text,
                    _find_name(text, sorted(unknown)[0]), f"component ({a},{b})",
                )
            self._exprs[(a, b)] = node

    def _metric(self, pts):
        bindings = dict(self._params)
        for i, name in enumerate(COORDINATES):
            bindings[name] = pts[..., i]
        G = np.zeros(pts.shape[:-1] + (4, 4))
        for (a, b), node in self._exprs.items():
            val = eval_expr(node, bindings)
            G[..., a, b] = val
            G[..., b, a] = val
        return G


def _find_name(text, name):
    m = re.search(rf"\b{re.escape(name)}\b", text)
    return m.start() if m else 0


def parse_metric(src):
    """Build a :class:`DSLMetric` from a :class:`MetricSource` or mapping."""
    if not isinstance(src, MetricSource):
        src = MetricSource.from_mapping(src)
    return DSLMetric(src)
