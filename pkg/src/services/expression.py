"""
Expression trees over q-series building blocks.

Identities in the registry and specs given on the command line are written
either as JSON trees (``{"op": "mul", "args": [...]}``) or in a text grammar
that follows the usual q-series notation, for example::

    (q^2;q^2)(q^5;q^5)^3 / ((q;q)^3 (q^10;q^10))
    1/R(q)^5 - 11q - q^2 R(q)^5
    bprime(5)[20n+11]
    eta(12z)^5 / eta(60z)

Both forms produce the same frozen node objects, which ``evaluate`` expands
to a truncated series in exact or modular mode. The grammar is documented in
docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from math import lcm
from typing import Any, Dict, Optional, Tuple, Union

import structlog
from pydantic import ValidationError

from src.models.series_models import EtaQuotient, QProduct
from src.services.cache_service import get_series_cache
from src.services.exceptions import ExpressionError, ExpressionParseError, TruncationError
from src.services.partition_oracle import bprime_series, bregular_series
from src.services.qfactory import (
    bilateral_theta,
    expand_eta_quotient,
    expand_qproduct,
    rr_quotient,
    theta_f,
)
from src.services.series import (
    TruncatedSeries,
    add,
    dissect,
    divide,
    make_series,
    monomial,
    mul,
    neg,
    power,
    sub,
    substitute_power,
)


logger = structlog.get_logger()


# ----------------------------------------------------------------------
# Nodes
# ----------------------------------------------------------------------


class Expr:
    """Base class of expression nodes."""


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Monomial(Expr):
    k: int


@dataclass(frozen=True)
class QProd(Expr):
    # (a, b, e, negated) per factor
    factors: Tuple[Tuple[int, int, int, bool], ...]

    def to_model(self) -> QProduct:
        return QProduct.from_tuples(list(self.factors))


@dataclass(frozen=True)
class Eta(Expr):
    # sorted (delta, r_delta)
    exponents: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class RogersRamanujan(Expr):
    pass


@dataclass(frozen=True)
class Theta(Expr):
    A: int
    B: int


@dataclass(frozen=True)
class Bilateral(Expr):
    A: int
    B: int


@dataclass(frozen=True)
class BPrime(Expr):
    ell: int


@dataclass(frozen=True)
class BRegular(Expr):
    ell: int


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    arg: Expr
    e: int


@dataclass(frozen=True)
class Subs(Expr):
    arg: Expr
    m: int


@dataclass(frozen=True)
class Dissect(Expr):
    arg: Expr
    t: int
    j: int


def _merge_eta(left: Eta, right: Eta, sign: int) -> Eta:
    exps: Dict[int, int] = dict(left.exponents)
    for d, r in right.exponents:
        exps[d] = exps.get(d, 0) + sign * r
    return Eta(tuple(sorted((d, r) for d, r in exps.items() if r)))


def make_mul(left: Expr, right: Expr) -> Expr:
    """Multiply, folding products of Pochhammer factors and of eta factors."""
    if isinstance(left, QProd) and isinstance(right, QProd):
        return QProd(left.factors + right.factors)
    if isinstance(left, Eta) and isinstance(right, Eta):
        return _merge_eta(left, right, 1)
    return Mul(left, right)


def make_div(left: Expr, right: Expr) -> Expr:
    if isinstance(left, QProd) and isinstance(right, QProd):
        return QProd(left.factors + tuple((a, b, -e, n) for a, b, e, n in right.factors))
    if isinstance(left, Eta) and isinstance(right, Eta):
        return _merge_eta(left, right, -1)
    return Div(left, right)


def make_pow(arg: Expr, e: int) -> Expr:
    if isinstance(arg, Monomial) and e >= 0:
        return Monomial(arg.k * e)
    if isinstance(arg, QProd):
        return QProd(tuple((a, b, f * e, n) for a, b, f, n in arg.factors))
    if isinstance(arg, Eta):
        return Eta(tuple((d, r * e) for d, r in arg.exponents if r * e))
    return Pow(arg, e)


# ----------------------------------------------------------------------
# Text grammar
# ----------------------------------------------------------------------

_INT = re.compile(r"\d+")
_POCHHAMMER = re.compile(
    r"\(\s*(-?)\s*q\s*(?:\^\s*\{?\s*(\d+)\s*\}?|(\d+))?\s*;"
    r"\s*q\s*(?:\^\s*\{?\s*(\d+)\s*\}?|(\d+))?\s*\)"
    r"(?:_\{?\\?infty\}?|_inf)?"
)
_NAMES = ("bilateral", "bregular", "bprime", "dissect", "theta", "subs", "eta", "R", "f", "q")


class _Parser:
    """Recursive-descent parser with character positions for error reporting."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, position: Optional[int] = None) -> ExpressionParseError:
        return ExpressionParseError(message, self.text, self.pos if position is None else position)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, token: str) -> bool:
        self.skip()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.accept(token):
            raise self.error(f"expected {token!r}")

    def integer(self) -> int:
        self.skip()
        m = _INT.match(self.text, self.pos)
        if not m:
            raise self.error("expected an integer")
        self.pos = m.end()
        return int(m.group())

    def signed_integer(self) -> int:
        negative = self.accept("-")
        value = self.integer()
        return -value if negative else value

    def positive(self, what: str) -> int:
        start = self.pos
        value = self.integer()
        if value < 1:
            raise self.error(f"{what} must be positive", start)
        return value

    def parse(self) -> Expr:
        if not self.text.strip():
            raise self.error("empty expression")
        node = self.expr()
        if self.peek():
            raise self.error(f"unexpected character {self.peek()!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self.accept("+"):
                node = Add(node, self.term())
            elif self.accept("-"):
                node = Sub(node, self.term())
            else:
                return node

    def starts_atom(self) -> bool:
        c = self.peek()
        return bool(c) and (c.isdigit() or c.isalpha() or c == "(")

    def term(self) -> Expr:
        node = self.unary()
        while True:
            if self.accept("*"):
                node = make_mul(node, self.unary())
            elif self.accept("/"):
                node = make_div(node, self.unary())
            elif self.starts_atom():
                node = make_mul(node, self.power())
            else:
                return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def exponent(self) -> int:
        if self.accept("{"):
            value = self.signed_integer()
            self.expect("}")
        elif self.accept("("):
            value = self.signed_integer()
            self.expect(")")
        else:
            value = self.signed_integer()
        return value

    def power(self) -> Expr:
        node = self.atom()
        while True:
            if self.accept("^"):
                node = make_pow(node, self.exponent())
            elif self.peek() == "[":
                node = self.dissection_suffix(node)
            else:
                return node

    def dissection_suffix(self, node: Expr) -> Expr:
        start = self.pos
        self.expect("[")
        t = self.positive("dissection modulus")
        self.expect("n")
        j = self.integer() if self.accept("+") else 0
        self.expect("]")
        if j >= t:
            raise self.error(f"residue {j} must be below {t}", start)
        return Dissect(node, t, j)

    def pochhammer(self) -> Optional[Expr]:
        m = _POCHHAMMER.match(self.text, self.pos)
        if not m:
            return None
        neg_sign, a1, a2, b1, b2 = m.groups()
        a = int(a1 or a2 or 1)
        b = int(b1 or b2 or 1)
        if a < 1 or b < 1:
            raise self.error("Pochhammer exponents must be positive")
        self.pos = m.end()
        return QProd(((a, b, 1, bool(neg_sign)),))

    def atom(self) -> Expr:
        c = self.peek()
        start = self.pos
        if not c:
            raise self.error("unexpected end of expression")
        if c.isdigit():
            return Const(self.integer())
        if c == "(":
            factor = self.pochhammer()
            if factor is not None:
                return factor
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        for name in _NAMES:
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                return getattr(self, f"atom_{name}")()
        raise self.error(f"unexpected character {c!r}", start)

    def atom_q(self) -> Expr:
        if self.pos < len(self.text) and self.text[self.pos].isdigit():
            raise self.error("write powers of q as q^k")
        return Monomial(1)

    def atom_f(self) -> Expr:
        if self.peek() == "(":
            self.expect("(")
            self.expect("-")
            A = self.q_power()
            self.expect(",")
            self.expect("-")
            B = self.q_power()
            self.expect(")")
            return Theta(A, B)
        self.accept("_")
        braced = self.accept("{")
        k = self.positive("f_k index")
        if braced:
            self.expect("}")
        return QProd(((k, k, 1, False),))

    def q_power(self) -> int:
        self.expect("q")
        if self.accept("^"):
            braced = self.accept("{")
            value = self.positive("q exponent")
            if braced:
                self.expect("}")
            return value
        return 1

    def atom_R(self) -> Expr:
        self.expect("(")
        m = self.q_power()
        self.expect(")")
        return RogersRamanujan() if m == 1 else Subs(RogersRamanujan(), m)

    def atom_eta(self) -> Expr:
        self.expect("(")
        d = self.positive("eta argument") if self.peek().isdigit() else 1
        self.expect("z")
        self.expect(")")
        return Eta(((d, 1),))

    def _two_ints(self) -> Tuple[int, int]:
        self.expect("(")
        A = self.positive("theta argument")
        self.expect(",")
        B = self.positive("theta argument")
        self.expect(")")
        return A, B

    def atom_theta(self) -> Expr:
        return Theta(*self._two_ints())

    def atom_bilateral(self) -> Expr:
        return Bilateral(*self._two_ints())

    def _ell(self) -> int:
        self.expect("(")
        start = self.pos
        ell = self.integer()
        if ell < 2:
            raise self.error("ell must be at least 2", start)
        self.expect(")")
        return ell

    def atom_bprime(self) -> Expr:
        return BPrime(self._ell())

    def atom_bregular(self) -> Expr:
        return BRegular(self._ell())

    def atom_dissect(self) -> Expr:
        self.expect("(")
        arg = self.expr()
        self.expect(",")
        start = self.pos
        t = self.positive("dissection modulus")
        self.expect(",")
        j = self.integer()
        if j >= t:
            raise self.error(f"residue {j} must be below {t}", start)
        self.expect(")")
        return Dissect(arg, t, j)

    def atom_subs(self) -> Expr:
        self.expect("(")
        arg = self.expr()
        self.expect(",")
        m = self.positive("substitution power")
        self.expect(")")
        return Subs(arg, m)


def parse_expression(text: str) -> Expr:
    """Parse the text grammar; errors carry the 0-based offending position."""
    return _Parser(text).parse()


# ----------------------------------------------------------------------
# JSON trees
# ----------------------------------------------------------------------

_BINARY = {"add": Add, "sub": Sub, "mul": Mul, "div": Div}


def to_json(node: Expr) -> Dict[str, Any]:
    """Serialize a node to its JSON tree form."""
    if isinstance(node, Const):
        return {"op": "const", "value": node.value}
    if isinstance(node, Monomial):
        return {"op": "q", "k": node.k}
    if isinstance(node, QProd):
        return {
            "op": "qprod",
            "factors": [{"a": a, "b": b, "e": e, "negated": n} for a, b, e, n in node.factors],
        }
    if isinstance(node, Eta):
        return {"op": "eta", "exponents": {str(d): r for d, r in node.exponents}}
    if isinstance(node, RogersRamanujan):
        return {"op": "rr"}
    if isinstance(node, (Theta, Bilateral)):
        return {"op": "theta" if isinstance(node, Theta) else "bilateral", "A": node.A, "B": node.B}
    if isinstance(node, (BPrime, BRegular)):
        return {"op": "bprime" if isinstance(node, BPrime) else "bregular", "ell": node.ell}
    for op, cls in _BINARY.items():
        if isinstance(node, cls):
            return {"op": op, "args": [to_json(node.left), to_json(node.right)]}
    if isinstance(node, Neg):
        return {"op": "neg", "arg": to_json(node.arg)}
    if isinstance(node, Pow):
        return {"op": "pow", "arg": to_json(node.arg), "e": node.e}
    if isinstance(node, Subs):
        return {"op": "subs", "arg": to_json(node.arg), "m": node.m}
    if isinstance(node, Dissect):
        return {"op": "dissect", "arg": to_json(node.arg), "t": node.t, "j": node.j}
    raise ExpressionError(f"unknown node {node!r}")


def _require(obj: Dict[str, Any], key: str) -> Any:
    if key not in obj:
        raise ExpressionError(f"node {obj.get('op')!r} is missing field {key!r}")
    return obj[key]


def from_json(obj: Union[str, Dict[str, Any]]) -> Expr:
    """Build a node from a JSON tree; strings are parsed with the text grammar."""
    if isinstance(obj, str):
        return parse_expression(obj)
    if isinstance(obj, bool) or not isinstance(obj, (dict, int)):
        raise ExpressionError(f"cannot read expression from {obj!r}")
    if isinstance(obj, int):
        return Const(obj)

    op = obj.get("op")
    if op == "const":
        return Const(int(_require(obj, "value")))
    if op == "q":
        return Monomial(int(_require(obj, "k")))
    if op == "qprod":
        try:
            product = QProduct(factors=_require(obj, "factors"))
        except ValidationError as e:
            raise ExpressionError(f"invalid q-product: {e}") from e
        return QProd(tuple((f.a, f.b, f.e, f.negated) for f in product.factors))
    if op == "eta":
        exps = {int(d): int(r) for d, r in _require(obj, "exponents").items()}
        return Eta(tuple(sorted((d, r) for d, r in exps.items() if r)))
    if op == "rr":
        return RogersRamanujan()
    if op in ("theta", "bilateral"):
        cls = Theta if op == "theta" else Bilateral
        return cls(int(_require(obj, "A")), int(_require(obj, "B")))
    if op in ("bprime", "bregular"):
        cls = BPrime if op == "bprime" else BRegular
        return cls(int(_require(obj, "ell")))
    if op in _BINARY:
        args = _require(obj, "args")
        if len(args) != 2:
            raise ExpressionError(f"{op!r} takes exactly two arguments")
        return _BINARY[op](from_json(args[0]), from_json(args[1]))
    if op == "neg":
        return Neg(from_json(_require(obj, "arg")))
    if op == "scale":
        return Mul(Const(int(_require(obj, "c"))), from_json(_require(obj, "arg")))
    if op == "pow":
        return Pow(from_json(_require(obj, "arg")), int(_require(obj, "e")))
    if op == "subs":
        return Subs(from_json(_require(obj, "arg")), int(_require(obj, "m")))
    if op == "dissect":
        t, j = int(_require(obj, "t")), int(_require(obj, "j"))
        if t < 1 or not 0 <= j < t:
            raise ExpressionError(f"invalid dissection [{t}n+{j}]")
        return Dissect(from_json(_require(obj, "arg")), t, j)
    raise ExpressionError(f"unknown expression op {op!r}")


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------


class _Evaluator:
    """Expands a tree at a requested truncation, memoizing shared subtrees."""

    def __init__(self, modulus: Optional[int]):
        self.modulus = modulus
        self._memo: Dict[Tuple[Expr, int], TruncatedSeries] = {}

    def eval(self, node: Expr, n: int) -> TruncatedSeries:
        key = (node, n)
        if key not in self._memo:
            result = self._eval(node, n)
            if result.trunc < n:
                raise TruncationError(f"{type(node).__name__} is only known below q^{result.trunc}, need q^{n}")
            self._memo[key] = result.truncate(n)
        return self._memo[key]

    def _eval(self, node: Expr, n: int) -> TruncatedSeries:
        M = self.modulus
        if isinstance(node, Const):
            return make_series([node.value], n, M)
        if isinstance(node, Monomial):
            return monomial(node.k, n, 1, M)
        if isinstance(node, QProd):
            return expand_qproduct(node.to_model(), n, M)
        if isinstance(node, Eta):
            if not node.exponents:
                return make_series([1], n, M)
            exps = dict(node.exponents)
            quotient = EtaQuotient(level=reduce(lcm, exps.keys(), 1), exponents=exps)
            return expand_eta_quotient(quotient, n, M).require_combined()
        if isinstance(node, RogersRamanujan):
            return rr_quotient(n, M)
        if isinstance(node, Theta):
            return theta_f(node.A, node.B, n, M)
        if isinstance(node, Bilateral):
            return bilateral_theta(node.A, node.B, n, M)
        if isinstance(node, BPrime):
            return get_series_cache().get_or_compute("bprime", node.ell, n, M, bprime_series)
        if isinstance(node, BRegular):
            return get_series_cache().get_or_compute("bregular", node.ell, n, M, bregular_series)
        if isinstance(node, Add):
            return add(self.eval(node.left, n), self.eval(node.right, n))
        if isinstance(node, Sub):
            return sub(self.eval(node.left, n), self.eval(node.right, n))
        if isinstance(node, Mul):
            return mul(self.eval(node.left, n), self.eval(node.right, n))
        if isinstance(node, Div):
            return divide(self.eval(node.left, n), self.eval(node.right, n))
        if isinstance(node, Neg):
            return neg(self.eval(node.arg, n))
        if isinstance(node, Pow):
            return power(self.eval(node.arg, n), node.e)
        if isinstance(node, Subs):
            inner = self.eval(node.arg, -(-n // node.m))
            return substitute_power(inner, node.m)
        if isinstance(node, Dissect):
            return dissect(self.eval(node.arg, node.t * n), node.t, node.j)
        raise ExpressionError(f"cannot evaluate {node!r}")


def evaluate(node: Expr, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Expand an expression to ``trunc`` coefficients, exactly or modulo ``modulus``."""
    result = _Evaluator(modulus).eval(node, trunc)
    logger.debug("expression_evaluated", trunc=trunc, modulus=modulus, nonzero=result.nonzero_count())
    return result


def evaluate_text(text: str, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    return evaluate(parse_expression(text), trunc, modulus)
