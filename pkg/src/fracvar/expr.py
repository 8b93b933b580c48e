"""Power expressions: finite sums of real-exponent monomials.

This is the symbolic substrate for Hamiltonians, Lagrangians, forces and form
coefficients. The class is closed under the fractional power rule, so every
derivative used elsewhere in the package stays inside it.

Expression text grammar::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('+' | '-') unary | power
    power    := atom ('^' exponent)?
    atom     := NUMBER | NAME | '(' expr ')'
    exponent := ['+' | '-'] NUMBER | '(' ['+' | '-'] NUMBER ')'

Division is only by constant subexpressions; 1/x is written ``x^-1``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    DomainError,
    ExponentDomainError,
    ExprSyntaxError,
    MissingVariableError,
    NonLiteralExponentError,
    PoleError,
    UnknownVariableError,
)
from .specialfn import gamma, rgamma

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

# exponents are snapped to this many decimals so that e.g. 2-0.3-0.3 and
# 2-0.6 land on the same monomial
_EXP_DECIMALS = 12


class DerivKind(enum.Enum):
    CAPUTO = "caputo"
    RIEMANN_LIOUVILLE = "rl"

    @classmethod
    def parse(cls, text: str) -> "DerivKind":
        key = text.strip().lower().replace("-", "").replace("_", "")
        if key in ("caputo", "c"):
            return cls.CAPUTO
        if key in ("rl", "riemannliouville"):
            return cls.RIEMANN_LIOUVILLE
        raise ValueError(f"unknown derivative kind {text!r}")


def _snap(e: float) -> float:
    r = round(e)
    if abs(e - r) < 10.0 ** -_EXP_DECIMALS:
        return float(r)
    return round(e, _EXP_DECIMALS) + 0.0


def _is_int(e: float) -> bool:
    return e == math.floor(e)


def format_number(x: float) -> str:
    """Shortest round-trip text for ``x``; integral values drop the ``.0``."""
    x = float(x)
    if _is_int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True)
class Monomial:
    """``coeff * prod(var**exp)``; ``powers`` is sorted by name, zero exponents removed."""

    coeff: float
    powers: tuple[tuple[str, float], ...] = ()

    def exponent(self, var: str) -> float:
        for name, e in self.powers:
            if name == var:
                return e
        return 0.0

    def with_exponent(self, var: str, e: float, coeff: float) -> "Monomial":
        d = dict(self.powers)
        e = _snap(e)
        if e == 0.0:
            d.pop(var, None)
        else:
            d[var] = e
        return Monomial(coeff, tuple(sorted(d.items())))

    def to_text(self) -> str:
        factors = []
        for name, e in self.powers:
            factors.append(name if e == 1.0 else f"{name}^{format_number(e)}")
        c = self.coeff
        if not factors:
            return format_number(c)
        body = "*".join(factors)
        if c == 1.0:
            return body
        if c == -1.0:
            return "-" + body
        return f"{format_number(c)}*{body}"


def _order_key(powers):
    # constants last; otherwise by variable name, higher powers first
    return (0 if powers else 1, tuple((name, -e) for name, e in powers))


@dataclass(frozen=True)
class PowerExpr:
    """Immutable canonical sum of monomials.

    Build instances with :func:`canonicalize`, :meth:`const`, :meth:`var` or
    :func:`parse_expr`; the arithmetic operators keep the canonical form.
    """

    terms: tuple[Monomial, ...] = ()

    # constructors

    @classmethod
    def const(cls, c: float) -> "PowerExpr":
        return canonicalize([Monomial(float(c))])

    @classmethod
    def var(cls, name: str, exponent: float = 1.0, coeff: float = 1.0) -> "PowerExpr":
        return canonicalize([Monomial(float(coeff), ((name, float(exponent)),))])

    # queries

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m.powers for m in self.terms)

    def constant_value(self) -> float:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.terms[0].coeff if self.terms else 0.0

    def variables(self) -> frozenset[str]:
        return frozenset(name for m in self.terms for name, _ in m.powers)

    def depends_on(self, var: str) -> bool:
        return any(m.exponent(var) != 0.0 for m in self.terms)

    def max_abs_coeff(self) -> float:
        return max((abs(m.coeff) for m in self.terms), default=0.0)

    # arithmetic

    def __add__(self, other):
        other = as_expr(other)
        return canonicalize(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return PowerExpr(tuple(Monomial(-m.coeff, m.powers) for m in self.terms))

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(other)
        other = as_expr(other)
        out = []
        for a in self.terms:
            for b in other.terms:
                d = dict(a.powers)
                for name, e in b.powers:
                    d[name] = d.get(name, 0.0) + e
                out.append(Monomial(a.coeff * b.coeff, tuple(d.items())))
        return canonicalize(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_expr(other)
        if not other.is_constant() or other.is_zero():
            raise ZeroDivisionError("division only by a nonzero constant")
        return self.scale(1.0 / other.constant_value())

    def __pow__(self, r):
        r = float(r)
        if len(self.terms) == 1:
            m = self.terms[0]
            if m.coeff < 0 and not _is_int(r):
                raise DomainError("negative coefficient raised to a non-integer power")
            if m.coeff == 0 and r < 0:
                raise ZeroDivisionError("zero raised to a negative power")
            return canonicalize([Monomial(m.coeff ** r, tuple((n, e * r) for n, e in m.powers))])
        if r == 0:
            return PowerExpr.const(1.0)
        if self.is_zero() and r > 0:
            return self
        if not _is_int(r) or r < 0:
            raise DomainError("only nonnegative integer powers of a sum stay in the expression class")
        out = PowerExpr.const(1.0)
        for _ in range(int(r)):
            out = out * self
        return out

    def scale(self, c: float) -> "PowerExpr":
        c = float(c)
        if c == 0.0:
            return PowerExpr()
        return PowerExpr(tuple(Monomial(m.coeff * c, m.powers) for m in self.terms))

    def rename(self, mapping: Mapping[str, str]) -> "PowerExpr":
        return canonicalize(
            [Monomial(m.coeff, tuple((mapping.get(n, n), e) for n, e in m.powers)) for m in self.terms]
        )

    def drop_small(self, tol: float) -> "PowerExpr":
        """Remove monomials with ``|coeff| <= tol`` (rounding debris)."""
        return PowerExpr(tuple(m for m in self.terms if abs(m.coeff) > tol))

    # text

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, m in enumerate(self.terms):
            t = m.to_text()
            if k == 0:
                parts.append(t)
            elif t.startswith("-"):
                parts.append(" - " + t[1:])
            else:
                parts.append(" + " + t)
        return "".join(parts)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"PowerExpr({self.to_text()!r})"


def canonicalize(monomials: Iterable[Monomial]) -> PowerExpr:
    """Merge like monomials, drop zero coefficients and sort into canonical order."""
    acc: dict[tuple, float] = {}
    for m in monomials:
        d: dict[str, float] = {}
        for name, e in m.powers:
            d[name] = d.get(name, 0.0) + e
        key = tuple(sorted((n, _snap(e)) for n, e in d.items() if _snap(e) != 0.0))
        acc[key] = acc.get(key, 0.0) + float(m.coeff)
    terms = [Monomial(c, key) for key, c in acc.items() if c != 0.0]
    terms.sort(key=lambda m: _order_key(m.powers))
    return PowerExpr(tuple(terms))


def as_expr(x) -> PowerExpr:
    if isinstance(x, PowerExpr):
        return x
    if isinstance(x, (int, float)):
        return PowerExpr.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a PowerExpr")


# derivatives

def partial(e: PowerExpr, x: str, order: int = 1) -> PowerExpr:
    """Classical partial derivative of integer ``order``."""
    out = e
    for _ in range(order):
        terms = []
        for m in out.terms:
            b = m.exponent(x)
            if b != 0.0:
                terms.append(m.with_exponent(x, b - 1.0, m.coeff * b))
        out = canonicalize(terms)
    return out


def _falling(b: float, n: int) -> float:
    out = 1.0
    for j in range(n):
        out *= b - j
    return out


def frac_partial(e: PowerExpr, x: str, alpha: float,
                 kind: DerivKind = DerivKind.CAPUTO) -> PowerExpr:
    """Fractional partial derivative of order ``alpha`` in ``x``, lower terminal 0.

    Each monomial ``c * x**b * rest`` maps to
    ``c * G(b+1)/G(b+1-alpha) * x**(b-alpha) * rest``.

    Caputo annihilates ``x**b`` for integer ``0 <= b < ceil(alpha)``; for
    Riemann-Liouville a term vanishes exactly where ``1/G(b+1-alpha)`` is zero,
    so constants in ``x`` survive as ``c * x**-alpha / G(1-alpha)``.

    Raises
    ------
    ExponentDomainError
        Some exponent of ``x`` is ``<= -1``.
    PoleError
        Caputo rule hits a gamma pole on a term it does not annihilate.
    """
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m_int = math.ceil(alpha)
    integer_order = _is_int(alpha)
    terms = []
    for m in e.terms:
        b = m.exponent(x)
        if b <= -1.0:
            raise ExponentDomainError(f"power rule needs exponent > -1, got {x}^{format_number(b)}")
        if kind is DerivKind.CAPUTO and b >= 0 and _is_int(b) and b < m_int:
            continue
        if integer_order:
            factor = _falling(b, int(alpha))
        else:
            arg = b + 1.0 - alpha
            if kind is DerivKind.CAPUTO:
                if arg <= 0 and _is_int(arg):
                    raise PoleError(f"gamma pole in D^{format_number(alpha)} of {x}^{format_number(b)}")
                factor = gamma(b + 1.0) / gamma(arg)
            else:
                factor = gamma(b + 1.0) * rgamma(arg)
        if factor == 0.0:
            continue
        terms.append(m.with_exponent(x, b - alpha, m.coeff * factor))
    return canonicalize(terms)


# comparison and evaluation

def expr_equal(a: PowerExpr, b: PowerExpr, tol: float = 0.0) -> bool:
    """Term-by-term comparison; a monomial missing on one side has coefficient 0."""
    ca = {m.powers: m.coeff for m in as_expr(a).terms}
    cb = {m.powers: m.coeff for m in as_expr(b).terms}
    for key in ca.keys() | cb.keys():
        x, y = ca.get(key, 0.0), cb.get(key, 0.0)
        if abs(x - y) > tol * max(1.0, abs(x), abs(y)):
            return False
    return True


def _real_pow(base: float, e: float, name: str = "") -> float:
    if base < 0 and not _is_int(e):
        raise DomainError(f"negative base {name}={base!r} with non-integer exponent {e!r}")
    if base == 0 and e < 0:
        raise DomainError(f"{name}=0 raised to negative exponent {e!r}")
    return base ** e


def evaluate(e: PowerExpr, point: Mapping[str, float]) -> float:
    """Numeric value of ``e`` at ``point``.

    Raises DomainError for a negative base under a non-integer exponent and
    MissingVariableError if ``point`` lacks a variable.
    """
    total = 0.0
    for m in e.terms:
        v = m.coeff
        for name, ex in m.powers:
            if name not in point:
                raise MissingVariableError(name)
            v *= _real_pow(float(point[name]), ex, name)
        total += v
    return total


# parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str, chart: Sequence[str], params: Mapping[str, float] | None):
        self.text = text
        self.chart = set(chart)
        self.params = dict(params or {})
        self.tokens = self._tokenize()
        self.i = 0

    def _offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def _tokenize(self):
        toks = []
        pos = 0
        n = len(self.text)
        while pos < n:
            if self.text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(self.text, pos)
            if not m:
                bad = pos + (len(self.text[pos:]) - len(self.text[pos:].lstrip()))
                raise ExprSyntaxError(f"unexpected character {self.text[bad]!r}", self._offset(bad), self.text)
            kind = m.lastgroup
            start = m.start(kind)
            toks.append((kind, m.group(kind), start))
            pos = m.end()
        toks.append(("end", "", len(self.text)))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok, cls=ExprSyntaxError):
        return cls(msg, self._offset(tok[2]), self.text)

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise self.error(f"expected {op!r}", tok)
        return tok

    def parse(self) -> PowerExpr:
        if self.peek()[0] == "end":
            raise self.error("empty expression", self.peek())
        out = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}", self.peek())
        return out

    def expr(self):
        out = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                out = out * rhs
            else:
                if not rhs.is_constant():
                    raise self.error("division only by constants", tok)
                if rhs.is_zero():
                    raise self.error("division by zero", tok)
                out = out / rhs
        return out

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return -inner if tok[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            r = self.exponent()
            try:
                return base ** r
            except (DomainError, ZeroDivisionError) as exc:
                raise self.error(str(exc), tok) from None
        return base

    def _signed_number(self):
        sign = 1.0
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            sign = -1.0 if tok[1] == "-" else 1.0
        tok = self.take()
        if tok[0] != "num":
            if tok[0] == "name" or (tok[0] == "op" and tok[1] == "("):
                raise self.error("exponent must be a literal number", tok, NonLiteralExponentError)
            raise self.error("expected exponent", tok)
        return sign * float(tok[1])

    def exponent(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "(":
            self.take()
            r = self._signed_number()
            self.expect(")")
            return r
        return self._signed_number()

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return PowerExpr.const(float(val))
        if kind == "name":
            if val in self.chart:
                return PowerExpr.var(val)
            if val in self.params:
                return PowerExpr.const(float(self.params[val]))
            raise self.error(f"unknown variable {val!r}", tok, UnknownVariableError)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "end":
            raise self.error("unexpected end of expression", tok)
        raise self.error(f"unexpected token {val!r}", tok)


def parse_expr(text: str, chart: Iterable[str], params: Mapping[str, float] | None = None) -> PowerExpr:
    """Parse ``text`` into a canonical PowerExpr over the variables in ``chart``.

    ``params`` maps extra names to numeric constants substituted at parse time.
    """
    return _Parser(text, list(chart), params).parse()


# numeric compilation

class BranchRule(enum.Enum):
    """How non-integer powers of negative numbers are evaluated.

    STRICT raises DomainError. REFLECT continues ``x**e`` to ``x < 0`` as
    ``(-1)**(ceil(e)+1) * |x|**e``, the sign obtained by mirroring a Caputo
    derivative of an integer power through the terminal at 0; it reproduces
    the classical sign pattern as the order tends to 1.
    """

    STRICT = "strict"
    REFLECT = "reflect"


class SingularValueError(DomainError):
    def __init__(self, var: str, value: float):
        self.var = var
        self.value = value
        super().__init__(f"{var}={value!r} is too close to 0 for a negative exponent")


def _make_pow(rule: BranchRule, guard: float):
    def fpow(x, e, name):
        if e < 0 and abs(x) < guard:
            raise SingularValueError(name, x)
        if x < 0:
            if rule is BranchRule.STRICT:
                raise DomainError(f"negative base {name}={x!r} with non-integer exponent {e!r}")
            sign = -1.0 if math.ceil(e) % 2 == 0 else 1.0
            return sign * (-x) ** e
        return x ** e

    def ipow(x, k, name):
        if k < 0 and abs(x) < guard:
            raise SingularValueError(name, x)
        return x ** k

    return fpow, ipow


def compile_expr(e: PowerExpr, variables: Sequence[str],
                 rule: BranchRule = BranchRule.STRICT, guard: float = 1e-12):
    """Compile ``e`` into ``f(values)`` where ``values[i]`` is ``variables[i]``."""
    index = {name: i for i, name in enumerate(variables)}
    missing = e.variables() - index.keys()
    if missing:
        raise MissingVariableError(", ".join(sorted(missing)))
    pieces = []
    for m in e.terms:
        factors = [repr(float(m.coeff))]
        for name, ex in m.powers:
            ref = f"x[{index[name]}]"
            if _is_int(ex):
                k = int(ex)
                if k == 1:
                    factors.append(ref)
                elif k > 0:
                    factors.append(f"{ref}**{k}")
                else:
                    factors.append(f"_ipow({ref}, {k}, {name!r})")
            else:
                factors.append(f"_fpow({ref}, {ex!r}, {name!r})")
        pieces.append("*".join(factors))
    body = " + ".join(pieces) if pieces else "0.0"
    fpow, ipow = _make_pow(rule, guard)
    namespace = {"_fpow": fpow, "_ipow": ipow}
    exec(f"def _f(x):\n    return {body}\n", namespace)
    fn = namespace["_f"]
    fn.__doc__ = e.to_text()
    return fn
