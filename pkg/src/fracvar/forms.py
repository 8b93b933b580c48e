"""Fractional differential forms of grade 0, 1 and 2.

The basis symbols ``(dx_i)^alpha`` are formal: wedges are strictly
antisymmetric and ``(dx)^alpha ^ (dx)^alpha = 0``. Grade-2 terms are stored
only on pairs ordered by chart position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import GradeError
from .expr import DerivKind, PowerExpr, as_expr, expr_equal, format_number, frac_partial


@dataclass(frozen=True)
class Chart:
    """Ordered coordinates with a fractional order per coordinate."""

    coords: tuple[str, ...]
    orders: tuple[float, ...]

    def __init__(self, coords: Sequence[str], alpha: float | Sequence[float] = 1.0):
        coords = tuple(coords)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinates in {coords}")
        if isinstance(alpha, (int, float)):
            orders = (float(alpha),) * len(coords)
        else:
            orders = tuple(float(a) for a in alpha)
            if len(orders) != len(coords):
                raise ValueError("one order per coordinate")
        if any(a <= 0 for a in orders):
            raise ValueError("fractional orders must be positive")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "orders", orders)

    @property
    def alpha(self) -> float:
        if len(set(self.orders)) != 1:
            raise ValueError("chart has distinct orders per coordinate")
        return self.orders[0]

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def order(self, name: str) -> float:
        return self.orders[self.index(name)]


@dataclass(frozen=True)
class FracForm:
    """A fractional form with PowerExpr coefficients.

    ``terms`` maps a basis key to its coefficient: ``()`` for grade 0, ``(x,)``
    for grade 1 and ``(x, y)`` with ``x`` before ``y`` in the chart for grade 2.
    Zero coefficients are never stored.
    """

    chart: Chart
    grade: int
    terms: tuple[tuple[tuple[str, ...], PowerExpr], ...]

    @classmethod
    def from_terms(cls, chart: Chart, grade: int, items) -> "FracForm":
        if grade not in (0, 1, 2):
            raise GradeError(f"grade must be 0, 1 or 2, got {grade}")
        if isinstance(items, Mapping):
            items = items.items()
        acc: dict[tuple[str, ...], PowerExpr] = {}
        for basis, coeff in items:
            basis = (basis,) if isinstance(basis, str) else tuple(basis)
            if len(basis) != grade:
                raise GradeError(f"basis {basis} does not have grade {grade}")
            for name in basis:
                chart.index(name)
            coeff = as_expr(coeff)
            if grade == 2:
                i, j = chart.index(basis[0]), chart.index(basis[1])
                if i == j:
                    continue
                if i > j:
                    basis, coeff = (basis[1], basis[0]), -coeff
            acc[basis] = acc.get(basis, PowerExpr()) + coeff
        ordered = sorted(
            ((b, c) for b, c in acc.items() if not c.is_zero()),
            key=lambda bc: tuple(chart.index(n) for n in bc[0]),
        )
        return cls(chart, grade, tuple(ordered))

    @classmethod
    def zero(cls, chart: Chart, grade: int) -> "FracForm":
        return cls.from_terms(chart, grade, ())

    @classmethod
    def function(cls, chart: Chart, f) -> "FracForm":
        return cls.from_terms(chart, 0, {(): as_expr(f)})

    def coeff(self, *basis: str) -> PowerExpr:
        if self.grade == 2 and len(basis) == 2:
            i, j = self.chart.index(basis[0]), self.chart.index(basis[1])
            if i > j:
                return -self.coeff(basis[1], basis[0])
        for b, c in self.terms:
            if b == tuple(basis):
                return c
        return PowerExpr()

    def as_dict(self) -> dict[tuple[str, ...], PowerExpr]:
        return dict(self.terms)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(expr_equal(c, PowerExpr(), tol) for _, c in self.terms)

    def _check_compatible(self, other: "FracForm"):
        if other.chart != self.chart or other.grade != self.grade:
            raise GradeError("forms must share chart and grade")

    def __add__(self, other: "FracForm") -> "FracForm":
        self._check_compatible(other)
        return FracForm.from_terms(self.chart, self.grade, list(self.terms) + list(other.terms))

    def __neg__(self) -> "FracForm":
        return FracForm(self.chart, self.grade, tuple((b, -c) for b, c in self.terms))

    def __sub__(self, other: "FracForm") -> "FracForm":
        return self + (-other)

    def equals(self, other: "FracForm", tol: float = 0.0) -> bool:
        return (self - other).is_zero(tol)

    def _basis_text(self, basis) -> str:
        parts = []
        for name in basis:
            a = self.chart.order(name)
            parts.append(f"d{name}" if a == 1.0 else f"(d{name})^{format_number(a)}")
        return "∧".join(parts)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for k, (basis, c) in enumerate(self.terms):
            negative = c.terms[0].coeff < 0
            shown = -c if negative else c
            if self.grade == 0:
                body = shown.to_text()
                if len(shown.terms) > 1 and (negative or k):
                    body = f"({body})"
            else:
                btxt = self._basis_text(basis)
                if len(shown.terms) == 1 and shown.to_text() == "1":
                    body = btxt
                elif len(shown.terms) == 1:
                    body = f"{shown.to_text()}*{btxt}"
                else:
                    body = f"({shown.to_text()})*{btxt}"
            if k == 0:
                out.append("-" + body if negative else body)
            else:
                out.append((" - " if negative else " + ") + body)
        return "".join(out)

    def __str__(self):
        return self.to_text()


def frac_exterior_derivative(f: FracForm, kind: DerivKind = DerivKind.CAPUTO) -> FracForm:
    """Apply ``d^alpha = sum_j (dx_j)^alpha D^alpha_{x_j}``.

    On a 1-form, ``A (dx_i)^alpha`` contributes ``D^alpha_{x_j} A`` on
    ``(dx_j)^alpha ^ (dx_i)^alpha``.
    """
    chart = f.chart
    if f.grade == 0:
        g = f.coeff()
        items = [((x,), frac_partial(g, x, chart.order(x), kind)) for x in chart.coords]
        return FracForm.from_terms(chart, 1, items)
    if f.grade == 1:
        items = []
        for (xi,), a in f.terms:
            for xj in chart.coords:
                if xj != xi:
                    items.append(((xj, xi), frac_partial(a, xj, chart.order(xj), kind)))
        return FracForm.from_terms(chart, 2, items)
    raise GradeError("the exterior derivative of a 2-form is not supported")


def wedge(a: FracForm, b: FracForm) -> FracForm:
    if a.chart != b.chart:
        raise GradeError("forms must share a chart")
    grade = a.grade + b.grade
    if grade > 2:
        raise GradeError("wedge products above grade 2 are not supported")
    items = [(ba + bb, ca * cb) for ba, ca in a.terms for bb, cb in b.terms]
    return FracForm.from_terms(a.chart, grade, items)


def contract(f: FracForm, vector: Mapping[str, object]) -> FracForm:
    """Interior product of ``f`` with a vector field given by its components."""
    comp = {name: as_expr(vector.get(name, 0.0)) for name in f.chart.coords}
    if f.grade == 1:
        total = PowerExpr()
        for (x,), c in f.terms:
            total = total + c * comp[x]
        return FracForm.function(f.chart, total)
    if f.grade == 2:
        items = []
        for (x, y), c in f.terms:
            items.append(((y,), c * comp[x]))
            items.append(((x,), -(c * comp[y])))
        return FracForm.from_terms(f.chart, 1, items)
    raise GradeError("cannot contract a 0-form")


def is_closed(f: FracForm, kind: DerivKind = DerivKind.CAPUTO, tol: float = 1e-12) -> bool:
    if f.grade == 2:
        raise GradeError("closedness of 2-forms is not supported")
    return frac_exterior_derivative(f, kind).is_zero(tol)


def exactness_check(field: Sequence, chart: Chart, kind: DerivKind = DerivKind.CAPUTO,
                    tol: float = 1e-12) -> bool:
    """True iff ``D_{x_j} F^i - D_{x_i} F^j`` vanishes for every ``i < j``."""
    if len(field) != chart.dim:
        raise ValueError("field length must equal the chart dimension")
    field = [as_expr(c) for c in field]
    xs = chart.coords
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            r = frac_partial(field[i], xs[j], chart.order(xs[j]), kind) - frac_partial(
                field[j], xs[i], chart.order(xs[i]), kind)
            if not expr_equal(r, PowerExpr(), tol):
                return False
    return True


# builders

def phase_chart(q: Sequence[str], p: Sequence[str], alpha: float, t: str | None = "t") -> Chart:
    coords = ([t] if t else []) + list(q) + list(p)
    return Chart(coords, alpha)


def build_beta_form(G: Sequence, F: Sequence, alpha: float,
                    q: Sequence[str] = ("q",), p: Sequence[str] = ("p",)) -> FracForm:
    """``G^i (dp_i)^alpha - F^i (dq_i)^alpha`` on the chart ``(q, p)``."""
    chart = phase_chart(q, p, alpha, t=None)
    items = [((pi,), g) for pi, g in zip(p, G)] + [((qi,), -as_expr(f)) for qi, f in zip(q, F)]
    return FracForm.from_terms(chart, 1, items)


def build_poincare_cartan(H, alpha: float, q: Sequence[str] = ("q",), p: Sequence[str] = ("p",),
                          t: str = "t", beta: float | None = None) -> FracForm:
    """``p_i^beta (dq_i)^alpha - H (dt)^alpha`` on ``(t, q, p)``; ``beta=None`` means ``p_i``."""
    chart = phase_chart(q, p, alpha, t)
    items = [((qi,), PowerExpr.var(pi, 1.0 if beta is None else beta)) for qi, pi in zip(q, p)]
    items.append(((t,), -as_expr(H)))
    return FracForm.from_terms(chart, 1, items)


def build_extended_pc(L, alpha: float, beta: float | None = None, q: Sequence[str] = ("q",),
                      p: Sequence[str] = ("p",), v: Sequence[str] = ("v",), t: str = "t") -> FracForm:
    """``p_i (dq_i)^alpha + (L - sum_i p_i v_i^beta) (dt)^alpha`` on ``(t, q, p, v)``."""
    beta = alpha if beta is None else beta
    chart = Chart([t, *q, *p, *v], alpha)
    dt = as_expr(L)
    for pi, vi in zip(p, v):
        dt = dt - PowerExpr.var(pi) * PowerExpr.var(vi, beta)
    items = [((qi,), PowerExpr.var(pi)) for qi, pi in zip(q, p)] + [((t,), dt)]
    return FracForm.from_terms(chart, 1, items)


def build_theta(G: Sequence, F: Sequence, alpha: float, q: Sequence[str] = ("q",),
                p: Sequence[str] = ("p",), t: str = "t") -> FracForm:
    """Non-potential force 2-form ``F^i (dt^dq_i) - G^i (dt^dp_i)``, fractional basis."""
    if not (len(G) == len(F) == len(q) == len(p)):
        raise ValueError("force lists must match the number of (q, p) pairs")
    chart = phase_chart(q, p, alpha, t)
    items = [((t, qi), f) for qi, f in zip(q, F)] + [((t, pi), -as_expr(g)) for pi, g in zip(p, G)]
    return FracForm.from_terms(chart, 2, items)
