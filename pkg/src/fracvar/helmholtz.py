"""Helmholtz-type tests: is a system Hamiltonian, fractional Hamiltonian, or
derivable from a stationary action?

Every check returns a :class:`HelmholtzReport` carrying the nonzero residuals
as expressions, so a failed condition says by how much it fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .errors import JetOrderError
from .expr import DerivKind, PowerExpr, as_expr, expr_equal, frac_partial, partial

ZERO_TOL = 1e-12

HC1 = "HC1"
FHC = "FHC-alpha"
FIRST_ORDER = "FirstOrder"
FIRST_ORDER_LINEAR = "FirstOrderLinear"
SECOND_ORDER = "SecondOrder"


@dataclass(frozen=True)
class Violation:
    condition: str
    indices: tuple[int, ...]
    residual: PowerExpr

    def to_dict(self):
        return {"condition": self.condition, "indices": list(self.indices),
                "residual": self.residual.to_text()}


@dataclass(frozen=True)
class HelmholtzReport:
    condition_set: str
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def failed(self, condition: str) -> list[Violation]:
        return [v for v in self.violations if v.condition == condition]

    def to_dict(self):
        return {"condition_set": self.condition_set, "satisfied": self.satisfied,
                "violations": [v.to_dict() for v in self.violations]}


class _Collector:
    def __init__(self, condition_set, tol):
        self.condition_set = condition_set
        self.tol = tol
        self.violations = []

    def check(self, condition, indices, residual):
        if not expr_equal(residual, PowerExpr(), self.tol):
            residual = residual.drop_small(self.tol * max(1.0, residual.max_abs_coeff()))
            # indices are reported 1-based
            self.violations.append(Violation(condition, tuple(i + 1 for i in indices), residual))

    def report(self):
        return HelmholtzReport(self.condition_set, tuple(self.violations))


def indexed(prefix: str, n: int) -> list[str]:
    """Default coordinate names: ``prefix`` for one degree of freedom, else ``prefix1..n``."""
    return [prefix] if n == 1 else [f"{prefix}{i + 1}" for i in range(n)]


def _phase_space(G, F, q, p, d, condition_set, prefix, tol):
    n = len(G)
    if len(F) != n:
        raise ValueError("G and F must have the same length")
    q = list(q) if q is not None else indexed("q", n)
    p = list(p) if p is not None else indexed("p", n)
    G = [as_expr(g) for g in G]
    F = [as_expr(f) for f in F]
    col = _Collector(condition_set, tol)
    for i, j in combinations(range(n), 2):
        col.check(f"{prefix}.1", (i, j), d(G[i], p[j]) - d(G[j], p[i]))
    for i in range(n):
        for j in range(n):
            col.check(f"{prefix}.2", (i, j), d(G[j], q[i]) + d(F[i], p[j]))
    for i, j in combinations(range(n), 2):
        col.check(f"{prefix}.3", (i, j), d(F[i], q[j]) - d(F[j], q[i]))
    return col.report()


def check_phase_space(G: Sequence, F: Sequence, q: Sequence[str] | None = None,
                      p: Sequence[str] | None = None, tol: float = ZERO_TOL) -> HelmholtzReport:
    """Phase-space Helmholtz conditions for ``dq_i/dt = G^i``, ``dp_i/dt = F^i``.

    Families, for the 1-based indices reported in each violation:

    * ``HC1.1``: ``dG^i/dp_j - dG^j/dp_i`` for ``i < j``
    * ``HC1.2``: ``dG^j/dq_i + dF^i/dp_j`` for all ``i, j``
    * ``HC1.3``: ``dF^i/dq_j - dF^j/dq_i`` for ``i < j``
    """
    return _phase_space(G, F, q, p, partial, HC1, "HC1", tol)


def check_phase_space_frac(G: Sequence, F: Sequence, alpha: float,
                           kind: DerivKind = DerivKind.CAPUTO, q: Sequence[str] | None = None,
                           p: Sequence[str] | None = None, tol: float = ZERO_TOL) -> HelmholtzReport:
    """Same three families as :func:`check_phase_space` with ``D^alpha`` partials."""
    def d(e, x):
        return frac_partial(e, x, alpha, kind)
    return _phase_space(G, F, q, p, d, FHC, "FHC", tol)


def total_derivative(e: PowerExpr, t: str, jets: Sequence[Sequence[str]]) -> PowerExpr:
    """``d/dt`` on a truncated jet chart.

    ``jets[k]`` lists the k-th derivative coordinates. The highest level has no
    successor, so ``e`` must not depend on it.
    """
    top = jets[-1]
    if any(e.depends_on(x) for x in top):
        raise JetOrderError(f"d/dt of {e} needs coordinates beyond {list(top)}")
    out = partial(e, t)
    for lower, upper in zip(jets[:-1], jets[1:]):
        for x, xdot in zip(lower, upper):
            out = out + PowerExpr.var(xdot) * partial(e, x)
    return out


def _jet_names(n, q, qdot, qddot=None):
    q = list(q) if q is not None else indexed("q", n)
    qdot = list(qdot) if qdot is not None else indexed("qdot", n)
    if qddot is None:
        return q, qdot
    qddot = list(qddot) if qddot is not True else indexed("qddot", n)
    return q, qdot, qddot


def check_first_order(F: Sequence, t: str = "t", q: Sequence[str] | None = None,
                      qdot: Sequence[str] | None = None, tol: float = ZERO_TOL) -> HelmholtzReport:
    """Variational conditions for first-order equations ``F_i(t, q, qdot) = 0``.

    Checks ``P4`` (``dF_i/dqdot_j + dF_j/dqdot_i``, ``i <= j``), ``P5``
    (second ``qdot``-derivatives) and ``P3``
    (``dF_i/dq_j - dF_j/dq_i + d/dt dF_j/dqdot_i``, all ``i, j``) with
    ``d/dt = d_t + qdot_k d_{q_k}``.
    """
    n = len(F)
    q, qdot = _jet_names(n, q, qdot)
    F = [as_expr(f) for f in F]
    col = _Collector(FIRST_ORDER, tol)
    for i in range(n):
        for j in range(i, n):
            col.check("P4", (i, j), partial(F[i], qdot[j]) + partial(F[j], qdot[i]))
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                col.check("P5", (i, j, k), partial(partial(F[i], qdot[j]), qdot[k]))
    for i in range(n):
        for j in range(n):
            # the first-order d/dt has no qddot term, so qdot is held fixed here
            dfji = partial(F[j], qdot[i])
            ddt = partial(dfji, t)
            for x, xdot in zip(q, qdot):
                ddt = ddt + PowerExpr.var(xdot) * partial(dfji, x)
            col.check("P3", (i, j), partial(F[i], q[j]) - partial(F[j], q[i]) + ddt)
    return col.report()


def check_first_order_linear(C: Sequence[Sequence], D: Sequence, t: str = "t",
                             q: Sequence[str] | None = None, tol: float = ZERO_TOL) -> HelmholtzReport:
    """Conditions on ``F_i = C_ij(t, q) qdot_j + D_i(t, q)``.

    ``P7``: ``C_ij + C_ji`` (``i <= j``); ``P8``: the cyclic sum
    ``dC_ij/dq_k + dC_jk/dq_i + dC_ki/dq_j`` (``i < j < k``);
    ``P9``: ``dC_ij/dt - dD_i/dq_j + dD_j/dq_i`` (``i < j``).
    """
    n = len(D)
    if len(C) != n or any(len(row) != n for row in C):
        raise ValueError("C must be n x n with n = len(D)")
    q = list(q) if q is not None else indexed("q", n)
    C = [[as_expr(c) for c in row] for row in C]
    D = [as_expr(d) for d in D]
    col = _Collector(FIRST_ORDER_LINEAR, tol)
    for i in range(n):
        for j in range(i, n):
            col.check("P7", (i, j), C[i][j] + C[j][i])
    for i, j, k in combinations(range(n), 3):
        col.check("P8", (i, j, k), partial(C[i][j], q[k]) + partial(C[j][k], q[i])
                  + partial(C[k][i], q[j]))
    for i, j in combinations(range(n), 2):
        col.check("P9", (i, j), partial(C[i][j], t) - partial(D[i], q[j]) + partial(D[j], q[i]))
    return col.report()


def check_second_order(F: Sequence, t: str = "t", q: Sequence[str] | None = None,
                       qdot: Sequence[str] | None = None, qddot: Sequence[str] | None = None,
                       tol: float = ZERO_TOL) -> HelmholtzReport:
    """Variational conditions for ``F_i(t, q, qdot, qddot) = 0``.

    ``P10``: ``dF_i/dqddot_j - dF_j/dqddot_i`` (``i < j``);
    ``P11``: ``dF_i/dqdot_j + dF_j/dqdot_i - 2 d/dt dF_j/dqddot_i`` (``i <= j``);
    ``P12b``: ``dF_i/dq_j - dF_j/dq_i - (1/2) d/dt (dF_i/dqdot_j - dF_j/dqdot_i)`` (``i < j``).

    Raises JetOrderError when a total derivative would need third derivatives.
    """
    n = len(F)
    q, qdot, qddot = _jet_names(n, q, qdot, True if qddot is None else qddot)
    jets = [q, qdot, qddot]
    F = [as_expr(f) for f in F]
    col = _Collector(SECOND_ORDER, tol)
    for i, j in combinations(range(n), 2):
        col.check("P10", (i, j), partial(F[i], qddot[j]) - partial(F[j], qddot[i]))
    for i in range(n):
        for j in range(i, n):
            col.check("P11", (i, j), partial(F[i], qdot[j]) + partial(F[j], qdot[i])
                      - 2.0 * total_derivative(partial(F[j], qddot[i]), t, jets))
    for i, j in combinations(range(n), 2):
        skew = partial(F[i], qdot[j]) - partial(F[j], qdot[i])
        col.check("P12b", (i, j), partial(F[i], q[j]) - partial(F[j], q[i])
                  - 0.5 * total_derivative(skew, t, jets))
    return col.report()


def euler_lagrange_expressions(L, t: str = "t", q: Sequence[str] | None = None,
                               qdot: Sequence[str] | None = None,
                               qddot: Sequence[str] | None = None, n: int | None = None) -> list[PowerExpr]:
    """``E_i L = dL/dq_i - d/dt dL/dqdot_i`` on the second-order jet chart."""
    L = as_expr(L)
    if n is None:
        n = len(q) if q is not None else 1
    q, qdot, qddot = _jet_names(n, q, qdot, True if qddot is None else qddot)
    jets = [q, qdot, qddot]
    return [partial(L, q[i]) - total_derivative(partial(L, qdot[i]), t, jets) for i in range(n)]
