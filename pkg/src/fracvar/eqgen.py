"""Symbolic derivation of equations of motion from a Hamiltonian or Lagrangian.

Covers the integer-order Hamilton and Euler-Lagrange systems and their
fractional counterparts, where the momentum obeys a Caputo-rate law and the
coordinate obeys ``(dq/dt)^alpha = R``, solved as ``dq/dt = spow(R, 1/alpha)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    CompositeLhsError,
    DegenerateLagrangianError,
    DerivationError,
    NonInvertibleMomentumError,
)
from .expr import DerivKind, PowerExpr, as_expr, format_number, frac_partial, partial
from .forms import Chart
from .helmholtz import indexed
from .specialfn import gamma


@dataclass(frozen=True)
class SignedPower:
    """``spow(inner, exponent) = sign(inner) * |inner|**exponent``."""

    inner: PowerExpr
    exponent: float

    def variables(self):
        return self.inner.variables()

    def to_text(self) -> str:
        return f"spow({self.inner.to_text()}, {format_number(self.exponent)})"


Rhs = Union[PowerExpr, SignedPower]


def spow(inner: PowerExpr, exponent: float) -> Rhs:
    """Signed power, collapsed to ``inner`` when the exponent is 1 or ``inner`` is 0."""
    inner = as_expr(inner)
    if exponent == 1.0 or inner.is_zero():
        return inner
    return SignedPower(inner, float(exponent))


@dataclass(frozen=True)
class OrdinaryRate:
    def lhs_text(self, var: str) -> str:
        return f"d{var}/dt"


@dataclass(frozen=True)
class CaputoRate:
    """``D^alpha_t`` of ``var**power``; only ``power == 1`` can be integrated."""

    alpha: float
    power: float = 1.0

    def lhs_text(self, var: str) -> str:
        target = var if self.power == 1.0 else f"{var}^{format_number(self.power)}"
        return f"D^{format_number(self.alpha)}_t {target}"


@dataclass(frozen=True)
class Constraint:
    """Algebraic law ``0 = rhs`` fixing ``var``."""

    def lhs_text(self, var: str) -> str:
        return "0"


LhsKind = Union[OrdinaryRate, CaputoRate, Constraint]


@dataclass(frozen=True)
class Law:
    var: str
    lhs: LhsKind
    rhs: Rhs

    def to_text(self) -> str:
        return f"{self.lhs.lhs_text(self.var)} = {self.rhs.to_text()}"


@dataclass(frozen=True)
class EquationsOfMotion:
    state_vars: tuple[str, ...]
    laws: tuple[Law, ...]
    provenance: str
    t: str = "t"
    alpha: float = 1.0
    hamiltonian: PowerExpr | None = None
    notes: tuple[str, ...] = ()

    def law(self, var: str) -> Law:
        for law in self.laws:
            if law.var == var:
                return law
        raise KeyError(var)

    @property
    def is_dae(self) -> bool:
        return any(isinstance(l.lhs, Constraint) for l in self.laws)

    def to_text(self) -> str:
        lines = [f"# {self.provenance}"]
        lines += [law.to_text() for law in self.laws]
        lines += [f"# {n}" for n in self.notes]
        return "\n".join(lines)


def _rate(alpha):
    return OrdinaryRate() if alpha == 1.0 else CaputoRate(alpha)


def _check_alpha(alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _names(H, q, p):
    if q is None and p is None:
        q, p = ("q",), ("p",)
    q = tuple(q) if q is not None else tuple(indexed("q", len(p)))
    p = tuple(p) if p is not None else tuple(indexed("p", len(q)))
    if len(q) != len(p):
        raise ValueError("need one momentum per coordinate")
    return q, p


def hamilton_eqs(H, q: Sequence[str] | None = None, p: Sequence[str] | None = None,
                 t: str = "t") -> EquationsOfMotion:
    """``dq_i/dt = dH/dp_i``, ``dp_i/dt = -dH/dq_i``."""
    H = as_expr(H)
    q, p = _names(H, q, p)
    laws = [Law(qi, OrdinaryRate(), partial(H, pi)) for qi, pi in zip(q, p)]
    laws += [Law(pi, OrdinaryRate(), -partial(H, qi)) for qi, pi in zip(q, p)]
    return EquationsOfMotion(q + p, tuple(laws), "hamilton", t, 1.0, H)


def _phase_laws(H, G, F, alpha, kind, q, p, beta=1.0):
    H = as_expr(H)
    n = len(q)
    G = [as_expr(g) for g in G] if G else [PowerExpr()] * n
    F = [as_expr(f) for f in F] if F else [PowerExpr()] * n
    if len(G) != n or len(F) != n:
        raise ValueError("force lists must be empty or have one entry per coordinate")
    factor = gamma(beta + 1.0 - alpha) / gamma(beta + 1.0)
    q_laws, p_laws = [], []
    for i, (qi, pi) in enumerate(zip(q, p)):
        velocity = factor * PowerExpr.var(pi, alpha - beta) * frac_partial(H, pi, alpha, kind) + G[i]
        q_laws.append(Law(qi, OrdinaryRate(), spow(velocity, 1.0 / alpha)))
        p_laws.append((pi, -frac_partial(H, qi, alpha, kind) + F[i]))
    return q_laws, p_laws


def frac_hamilton_eqs(H, alpha: float, kind: DerivKind = DerivKind.CAPUTO,
                      q: Sequence[str] | None = None, p: Sequence[str] | None = None,
                      t: str = "t") -> EquationsOfMotion:
    """Fractional Hamilton equations.

    ``(dq_i/dt)^alpha = G(2-alpha) p_i^(alpha-1) D^alpha_{p_i} H`` and
    ``D^alpha_t p_i = -D^alpha_{q_i} H``. At ``alpha = 1`` this is
    :func:`hamilton_eqs`.
    """
    _check_alpha(alpha)
    q, p = _names(H, q, p)
    q_laws, p_rhs = _phase_laws(H, (), (), alpha, kind, q, p)
    laws = q_laws + [Law(pi, _rate(alpha), rhs) for pi, rhs in p_rhs]
    return EquationsOfMotion(q + p, tuple(laws), "fractional-hamilton", t, alpha, as_expr(H))


def frac_hamilton_eqs_beta(H, alpha: float, beta: float, kind: DerivKind = DerivKind.CAPUTO,
                           q: Sequence[str] | None = None, p: Sequence[str] | None = None,
                           t: str = "t", explicit_p: bool = False) -> EquationsOfMotion:
    """Hamilton equations from the action form with ``p^beta`` in place of ``p``.

    The coordinate law is
    ``(dq/dt)^alpha = G(beta+1-alpha)/G(beta+1) p^(alpha-beta) D^alpha_p H``. The
    momentum law ``D^alpha_t (p^beta) = -D^alpha_q H`` has no chain rule for
    ``beta != 1``; it is returned with a composite left side, and
    ``explicit_p=True`` raises CompositeLhsError instead.
    """
    _check_alpha(alpha)
    if beta <= 0:
        raise ValueError("beta must be positive")
    q, p = _names(H, q, p)
    if beta != 1.0 and explicit_p:
        raise CompositeLhsError(f"D^alpha_t(p^{format_number(beta)}) has no explicit form")
    q_laws, p_rhs = _phase_laws(H, (), (), alpha, kind, q, p, beta)
    if beta == 1.0:
        p_laws = [Law(pi, _rate(alpha), rhs) for pi, rhs in p_rhs]
    else:
        p_laws = [Law(pi, CaputoRate(alpha, beta), rhs) for pi, rhs in p_rhs]
    return EquationsOfMotion(q + p, tuple(q_laws + p_laws), "fractional-hamilton-beta", t, alpha,
                             as_expr(H))


def nonhamiltonian_eqs(H, G: Sequence, F: Sequence, alpha: float, kind: DerivKind = DerivKind.CAPUTO,
                       q: Sequence[str] | None = None, p: Sequence[str] | None = None,
                       t: str = "t") -> EquationsOfMotion:
    """Fractional equations with non-potential forces ``G^i``, ``F^i``.

    ``(dq_i/dt)^alpha = G(2-alpha) p_i^(alpha-1) D^alpha_{p_i} H + G^i`` and
    ``D^alpha_t p_i = -D^alpha_{q_i} H + F^i``.
    """
    _check_alpha(alpha)
    q, p = _names(H, q, p)
    q_laws, p_rhs = _phase_laws(H, G, F, alpha, kind, q, p)
    laws = q_laws + [Law(pi, _rate(alpha), rhs) for pi, rhs in p_rhs]
    return EquationsOfMotion(q + p, tuple(laws), "fractional-non-hamiltonian", t, alpha, as_expr(H))


def _lagrange_names(q, v, p):
    q = tuple(q) if q is not None else ("q",)
    v = tuple(v) if v is not None else tuple("v" + name[1:] if name.startswith("q") else f"v_{name}" for name in q)
    p = tuple(p) if p is not None else tuple("p" + name[1:] if name.startswith("q") else f"p_{name}" for name in q)
    if not (len(q) == len(v) == len(p)):
        raise ValueError("need one velocity and one momentum per coordinate")
    return q, v, p


def euler_lagrange(L, q: Sequence[str] | None = None, v: Sequence[str] | None = None,
                   p: Sequence[str] | None = None, t: str = "t") -> EquationsOfMotion:
    """First-order form of the Euler-Lagrange equations.

    With a constant, invertible mass matrix ``M = d2L/dv2`` the momentum is
    eliminated and the state is ``(q, v)`` with ``M dv/dt = dL/dq - d2L/dtdv -
    v_j d2L/dq_jdv``. Otherwise the triple ``dq/dt = v``, ``dp/dt = dL/dq``,
    ``0 = dL/dv - p`` is returned on the state ``(q, v, p)``.
    """
    L = as_expr(L)
    q, v, p = _lagrange_names(q, v, p)
    n = len(q)
    M = [[partial(partial(L, v[i]), v[j]) for j in range(n)] for i in range(n)]
    if all(m.is_zero() for row in M for m in row):
        raise DegenerateLagrangianError("d2L/dv2 vanishes identically")
    q_laws = [Law(qi, OrdinaryRate(), PowerExpr.var(vi)) for qi, vi in zip(q, v)]
    if all(m.is_constant() for row in M for m in row):
        mass = np.array([[m.constant_value() for m in row] for row in M])
        if abs(np.linalg.det(mass)) < 1e-14:
            raise DegenerateLagrangianError("constant mass matrix is singular")
        inv = np.linalg.inv(mass)
        force = []
        for i in range(n):
            dv = partial(L, v[i])
            r = partial(L, q[i]) - partial(dv, t)
            for j in range(n):
                r = r - PowerExpr.var(v[j]) * partial(dv, q[j])
            force.append(r)
        v_laws = []
        for i in range(n):
            acc = PowerExpr()
            for k in range(n):
                acc = acc + force[k].scale(inv[i, k])
            v_laws.append(Law(v[i], OrdinaryRate(), acc))
        return EquationsOfMotion(q + v, tuple(q_laws + v_laws), "euler-lagrange", t, 1.0)
    p_laws = [Law(pi, OrdinaryRate(), partial(L, qi)) for qi, pi in zip(q, p)]
    c_laws = [Law(vi, Constraint(), partial(L, vi) - PowerExpr.var(pi)) for vi, pi in zip(v, p)]
    return EquationsOfMotion(q + v + p, tuple(q_laws + c_laws + p_laws), "euler-lagrange", t, 1.0,
                             notes=("momentum constraint solved numerically for v",))


def _invert_momentum(mom: PowerExpr, vi: str, pi: str, velocities) -> Rhs | None:
    """Solve ``p = a * v**k`` for ``v`` when ``a`` is a single v-free monomial."""
    ks = {m.exponent(vi) for m in mom.terms}
    if len(mom.terms) != 1 or len(ks) != 1:
        return None
    (k,) = ks
    m = mom.terms[0]
    if k == 0.0 or any(m.exponent(w) for w in velocities if w != vi):
        return None
    a = PowerExpr((m.with_exponent(vi, 0.0, m.coeff),))
    return spow(PowerExpr.var(pi) * a ** -1, 1.0 / k)


def frac_euler_lagrange(L, alpha: float, kind: DerivKind = DerivKind.CAPUTO,
                        q: Sequence[str] | None = None, v: Sequence[str] | None = None,
                        p: Sequence[str] | None = None, t: str = "t") -> EquationsOfMotion:
    """Fractional extended Lagrange equations with ``beta = alpha``.

    ``p_i = G(2-alpha) D^alpha_{v_i} L``, ``D^alpha_t p_i = D^alpha_{q_i} L`` and
    ``dq_i/dt = v_i``. When every momentum is a single power of its own
    velocity and the force side is velocity-free, ``v`` is eliminated and the
    state is ``(q, p)``; otherwise the state is ``(q, v, p)`` with the momentum
    relation kept as a constraint.

    Raises NonInvertibleMomentumError when some momentum does not depend on
    the velocities at all.
    """
    _check_alpha(alpha)
    L = as_expr(L)
    q, v, p = _lagrange_names(q, v, p)
    rate = _rate(alpha)
    g2 = gamma(2.0 - alpha)
    moms = [frac_partial(L, vi, alpha, kind).scale(g2) for vi in v]
    forces = [frac_partial(L, qi, alpha, kind) for qi in q]
    for vi, mom in zip(v, moms):
        if not any(mom.depends_on(w) for w in v):
            raise NonInvertibleMomentumError(f"momentum conjugate to {vi} does not depend on velocity")
    notes = (
        f"operator form: {' + '.join(f.to_text() for f in forces)} - "
        + " + ".join(f"{format_number(g2)}*D^{format_number(alpha)}_t[{(m.scale(1.0 / g2)).to_text()}]"
                     for m in moms)
        + f" = 0 with {', '.join(v)} = d({', '.join(q)})/dt",
    )
    inverses = [_invert_momentum(m, vi, pi, v) for m, vi, pi in zip(moms, v, p)]
    closed = all(x is not None for x in inverses) and not any(
        f.depends_on(w) for f in forces for w in v)
    if closed:
        laws = [Law(qi, OrdinaryRate(), inv) for qi, inv in zip(q, inverses)]
        laws += [Law(pi, rate, f) for pi, f in zip(p, forces)]
        return EquationsOfMotion(q + p, tuple(laws), "fractional-euler-lagrange", t, alpha, notes=notes)
    laws = [Law(qi, OrdinaryRate(), PowerExpr.var(vi)) for qi, vi in zip(q, v)]
    laws += [Law(vi, Constraint(), m - PowerExpr.var(pi)) for vi, m, pi in zip(v, moms, p)]
    laws += [Law(pi, rate, f) for pi, f in zip(p, forces)]
    return EquationsOfMotion(q + v + p, tuple(laws), "fractional-euler-lagrange", t, alpha,
                             notes=notes + ("momentum constraint solved numerically for v",))


def phase_space_fields(H, alpha: float = 1.0, kind: DerivKind = DerivKind.CAPUTO,
                       q: Sequence[str] | None = None, p: Sequence[str] | None = None,
                       G: Sequence = (), F: Sequence = ()):
    """Vector field ``(D_p H + G, -D_q H + F)`` used by the Helmholtz checks.

    ``alpha = 1`` gives classical partials, otherwise ``D^alpha``.
    """
    H = as_expr(H)
    q, p = _names(H, q, p)
    n = len(q)
    G = [as_expr(g) for g in G] if G else [PowerExpr()] * n
    F = [as_expr(f) for f in F] if F else [PowerExpr()] * n

    def d(e, x):
        return partial(e, x) if alpha == 1.0 else frac_partial(e, x, alpha, kind)
    return ([d(H, pi) + g for pi, g in zip(p, G)],
            [-d(H, qi) + f for qi, f in zip(q, F)])


@dataclass(frozen=True)
class SystemDef:
    """A dynamical system: coordinates, orders, a generating function and forces."""

    q: tuple[str, ...]
    alpha: float = 1.0
    hamiltonian: PowerExpr | None = None
    lagrangian: PowerExpr | None = None
    beta: float | None = None
    forces_G: tuple[PowerExpr, ...] = ()
    forces_F: tuple[PowerExpr, ...] = ()
    kind: DerivKind = DerivKind.CAPUTO
    p: tuple[str, ...] | None = None
    v: tuple[str, ...] | None = None
    t: str = "t"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(self.q))
        _, v, p = _lagrange_names(self.q, self.v, self.p)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "forces_G", tuple(as_expr(g) for g in self.forces_G))
        object.__setattr__(self, "forces_F", tuple(as_expr(f) for f in self.forces_F))
        if (self.hamiltonian is None) == (self.lagrangian is None):
            raise ValueError("exactly one of hamiltonian / lagrangian is required")
        _check_alpha(self.alpha)
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        n = len(self.q)
        for forces in (self.forces_G, self.forces_F):
            if forces and len(forces) != n:
                raise ValueError("force lists must be empty or have one entry per coordinate")
        if self.lagrangian is not None and (self.has_forces):
            raise ValueError("non-potential forces are only supported with a Hamiltonian")

    @property
    def has_forces(self) -> bool:
        return any(not g.is_zero() for g in self.forces_G + self.forces_F)

    @property
    def chart(self) -> Chart:
        second = self.p if self.hamiltonian is not None else self.v
        return Chart((self.t, *self.q, *second), self.alpha)

    def digest(self) -> str:
        parts = [
            ",".join(self.q), ",".join(self.p), ",".join(self.v), self.t, repr(self.alpha),
            repr(self.beta), self.kind.value,
            "H=" + (self.hamiltonian.to_text() if self.hamiltonian is not None else ""),
            "L=" + (self.lagrangian.to_text() if self.lagrangian is not None else ""),
            "G=" + ";".join(g.to_text() for g in self.forces_G),
            "F=" + ";".join(f.to_text() for f in self.forces_F),
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def derive(sys: SystemDef) -> EquationsOfMotion:
    """Pick the derivation that matches ``sys``."""
    if sys.hamiltonian is not None:
        H = sys.hamiltonian
        if sys.beta is not None and sys.beta != 1.0:
            return frac_hamilton_eqs_beta(H, sys.alpha, sys.beta, sys.kind, sys.q, sys.p, sys.t)
        if sys.has_forces:
            return nonhamiltonian_eqs(H, sys.forces_G, sys.forces_F, sys.alpha, sys.kind,
                                      sys.q, sys.p, sys.t)
        if sys.alpha == 1.0:
            return hamilton_eqs(H, sys.q, sys.p, sys.t)
        return frac_hamilton_eqs(H, sys.alpha, sys.kind, sys.q, sys.p, sys.t)
    if sys.beta is not None and sys.beta != sys.alpha:
        raise DerivationError("fractional Lagrange equations are derived with beta = alpha only")
    if sys.alpha == 1.0:
        return euler_lagrange(sys.lagrangian, sys.q, sys.v, sys.p, sys.t)
    return frac_euler_lagrange(sys.lagrangian, sys.alpha, sys.kind, sys.q, sys.v, sys.p, sys.t)
