"""Numerical fractional calculus: Caputo quadrature, Grunwald-Letnikov weights
and fixed-step integrators for mixed ordinary / Caputo-rate systems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .eqgen import (
    CaputoRate,
    Constraint,
    EquationsOfMotion,
    OrdinaryRate,
    SignedPower,
    SystemDef,
    derive,
)
from .errors import (
    BlowupError,
    CompileError,
    CompositeLhsError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    RhsDomainError,
    SingularMomentumError,
)
from .expr import BranchRule, PowerExpr, SingularValueError, compile_expr, partial
from .specialfn import gamma

PECE = "pece"
GL = "gl"
METHODS = (PECE, GL)
BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class Grid:
    """Uniform nodes ``t0 + k*h`` for ``k = 0..n``."""

    t0: float
    h: float
    n: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if self.n < 1:
            raise ValueError("grid needs at least one step")

    @classmethod
    def span(cls, t0: float, t1: float, h: float) -> "Grid":
        if not t1 > t0:
            raise ValueError("t1 must exceed t0")
        n = round((t1 - t0) / h)
        if n < 1 or abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
            raise ValueError(f"h={h} does not divide [{t0}, {t1}]")
        return cls(float(t0), float(h), int(n))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)

    @property
    def t1(self) -> float:
        return self.t0 + self.n * self.h


@dataclass
class Trajectory:
    grid: Grid
    state_vars: tuple[str, ...]
    states: np.ndarray
    meta: dict = field(default_factory=dict)
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    truncated: str | None = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times[: len(self.states)]

    def column(self, name: str) -> np.ndarray:
        if name in self.extras:
            return self.extras[name]
        return self.states[:, self.state_vars.index(name)]

    @property
    def columns(self) -> list[str]:
        return ["t", *self.state_vars, *self.extras]


# quadrature

def caputo_num(f: Callable[[float], float], alpha: float, t: float, h: float) -> float:
    """L1-scheme value of the Caputo derivative of ``f`` at ``t``, terminal 0.

    Error is O(h**(2-alpha)) for smooth ``f``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"L1 quadrature needs alpha in (0, 1), got {alpha}")
    if not t > 0:
        raise DomainError("t must be positive")
    n = round(t / h)
    if n < 1 or abs(n * h - t) > 1e-9 * t:
        raise DomainError(f"h={h} does not divide t={t}")
    nodes = t * np.arange(n + 1) / n
    values = np.array([f(float(y)) for y in nodes], dtype=float)
    rem = t - nodes
    b = (rem[:-1] ** (1.0 - alpha) - rem[1:] ** (1.0 - alpha)) / gamma(2.0 - alpha)
    return float(np.dot(b, np.diff(values)) / (t / n))


def gl_weights(alpha: float, n: int) -> list[float]:
    """Coefficients of ``(1 - z)**alpha`` up to ``z**n``."""
    w = [1.0]
    for k in range(1, n + 1):
        w.append(w[-1] * (1.0 - (alpha + 1.0) / k))
    return w


# integrators

def _parse_kind(kind):
    if isinstance(kind, (OrdinaryRate, CaputoRate)):
        if isinstance(kind, CaputoRate) and kind.power != 1.0:
            raise CompositeLhsError("cannot integrate a composite Caputo left side")
        return None if isinstance(kind, OrdinaryRate) else float(kind.alpha)
    if kind == "ordinary":
        return None
    if isinstance(kind, tuple) and kind[0] == "caputo":
        return float(kind[1])
    raise ValueError(f"unsupported left-hand side kind {kind!r}")


class _FracGroup:
    """Fractional variables sharing one order, with their convolution weights."""

    def __init__(self, alpha, cols, n):
        self.alpha = alpha
        self.cols = np.array(cols)
        k = np.arange(n + 2, dtype=float)
        self.pred = (k + 1.0) ** alpha - k ** alpha
        self.corr = (k + 2.0) ** (alpha + 1.0) + k ** (alpha + 1.0) - 2.0 * (k + 1.0) ** (alpha + 1.0)
        self.gl = np.array(gl_weights(alpha, n + 1))
        self.h_pred = None
        self.h_corr = None


def solve_frac_ivp(rhs: Callable[[float, np.ndarray], np.ndarray], lhs_kinds: Sequence,
                   x0: Sequence[float], grid: Grid, method: str = PECE,
                   memory_window: int | None = None, state_vars: Sequence[str] | None = None,
                   blowup: float = BLOWUP_LIMIT) -> Trajectory:
    """Integrate ``A_i x_i = rhs_i(t, x)`` on ``grid``.

    ``lhs_kinds[i]`` is an OrdinaryRate (or ``"ordinary"``) or a CaputoRate
    (or ``("caputo", alpha)``). Caputo variables use the fractional
    Adams-Bashforth-Moulton scheme with one corrector (``"pece"``) or explicit
    Grunwald-Letnikov (``"gl"``), with the full history unless
    ``memory_window`` is given. Ordinary variables take a classical RK4 step
    with the fractional variables frozen at their step-start values.

    Raises an IntegrationError subclass carrying the partial trajectory.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    x0 = np.asarray(x0, dtype=float)
    d = len(x0)
    if len(lhs_kinds) != d:
        raise ValueError("one left-hand side kind per state variable")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    if memory_window is not None and memory_window < 1:
        raise ValueError("memory_window must be a positive number of steps")
    orders = [_parse_kind(k) for k in lhs_kinds]
    for a in orders:
        if a is not None and not 0.0 < a <= 1.0:
            raise ValueError("Caputo orders must lie in (0, 1]")
    state_vars = tuple(state_vars) if state_vars else tuple(f"x{i}" for i in range(d))
    ord_cols = np.array([i for i, a in enumerate(orders) if a is None], dtype=int)
    n, h = grid.n, grid.h
    groups = []
    for a in sorted({a for a in orders if a is not None}):
        g = _FracGroup(a, [i for i, b in enumerate(orders) if b == a], n)
        g.h_pred = h ** a / gamma(a + 1.0)
        g.h_corr = h ** a / gamma(a + 2.0)
        groups.append(g)

    meta = {"method": method, "h": h, "memory_window": memory_window,
            "orders": {v: (1.0 if a is None else a) for v, a in zip(state_vars, orders)}}
    if groups:
        meta["alpha"] = groups[0].alpha if len(groups) == 1 else [g.alpha for g in groups]
    else:
        meta["alpha"] = 1.0
    xs = np.empty((n + 1, d))
    fs = np.empty((n + 1, d))
    xs[0] = x0
    times = grid.times

    def partial_traj(upto, reason):
        return Trajectory(grid, state_vars, xs[:upto].copy(), dict(meta), truncated=reason)

    def call(t, x, step):
        try:
            out = np.asarray(rhs(t, x), dtype=float)
        except SingularValueError as exc:
            raise SingularMomentumError(f"t={float(t)!r}: {exc}", partial_traj(step, f"singular {exc.var}")) from exc
        except DomainError as exc:
            raise RhsDomainError(f"t={float(t)!r}: {exc}", partial_traj(step, f"domain error: {exc}")) from exc
        return out

    fs[0] = call(times[0], xs[0], 1)
    for m in range(n):
        t, t_next = times[m], times[m + 1]
        x = xs[m]
        new = x.copy()
        if ord_cols.size:
            k1 = fs[m][ord_cols]
            y = x.copy()
            y[ord_cols] = x[ord_cols] + 0.5 * h * k1
            k2 = call(t + 0.5 * h, y, m + 1)[ord_cols]
            y[ord_cols] = x[ord_cols] + 0.5 * h * k2
            k3 = call(t + 0.5 * h, y, m + 1)[ord_cols]
            y[ord_cols] = x[ord_cols] + h * k3
            k4 = call(t_next, y, m + 1)[ord_cols]
            new[ord_cols] = x[ord_cols] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lo = 0 if memory_window is None else max(0, m + 1 - memory_window)
        if method == PECE and groups:
            pred = new.copy()
            for g in groups:
                c = g.cols
                hist = fs[lo:m + 1][:, c]
                w = g.pred[m - lo::-1]
                pred[c] = x0[c] + g.h_pred * (w @ hist)
            f_pred = call(t_next, pred, m + 1)
            for g in groups:
                c = g.cols
                a = g.alpha
                acc = f_pred[c].copy()
                if lo == 0:
                    acc += (m ** (a + 1.0) - (m - a) * (m + 1.0) ** a) * fs[0][c]
                    j0 = 1
                else:
                    j0 = lo
                if m >= j0:
                    acc += g.corr[m - j0::-1] @ fs[j0:m + 1][:, c]
                new[c] = x0[c] + g.h_corr * acc
        elif method == GL:
            for g in groups:
                c = g.cols
                k_max = m + 1 if memory_window is None else min(m + 1, memory_window)
                past = xs[m + 1 - k_max:m + 1][:, c][::-1] - x0[c]
                new[c] = x0[c] + h ** g.alpha * fs[m][c] - g.gl[1:k_max + 1] @ past
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > blowup:
            raise BlowupError(
                f"state exceeded {blowup:g} at t={float(t_next)!r}",
                partial_traj(m + 1, f"blow-up at t={float(t_next)!r}"),
            )
        xs[m + 1] = new
        fs[m + 1] = call(t_next, new, m + 2)
    return Trajectory(grid, state_vars, xs, meta)


# end-to-end simulation

def _compile_rhs(rhs, variables, rule):
    if isinstance(rhs, SignedPower):
        inner = compile_expr(rhs.inner, variables, rule)
        r = rhs.exponent

        def f(x):
            y = inner(x)
            return math.copysign(abs(y) ** r, y)
        return f
    if isinstance(rhs, PowerExpr):
        return compile_expr(rhs, variables, rule)
    raise CompileError(f"cannot compile right-hand side {rhs!r}")


class _MomentumSolver:
    """Newton iteration for velocities fixed by ``0 = mom(q, v) - p``."""

    def __init__(self, eom, variables, v_cols, rule, tol=1e-13, max_iter=50):
        self.v_cols = v_cols
        laws = [eom.law(variables[c]) for c in v_cols]
        self.res = [compile_expr(l.rhs, variables, rule) for l in laws]
        self.jac = [[compile_expr(partial(l.rhs, variables[c]), variables, rule) for c in v_cols]
                    for l in laws]
        self.tol = tol
        self.max_iter = max_iter

    def solve(self, x):
        x = np.array(x, dtype=float)
        vc = self.v_cols
        for _ in range(self.max_iter):
            r = np.array([f(x) for f in self.res])
            if np.max(np.abs(r)) <= self.tol * max(1.0, np.max(np.abs(x))):
                return x
            J = np.array([[f(x) for f in row] for row in self.jac])
            try:
                step = np.linalg.solve(J, r)
            except np.linalg.LinAlgError as exc:
                raise DomainError("singular momentum Jacobian") from exc
            x[vc] -= step
        raise ConvergenceError("velocity not recovered from the momentum constraint")


def simulate(sys: SystemDef | EquationsOfMotion, x0: Sequence[float] | Mapping[str, float],
             grid: Grid, method: str = PECE, memory_window: int | None = None,
             rule: BranchRule = BranchRule.REFLECT) -> Trajectory:
    """Derive, compile and integrate a system.

    ``x0`` is given in state order (or as a name mapping). Velocities of a
    constrained state are re-solved from the momenta at every evaluation, so
    their initial entries only seed the Newton iteration. When a Hamiltonian
    is present its value along the path is stored in ``extras["H"]``.
    Non-integer powers of negative values follow ``rule``.
    """
    eom = sys if isinstance(sys, EquationsOfMotion) else derive(sys)
    variables = list(eom.state_vars) + [eom.t]
    dim = len(eom.state_vars)
    if isinstance(x0, Mapping):
        x0 = [x0[name] for name in eom.state_vars]
    if len(x0) != dim:
        raise ValueError(f"x0 needs {dim} entries for {eom.state_vars}")
    kinds, fns = [], []
    for var in eom.state_vars:
        law = eom.law(var)
        if isinstance(law.lhs, CaputoRate) and law.lhs.power != 1.0:
            raise CompositeLhsError(f"{law.to_text()} has no explicit form")
        kinds.append(OrdinaryRate() if isinstance(law.lhs, Constraint) else law.lhs)
        fns.append(None if isinstance(law.lhs, Constraint) else _compile_rhs(law.rhs, variables, rule))
    v_cols = [i for i, var in enumerate(eom.state_vars) if isinstance(eom.law(var).lhs, Constraint)]
    solver = _MomentumSolver(eom, variables, v_cols, rule) if v_cols else None
    dyn_cols = [i for i in range(dim) if i not in v_cols]
    last_v = {}

    def resolve(x, t):
        full = np.append(x, t)
        if solver is not None:
            if "v" in last_v:
                full[v_cols] = last_v["v"]
            full = solver.solve(full)
            last_v["v"] = full[v_cols]
        return full

    def rhs(t, x):
        full = resolve(x, t)
        out = np.zeros(dim)
        for i in dyn_cols:
            out[i] = fns[i](full)
        return out

    start = np.asarray(x0, dtype=float)
    if solver is not None:
        try:
            start = resolve(start, grid.t0)[:dim]
        except (DomainError, ConvergenceError) as exc:
            raise ValueError(f"inconsistent initial state: {exc}") from exc
        last_v.clear()

    traj = None
    try:
        traj = solve_frac_ivp(rhs, kinds, start, grid, method, memory_window, eom.state_vars)
    except IntegrationError as exc:
        traj = exc.trajectory
        _finish(traj, eom, sys, variables, rule, resolve if solver else None)
        raise
    except ConvergenceError as exc:
        raise RhsDomainError(str(exc)) from exc
    _finish(traj, eom, sys, variables, rule, resolve if solver else None)
    return traj


def _finish(traj, eom, sys, variables, rule, resolve):
    if traj is None:
        return
    if resolve is not None and len(traj.states):
        traj.states = np.array([resolve(x, t)[:len(eom.state_vars)]
                                for x, t in zip(traj.states, traj.times)])
    traj.meta["provenance"] = eom.provenance
    traj.meta["alpha"] = eom.alpha
    traj.meta["branch"] = rule.value
    if isinstance(sys, SystemDef):
        traj.meta["system"] = sys.digest()
    if eom.hamiltonian is not None and len(traj.states):
        energy = compile_expr(eom.hamiltonian, variables, rule)
        traj.extras["H"] = np.array([energy(np.append(x, t)) for x, t in zip(traj.states, traj.times)])
