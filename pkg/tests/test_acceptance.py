"""Acceptance suite: ten end-to-end criteria, one pass/fail line each.

Run under pytest (the lines are repeated in the terminal summary) or directly
with ``python tests/test_acceptance.py``.
"""

import contextlib
import io
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from fracvar.cli import main, read_csv
from fracvar.eqgen import SystemDef, frac_euler_lagrange, frac_hamilton_eqs, hamilton_eqs
from fracvar.expr import Monomial, PowerExpr, canonicalize, expr_equal, frac_partial, parse_expr
from fracvar.forms import Chart, FracForm, build_poincare_cartan, frac_exterior_derivative
from fracvar.helmholtz import check_phase_space, check_phase_space_frac, check_second_order
from fracvar.numfrac import Grid, caputo_num, simulate, solve_frac_ivp
from fracvar.eqgen import CaputoRate, phase_space_fields
from fracvar.specialfn import gamma, mittag_leffler

FIXTURES = Path(__file__).parent / "fixtures"
RESULTS: list[str] = []


def _record(k, title, ok, detail):
    line = f"criterion {k:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _random_poly(rng, names, max_degree=4, n_terms=(1, 6)):
    terms = []
    for _ in range(rng.integers(*n_terms)):
        powers = {}
        budget = int(rng.integers(0, max_degree + 1))
        for _ in range(budget):
            name = names[rng.integers(len(names))]
            powers[name] = powers.get(name, 0.0) + 1.0
        terms.append(Monomial(float(rng.integers(-9, 10)) / 2.0 or 1.0, tuple(sorted(powers.items()))))
    return canonicalize(terms)


# 1 ------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(1)
    bad = 0
    for k in range(50):
        if k % 2:
            q, p = ["q"], ["p"]
        else:
            q, p = ["q1", "q2"], ["p1", "p2"]
        H = _random_poly(rng, q + p)
        a = frac_hamilton_eqs(H, 1.0, q=q, p=p)
        b = hamilton_eqs(H, q=q, p=p)
        for la, lb in zip(a.laws, b.laws):
            if la.var != lb.var or la.lhs != lb.lhs or not expr_equal(la.rhs, lb.rhs, 1e-12):
                bad += 1
                break
    return bad == 0, f"{50 - bad}/50 random H reduce to the classical equations at tol 1e-12"


# 2 ------------------------------------------------------------------------

def criterion_2():
    failures, worst_ratio = [], 0.0
    orders = []
    for beta in (1.0, 2.0, 2.5):
        for alpha in (0.3, 0.5, 0.9):
            exact = gamma(beta + 1) / gamma(beta + 1 - alpha)
            err = abs(caputo_num(lambda y: y ** beta, alpha, 1.0, 1e-4) - exact)
            limit = 1e-5 * max(1.0, abs(exact))
            worst_ratio = max(worst_ratio, err / limit)
            if err > limit:
                failures.append(f"beta={beta} alpha={alpha} err={err:.3g} > {limit:.3g}")
            errs = [abs(caputo_num(lambda y: y ** beta, alpha, 1.0, h) - exact)
                    for h in (1e-2, 5e-3, 2.5e-3)]
            if max(errs) < 1e-12:
                # the scheme is exact on linear data; there is no order to observe
                continue
            for e1, e2 in zip(errs, errs[1:]):
                order = math.log2(e1 / e2)
                orders.append(order)
                if order < 2 - alpha - 0.1:
                    failures.append(f"beta={beta} alpha={alpha} order={order:.3f}")
    detail = (f"worst err/limit {worst_ratio:.3g}, observed orders "
              f"{min(orders):.3f}..{max(orders):.3f}")
    if failures:
        detail += "; failing: " + "; ".join(failures)
    return not failures, detail


# 3 ------------------------------------------------------------------------

def criterion_3():
    parts, ok = [], True
    grid = Grid.span(0.0, 1.0, 1e-3)
    for alpha in (0.5, 0.8):
        exact = np.array([mittag_leffler(alpha, -t ** alpha) for t in grid.times])
        for method, tol in (("pece", 1e-4), ("gl", 5e-3)):
            tr = solve_frac_ivp(lambda t, x: -x, [CaputoRate(alpha)], [1.0], grid, method)
            err = float(np.max(np.abs(tr.states[:, 0] - exact)))
            good = err <= tol
            ok &= good
            parts.append(f"{method} a={alpha} {err:.3g}{'' if good else f' > {tol:g}'}")
    return ok, "L_inf vs E_a(-t^a): " + ", ".join(parts)


# 4 ------------------------------------------------------------------------

def criterion_4():
    H = parse_expr("p^2/2 + q^2/2", ["q", "p"])
    tr = simulate(SystemDef(q=("q",), hamiltonian=H), [1.0, 0.0], Grid.span(0.0, 10.0, 1e-3))
    t = tr.times
    err = max(np.max(np.abs(tr.column("q") - np.cos(t))), np.max(np.abs(tr.column("p") + np.sin(t))))
    drift = float(np.max(np.abs(tr.extras["H"] - tr.extras["H"][0])))
    return err <= 1e-4 and drift <= 1e-6, f"L_inf error {err:.3g}, energy drift {drift:.3g}"


# 5 ------------------------------------------------------------------------

def criterion_5():
    g = 0.1
    QP = ["q", "p"]
    H = parse_expr("p^2/2 + q^2/2", QP)
    friction = [parse_expr(f"-{g}*p", QP)]
    checks = []

    G, F = phase_space_fields(H, 1.0)
    checks.append(("oscillator HC1", check_phase_space(G, F).satisfied))
    G, F = phase_space_fields(H, 1.0, F=friction)
    rep = check_phase_space(G, F)
    checks.append(("friction fails only HC1.2 with -gamma",
                   [v.condition for v in rep.violations] == ["HC1.2"]
                   and expr_equal(rep.violations[0].residual, PowerExpr.const(-g), 1e-12)))
    G, F = phase_space_fields(H, 0.5)
    checks.append(("oscillator FHC a=0.5", check_phase_space_frac(G, F, 0.5).satisfied))
    G, F = phase_space_fields(H, 0.5, F=friction)
    rep = check_phase_space_frac(G, F, 0.5)
    checks.append(("friction fails FHC.2 a=0.5", [v.condition for v in rep.violations] == ["FHC.2"]))
    jet = ["t", "q", "qdot", "qddot"]
    rep = check_second_order([parse_expr(f"qddot + {g}*qdot + q", jet)])
    checks.append(("damped second order fails P11 with 2 gamma",
                   [v.condition for v in rep.violations] == ["P11"]
                   and expr_equal(rep.violations[0].residual, PowerExpr.const(2 * g), 1e-12)))
    failed = [name for name, good in checks if not good]
    return not failed, f"{len(checks) - len(failed)}/{len(checks)} verdicts" + (
        f"; failing: {', '.join(failed)}" if failed else "")


# 6 ------------------------------------------------------------------------

def criterion_6():
    rng = np.random.default_rng(6)
    names = ("x", "y", "z")
    bad = total = 0
    for alpha in (0.3, 0.5, 0.9):
        chart = Chart(names, alpha)
        for _ in range(100):
            powers = tuple((n, float(rng.choice([0, 1, 2, 3]) if rng.random() < 0.5
                                     else round(rng.uniform(0, 3), 2))) for n in names)
            V = canonicalize([Monomial(float(rng.uniform(-3, 3)), powers)])
            dd = frac_exterior_derivative(frac_exterior_derivative(FracForm.function(chart, V)))
            total += 1
            bad += not dd.is_zero(1e-12)
    return bad == 0, f"{total - bad}/{total} monomials satisfy d(dV) = 0 at 1e-12"


# 7 ------------------------------------------------------------------------

def criterion_7():
    rng = np.random.default_rng(7)
    bad = 0
    for k in range(20):
        alpha = (0.3, 0.5, 0.9)[k % 3]
        H = _random_poly(rng, ["t", "q", "p"], max_degree=4)
        d = frac_exterior_derivative(build_poincare_cartan(H, alpha))
        want = {
            ("t", "q"): frac_partial(PowerExpr.var("p"), "t", alpha) + frac_partial(H, "q", alpha),
            ("q", "p"): PowerExpr.var("p", 1 - alpha, -1 / gamma(2 - alpha)),
            ("t", "p"): frac_partial(H, "p", alpha),
        }
        got = d.as_dict()
        extra = set(got) - set(want)
        if extra or not all(expr_equal(d.coeff(*b), c, 1e-12) for b, c in want.items()):
            bad += 1
    return bad == 0, f"{20 - bad}/20 random H give exactly the three coefficient groups"


# 8 ------------------------------------------------------------------------

def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    grid = Grid.span(0.0, 5.0, 1e-3)
    for _ in range(5):
        a, b, c = rng.uniform(0.1, 2.0), rng.uniform(-1, 1), rng.uniform(-1, 1)
        U = f"{a!r}*q^2 + {b!r}*q + {c!r}"
        L = parse_expr(f"v^2/2 - ({U})", ["t", "q", "v"])
        H = parse_expr(f"p^2/2 + {U}", ["t", "q", "p"])
        x0 = [float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))]
        lag = simulate(frac_euler_lagrange(L, 1.0), x0, grid)
        ham = simulate(frac_hamilton_eqs(H, 1.0), x0, grid)
        worst = max(worst, float(np.max(np.abs(lag.states - ham.states))))
    return worst <= 1e-6, f"max L_inf gap over 5 potentials {worst:.3g}"


# 9 ------------------------------------------------------------------------

def criterion_9():
    H = parse_expr("p^2/2 + q^2/2", ["q", "p"])
    F = (parse_expr("-0.1*p", ["q", "p"]),)
    damped = simulate(SystemDef(q=("q",), hamiltonian=H, forces_F=F), [1.0, 0.0],
                      Grid.span(0.0, 10.0, 1e-3))
    rise = float(np.max(np.diff(damped.extras["H"])))
    mono = rise <= 0.0
    s = SystemDef(q=("q",), alpha=0.9, hamiltonian=H, forces_F=F)
    a = simulate(s, [1.0, 1.0], Grid.span(0.0, 5.0, 1e-3))
    b = simulate(s, [1.0, 1.0], Grid.span(0.0, 5.0, 5e-4))
    finite = bool(np.all(np.isfinite(a.states)) and np.all(np.isfinite(b.states)))
    gap = float(np.max(np.abs(a.states - b.states[::2])))
    return mono and finite and gap < 5e-3, (
        f"alpha=1 largest energy step {rise:.3g}; alpha=0.9 finite={finite}, halved-step gap {gap:.3g}")


# 10 -----------------------------------------------------------------------

CLI_MATRIX = {
    "oscillator.ini": (0, 0, 0),
    "oscillator_frac.ini": (0, 0, 0),
    "friction.ini": (0, 0, 0),
    "relaxation.ini": (0, 0, 0),
    "lagrangian.ini": (0, 0, 0),
    "degenerate.ini": (0, 3, 3),
    "missing_coords.ini": (2, 2, 2),
    "blowup.ini": (0, 0, 4),
}


def _cli(args):
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return main(args)


def criterion_10():
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for name, expected in CLI_MATRIX.items():
            for verb, code in zip(("classify", "derive", "simulate"), expected):
                got = _cli(["--config", str(FIXTURES / name), "--out", str(tmp / "a"), verb])
                if got != code:
                    problems.append(f"{name} {verb} -> {got} (want {code})")
        for name in CLI_MATRIX:
            _cli(["--config", str(FIXTURES / name), "--out", str(tmp / "b"), "simulate"])
            _cli(["--config", str(FIXTURES / name), "--out", str(tmp / "b"), "--json", "derive"])
        first = {p.relative_to(tmp / "a"): p.read_bytes() for p in (tmp / "a").rglob("*") if p.is_file()}
        for rel, data in first.items():
            if rel.suffix == ".csv" and (tmp / "b" / rel).read_bytes() != data:
                problems.append(f"{rel} differs between runs")
        for rel in first:
            if rel.suffix != ".csv":
                continue
            header, rows = read_csv(tmp / "a" / rel)
            text = "\n".join(",".join(repr(x) for x in r) for r in rows)
            body = [ln for ln in first[rel].decode().split("\n")[1:] if ln and not ln.startswith("#")]
            if text != "\n".join(body):
                problems.append(f"{rel} does not round-trip")
    cells = sum(len(v) for v in CLI_MATRIX.values())
    return not problems, f"{cells} verb/config cells, round-trip and rerun checks" + (
        "; " + "; ".join(problems) if problems else " all clean")


CRITERIA = [
    (1, "alpha -> 1 reduction", criterion_1),
    (2, "Caputo power rule vs L1 quadrature", criterion_2),
    (3, "fractional relaxation oracle", criterion_3),
    (4, "classical limit dynamics", criterion_4),
    (5, "Helmholtz classification", criterion_5),
    (6, "fractional Poincare lemma", criterion_6),
    (7, "fractional Poincare-Cartan structure", criterion_7),
    (8, "Lagrange/Hamilton agreement", criterion_8),
    (9, "non-Hamiltonian dissipation", criterion_9),
    (10, "CLI contract", criterion_10),
]


@pytest.mark.parametrize("k, title, fn", CRITERIA, ids=[f"criterion_{k}" for k, _, _ in CRITERIA])
def test_criterion(k, title, fn):
    ok, detail = fn()
    _record(k, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for k, title, fn in CRITERIA:
        _record(k, title, *fn())
