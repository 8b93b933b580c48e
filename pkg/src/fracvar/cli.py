"""Command-line front end.

Usage::

    fracvar --config system.ini [--out DIR] [--json] [--quiet] classify|derive|simulate
    fracvar caputo --alpha 0.5 --expr "t^2" --t 1 --h 1e-4
    fracvar ml --alpha 0.8 --z -1

Exit codes: 0 success, 2 input error, 3 derivation error, 4 integration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .eqgen import SystemDef, derive, phase_space_fields
from .errors import CompileError, DerivationError, FracvarError, IntegrationError
from .expr import DerivKind, compile_expr, evaluate, frac_partial, parse_expr
from .helmholtz import check_phase_space, check_phase_space_frac, check_second_order, \
    euler_lagrange_expressions
from .numfrac import METHODS, PECE, Grid, Trajectory, caputo_num, simulate
from .specialfn import mittag_leffler

EXIT_OK, EXIT_INPUT, EXIT_DERIVATION, EXIT_INTEGRATION = 0, 2, 3, 4
HEADER = f"fracvar-report {__version__}"


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    system: SystemDef
    simulate: dict | None
    output: dict[str, str]
    source: str


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _names(value: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in _unquote(value).split(",") if n.strip())
    if not names:
        raise ConfigError("empty name list")
    return names


def _floats(value: str) -> list[float]:
    try:
        return [float(x) for x in _unquote(value).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {value!r}") from exc


def _float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key {key!r} in [{section.name}]")
        return default
    try:
        return float(_unquote(section[key]))
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} is not a number") from exc


def _forces(cp, prefix, n, chart, params):
    if not cp.has_section("forces"):
        return ()
    sec = cp["forces"]
    known = {f"{prefix}_{i + 1}" for i in range(n)}
    for key in sec:
        if key.startswith(prefix + "_") and key not in known:
            raise ConfigError(f"[forces] {key} does not match any coordinate")
    if not any(k in sec for k in known):
        return ()
    return tuple(parse_expr(_unquote(sec.get(f"{prefix}_{i + 1}", "0")), chart, params)
                 for i in range(n))


def load_config(path: str | Path) -> Config:
    """Read an INI system definition."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    text = Path(path).read_text(encoding="utf-8")
    cp.read_string(text, source=str(path))
    if not cp.has_section("system"):
        raise ConfigError("missing [system] section")
    sec = cp["system"]
    if "coords" not in sec:
        raise ConfigError("[system] needs coords")
    q = _names(sec["coords"])
    has_h, has_l = "hamiltonian" in sec, "lagrangian" in sec
    if has_h == has_l:
        raise ConfigError("[system] needs exactly one of hamiltonian / lagrangian")
    alpha = _float(sec, "alpha", 1.0)
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    beta = _float(sec, "beta") if "beta" in sec else None
    kind = DerivKind.parse(_unquote(sec.get("deriv", "caputo")))
    p = _names(sec["momenta"]) if "momenta" in sec else None
    v = _names(sec["velocities"]) if "velocities" in sec else None
    t = _unquote(sec.get("time", "t"))
    params = {}
    if cp.has_section("parameters"):
        for key, value in cp["parameters"].items():
            try:
                params[key] = float(_unquote(value))
            except ValueError as exc:
                raise ConfigError(f"parameter {key} is not a number") from exc
    # resolve default names before building the expression charts
    probe = SystemDef(q=q, alpha=alpha, hamiltonian=parse_expr("0", []), p=p, v=v, t=t)
    p, v = probe.p, probe.v
    if has_h:
        chart = [t, *q, *p]
        H = parse_expr(_unquote(sec["hamiltonian"]), chart, params)
        G = _forces(cp, "G", len(q), chart, params)
        F = _forces(cp, "F", len(q), chart, params)
        system = SystemDef(q=q, alpha=alpha, hamiltonian=H, beta=beta, forces_G=G, forces_F=F,
                           kind=kind, p=p, v=v, t=t, params=params)
    else:
        if cp.has_section("forces") and len(cp["forces"]):
            raise ConfigError("[forces] requires a hamiltonian")
        L = parse_expr(_unquote(sec["lagrangian"]), [t, *q, *v], params)
        system = SystemDef(q=q, alpha=alpha, lagrangian=L, beta=beta, kind=kind, p=p, v=v, t=t,
                           params=params)

    sim = None
    if cp.has_section("simulate"):
        s = cp["simulate"]
        if "x0" not in s:
            raise ConfigError("[simulate] needs x0")
        sim = {
            "x0": _floats(s["x0"]),
            "t0": _float(s, "t0", 0.0),
            "t1": _float(s, "t1"),
            "h": _float(s, "h"),
            "method": _unquote(s.get("method", PECE)).lower(),
            "window": int(_float(s, "window", 0.0)) or None,
        }
        if sim["method"] not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if not sim["h"] > 0:
            raise ConfigError("h must be positive")
        if not sim["t1"] > sim["t0"]:
            raise ConfigError("t1 must exceed t0")
    output = dict(cp["output"]) if cp.has_section("output") else {}
    return Config(system, sim, {k: _unquote(v) for k, v in output.items()}, str(path))


# rendering

def render_report(data: dict, as_json: bool) -> str:
    """Deterministic text (or JSON) rendering of a flat-ish report mapping."""
    if as_json:
        return json.dumps({"version": HEADER, **data}, indent=2, sort_keys=True) + "\n"
    lines = [HEADER]
    for key in sorted(data):
        value = data[key]
        if isinstance(value, list):
            lines.append(f"{key}:")
            for item in value:
                if isinstance(item, dict):
                    item = " ".join(f"{k}={_scalar(item[k])}" for k in sorted(item))
                lines.append(f"  {item}")
        else:
            lines.append(f"{key}: {_scalar(value)}")
    return "\n".join(lines) + "\n"


def _scalar(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if v is None:
        return "none"
    if isinstance(v, list):
        return ",".join(_scalar(x) for x in v)
    return str(v)


def write_csv(traj: Trajectory, path: Path):
    cols = traj.columns
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    data = [traj.times] + [traj.column(c) for c in cols[1:]]
    for row in zip(*data):
        w.writerow([repr(float(x)) for x in row])
    if traj.truncated:
        buf.write(f"# truncated: {traj.truncated}\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def write_svg(traj: Trajectory, path: Path):
    width, height, pad = 800, 600, 60
    t = traj.times
    series = [(name, traj.column(name)) for name in traj.state_vars]
    lo = min(float(s.min()) for _, s in series)
    hi = max(float(s.max()) for _, s in series)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    t0, t1 = float(t[0]), float(t[-1]) if len(t) > 1 else float(t[0]) + 1.0
    if t1 == t0:
        t1 = t0 + 1.0

    def sx(x):
        return pad + (x - t0) / (t1 - t0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - lo) / (hi - lo) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    stride = max(1, len(t) // 2000)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
           f'width="{width}" height="{height}">',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>',
           f'<text x="{pad}" y="{height - pad / 3:.0f}">t: {t0:.6g} .. {t1:.6g}</text>',
           f'<text x="5" y="{pad - 10}">range: {lo:.6g} .. {hi:.6g}</text>']
    for k, (name, ys) in enumerate(series):
        pts = " ".join(f"{sx(float(a)):.2f},{sy(float(b)):.2f}" for a, b in zip(t[::stride], ys[::stride]))
        color = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{width - pad + 5}" y="{pad + 20 * (k + 1)}" fill="{color}">{name}</text>')
    out.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


# commands

def _emit(args, cfg, data):
    text = render_report(data, args.json)
    target = cfg.output.get("report") if cfg is not None else None
    if target:
        path = Path(args.out or ".") / target
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(text)


def _violations(report):
    return [v.to_dict() for v in report.violations]


def cmd_classify(args, cfg: Config) -> int:
    s = cfg.system
    data = {"command": "classify", "system": s.digest(), "alpha": s.alpha}
    if s.hamiltonian is None:
        n = len(s.q)
        F = euler_lagrange_expressions(s.lagrangian, s.t, list(s.q), list(s.v), None, n)
        rep = check_second_order(F, s.t, list(s.q), list(s.v))
        data["variational"] = rep.satisfied
        data["violations"] = _violations(rep)
        _emit(args, cfg, data)
        return EXIT_OK
    G, F = phase_space_fields(s.hamiltonian, 1.0, s.kind, s.q, s.p, s.forces_G, s.forces_F)
    rep = check_phase_space(G, F, s.q, s.p)
    Gf, Ff = phase_space_fields(s.hamiltonian, s.alpha, s.kind, s.q, s.p, s.forces_G, s.forces_F)
    frep = check_phase_space_frac(Gf, Ff, s.alpha, s.kind, s.q, s.p)
    data["hamiltonian"] = rep.satisfied
    data[f"fractional-hamiltonian(alpha={s.alpha!r})"] = frep.satisfied
    data["violations"] = _violations(rep) + _violations(frep)
    _emit(args, cfg, data)
    return EXIT_OK


def cmd_derive(args, cfg: Config) -> int:
    eom = derive(cfg.system)
    data = {"command": "derive", "system": cfg.system.digest(), "provenance": eom.provenance,
            "state": list(eom.state_vars), "equations": [law.to_text() for law in eom.laws]}
    if eom.notes:
        data["notes"] = list(eom.notes)
    _emit(args, cfg, data)
    return EXIT_OK


def cmd_simulate(args, cfg: Config) -> int:
    if cfg.simulate is None:
        raise ConfigError("missing [simulate] section")
    sim = cfg.simulate
    try:
        grid = Grid.span(sim["t0"], sim["t1"], sim["h"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    code, failure = EXIT_OK, None
    try:
        traj = simulate(cfg.system, sim["x0"], grid, sim["method"], sim["window"])
    except IntegrationError as exc:
        traj, code, failure = exc.trajectory, EXIT_INTEGRATION, exc
    out = Path(args.out or ".")
    csv_name = cfg.output.get("csv", "trajectory.csv")
    if traj is not None:
        write_csv(traj, out / csv_name)
        if cfg.output.get("svg") and len(traj.states):
            write_svg(traj, out / cfg.output["svg"])
    data = {"command": "simulate", "system": cfg.system.digest(), "csv": csv_name,
            "method": sim["method"], "alpha": cfg.system.alpha,
            "memory_window": sim["window"],
            "rows": 0 if traj is None else len(traj.states),
            "truncated": None if traj is None else traj.truncated}
    _emit(args, cfg, data)
    if failure is not None:
        print(f"fracvar: integration failed: {failure}", file=sys.stderr)
    return code


def cmd_caputo(args) -> int:
    e = parse_expr(args.expr, ["t"])
    analytic = evaluate(frac_partial(e, "t", args.alpha, DerivKind.CAPUTO), {"t": args.t})
    print(f"analytic: {analytic!r}")
    f = compile_expr(e, ["t"])
    quad = caputo_num(lambda y: f([y]), args.alpha, args.t, args.h)
    print(f"quadrature: {quad!r}")
    print(f"abs_diff: {abs(quad - analytic)!r}")
    return EXIT_OK


def cmd_ml(args) -> int:
    print(repr(mittag_leffler(args.alpha, args.z, tol=1e-12)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI system definition")
    common.add_argument("--out", default=argparse.SUPPRESS, help="directory for output files")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="do not print the report")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit reports as JSON")
    parser = argparse.ArgumentParser(prog="fracvar", parents=[common],
                                     description="Fractional Hamilton/Lagrange toolkit")
    parser.add_argument("--version", action="version", version=HEADER)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (("classify", "Helmholtz classification"),
                       ("derive", "print the equations of motion"),
                       ("simulate", "integrate and write a CSV trajectory")):
        sub.add_parser(verb, parents=[common], help=text)
    cap = sub.add_parser("caputo", parents=[common], help="Caputo derivative of an expression in t")
    cap.add_argument("--alpha", type=float, required=True)
    cap.add_argument("--expr", required=True)
    cap.add_argument("--t", type=float, required=True)
    cap.add_argument("--h", type=float, default=1e-4)
    ml = sub.add_parser("ml", parents=[common], help="Mittag-Leffler function")
    ml.add_argument("--alpha", type=float, required=True)
    ml.add_argument("--z", type=float, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    for name, default in (("config", None), ("out", None), ("quiet", False), ("json", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        if args.verb == "caputo":
            return cmd_caputo(args)
        if args.verb == "ml":
            return cmd_ml(args)
        if not args.config:
            raise ConfigError(f"{args.verb} needs --config")
        cfg = load_config(args.config)
        return {"classify": cmd_classify, "derive": cmd_derive,
                "simulate": cmd_simulate}[args.verb](args, cfg)
    except (DerivationError, CompileError) as exc:
        print(f"fracvar: derivation failed: {exc}", file=sys.stderr)
        return EXIT_DERIVATION
    except IntegrationError as exc:
        print(f"fracvar: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (FracvarError, ValueError, KeyError, OSError, configparser.Error) as exc:
        print(f"fracvar: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
