"""Command-line front end.

Problem files are plain text with named sections::

    [dims]
    m = 1
    n = 2

    [lagrangian]
    L = sqrt(u[1;1]^2 + u[2;1]^2)

    [curves]
    line = t[1], 2*t[1] + 1

    [fields]
    bump = u[1]*(1 - u[1]), 0

    [options]
    grid = 64
    rule = gauss
    tol = 1e-8

Exit codes: 0 pass, 1 verification failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, JetError, ParseError, PreconditionError
from .forms import vf_d
from .jetcalc import i_T, i_T_power
from .jetgroup import check_homogeneous_finite, homogeneity_symbolic, random_regular_point
from .numeric import Grid, PolyCurve, action, first_variation
from .parser import parse_expr
from .prolong import VectorFieldOnE
from .suites import SUITES, run_suite
from .symexpr import Dimensions
from .variational import (
    Lagrangian,
    caratheodory,
    caratheodory_chain,
    descent_residuals,
    euler_form,
    euler_lagrange,
    fundamental,
    hilbert_theta1,
    lepagean_check,
    top_identity_rhs,
    verify_equal,
    verify_zero,
)

SECTIONS = ("dims", "lagrangian", "curves", "fields", "options")
OPTION_TYPES = {"grid": int, "rule": str, "g": int, "tol": float, "seed": int}


# ----------------------------------------------------------------------------
# problem files


@dataclass
class ProblemFile:
    dims: Dimensions
    lagrangian: Lagrangian
    curves: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)


def _split_top(text: str) -> list[tuple[str, int]]:
    """Split on commas outside brackets; returns ``(piece, offset)`` pairs."""
    out = []
    depth = 0
    start = 0
    for k, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            out.append((text[start:k], start))
            start = k + 1
    out.append((text[start:], start))
    return out


_SECTION = re.compile(r"^\s*\[(\w+)\]\s*$")
_ENTRY = re.compile(r"^(\s*)([A-Za-z_][\w-]*)(\s*=\s*)(.*?)\s*$")


def _raw_sections(text: str) -> dict:
    """``section -> [(key, value, line, column)]``."""
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in SECTIONS:
                raise ParseError(f"unknown section [{current}]", lineno, line.index("[") + 1)
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", lineno, 1)
            sections[current] = []
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ParseError("expected 'name = value'", lineno, 1)
        if current is None:
            raise ParseError("entry outside any section", lineno, 1)
        key, value = m.group(2), m.group(4)
        if not value:
            raise ParseError(f"empty value for {key!r}", lineno, len(line.rstrip()) + 1)
        sections[current].append((key, value, lineno, m.end(3) + 1))
    return sections


def parse_problem(text: str) -> ProblemFile:
    sections = _raw_sections(text)
    if "dims" not in sections:
        raise ParseError("missing [dims] section", 1, 1)
    dvals = {}
    for key, value, line, col in sections["dims"]:
        if key not in ("m", "n"):
            raise ParseError(f"unknown dimension {key!r}", line, 1)
        if not value.isdigit():
            raise ParseError(f"{key} must be a positive integer", line, col)
        dvals[key] = (int(value), line, col)
    if set(dvals) != {"m", "n"}:
        raise ParseError("[dims] needs both m and n", 1, 1)
    try:
        dims = Dimensions(dvals["m"][0], dvals["n"][0])
    except ValueError as exc:
        raise ParseError(str(exc), dvals["n"][1], dvals["n"][2]) from None

    lag_entries = sections.get("lagrangian", [])
    if len(lag_entries) != 1 or lag_entries[0][0] != "L":
        raise ParseError("[lagrangian] needs exactly one entry 'L = ...'", 1, 1)
    _, value, line, col = lag_entries[0]
    L = parse_expr(value, dims, line=line, column=col)
    try:
        lagrangian = Lagrangian(L, dims)
    except PreconditionError as exc:
        raise ParseError(str(exc), line, col) from None

    curves = {}
    for name, value, line, col in sections.get("curves", []):
        parts = _split_top(value)
        if len(parts) != dims.n:
            raise ParseError(f"curve {name!r} needs {dims.n} components, got {len(parts)}", line, col)
        comps = [parse_expr(p, dims, allow_t=True, line=line, column=col + off) for p, off in parts]
        try:
            curves[name] = PolyCurve(comps, dims.m)
        except PreconditionError as exc:
            raise ParseError(str(exc), line, col) from None

    fields = {}
    for name, value, line, col in sections.get("fields", []):
        parts = _split_top(value)
        if len(parts) != dims.n:
            raise ParseError(f"field {name!r} needs {dims.n} components, got {len(parts)}", line, col)
        comps = [parse_expr(p, dims, line=line, column=col + off) for p, off in parts]
        try:
            fields[name] = VectorFieldOnE(comps)
        except PreconditionError as exc:
            raise ParseError(str(exc), line, col) from None

    options = {}
    for key, value, line, col in sections.get("options", []):
        if key not in OPTION_TYPES:
            raise ParseError(f"unknown option {key!r}", line, 1)
        try:
            options[key] = OPTION_TYPES[key](value)
        except ValueError:
            raise ParseError(f"bad value for option {key!r}", line, col) from None
    return ProblemFile(dims, lagrangian, curves, fields, options)


def load_problem(path: str) -> ProblemFile:
    return parse_problem(Path(path).read_text())


# ----------------------------------------------------------------------------
# commands


class Output:
    """Collects the JSON report and prints human-readable lines."""

    def __init__(self, args):
        self.args = args
        self.report: dict = {}

    def say(self, text: str = ""):
        print(text)

    def finish(self, code: int) -> int:
        self.report["exit_code"] = code
        if getattr(self.args, "json", None):
            Path(self.args.json).write_text(json.dumps(self.report, indent=2, default=str) + "\n")
        return code


def _option(args, prob: ProblemFile | None, key: str, default):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if prob is not None and key in prob.options:
        return prob.options[key]
    return default


def _grid(args, prob) -> Grid:
    return Grid(_option(args, prob, "grid", 64), _option(args, prob, "rule", "gauss"), _option(args, prob, "g", 4))


def cmd_check(args, out: Output) -> int:
    prob = load_problem(args.problem)
    seed = _option(args, prob, "seed", 0)
    sym = homogeneity_symbolic(prob.lagrangian.L, prob.dims.m)
    fin = check_homogeneous_finite(prob.lagrangian.L, prob.dims, trials=args.trials, seed=seed)
    out.report = {"check": "homogeneity", "symbolic": sym.to_json(), "finite": fin.to_json()}
    out.say(f"symbolic  d_j^i L = delta_j^i L : {sym.status}")
    if sym.failures:
        out.say("   i  j  residual")
        for f in sym.failures:
            out.say(f"  {f['i']:2d} {f['j']:2d}  {f['residual']}")
    out.say(f"finite    L(p.A) = det(A) L(p)  : {fin.status} (max rel. error {fin.residual:.3g}, {fin.trials} trials)")
    return 0 if sym.passed and fin.passed else 1


def _sample_ts(m: int, k: int = 5) -> np.ndarray:
    ax = np.linspace(0.1, 0.9, k)
    return np.stack([a.ravel() for a in np.meshgrid(*([ax] * m), indexing="ij")])


def cmd_euler(args, out: Output) -> int:
    prob = load_problem(args.problem)
    lag = prob.lagrangian
    els = euler_lagrange(lag)
    out.report = {"check": "euler", "coefficients": [e.to_json() for e in els], "curves": {}}
    for e in els:
        out.say(f"E_{e.a} = {e.raw.text}")
        out.say(f"    = {e.factored}")
    E0 = euler_form(lag)
    null = E0.is_zero()
    out.report["null"] = null
    if null:
        out.say("the Euler form vanishes identically")
    for name, curve in prob.curves.items():
        ts = _sample_ts(lag.m)
        jet = curve.jet(ts, order=2)
        cols = []
        for e in els:
            vals = np.broadcast_to(np.asarray(e.raw.evaluate(jet), dtype=float), (ts.shape[1],))
            cols.append(vals)
        worst = float(max(np.abs(c).max() for c in cols))
        out.report["curves"][name] = {
            "t": ts.T.tolist(),
            "values": np.stack(cols, axis=1).tolist(),
            "max_abs": worst,
        }
        out.say(f"curve {name}: max |E_a| over {ts.shape[1]} samples = {worst:.3e}")
    return 0


def _nonvanishing(lag: Lagrangian, seed: int, samples: int = 50):
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        p = random_regular_point(lag.dims, rng)
        val = float(lag.L.evaluate(p))
        if abs(val) < 1e-12:
            raise DomainError(f"L vanishes at the sample point v = {p.v.tolist()}")


def cmd_equivalents(args, out: Output) -> int:
    prob = load_problem(args.problem)
    lag = prob.lagrangian
    seed = _option(args, prob, "seed", 0)
    m = lag.m
    if not lag.homogeneous:
        out.report = {"check": "equivalents", "kind": args.kind, "status": "fail", "reason": "not homogeneous"}
        out.say("the Lagrangian is not homogeneous; run 'check' for details")
        return 1
    checks = []
    if args.kind == "hilbert":
        theta = hilbert_theta1(lag)
        checks.append(verify_equal("iT-theta1", i_T(theta), lag.form.scale(m), lag.dims, seed=seed))
        top = theta
    else:
        if args.kind == "caratheodory":
            if m >= 2:
                _nonvanishing(lag, seed)
            chain = caratheodory_chain(lag)
        else:
            chain = fundamental(lag)
        top = chain.top
        theta = chain[1]
        for r, res in enumerate(descent_residuals(chain)):
            checks.append(verify_zero(f"descent-r{r}", res, lag.dims, seed=seed))
        checks.append(verify_equal("iT^m-top", i_T_power(top, m), top_identity_rhs(lag), lag.dims, seed=seed))
        closed = vf_d(top).is_zero()
        out.report["closed"] = closed
    lep = lepagean_check(theta, lag)
    checks.extend(lep.checks)
    status = "pass" if all(c.passed for c in checks) and lep.lepagean else "fail"
    out.report.update(
        {
            "check": "equivalents",
            "kind": args.kind,
            "form": top.to_json(),
            "lepagean": lep.lepagean,
            "checks": [c.to_json() for c in checks],
            "status": status,
        }
    )
    out.say(f"{args.kind} equivalent:")
    out.say(f"  {caratheodory(lag) if args.kind == 'caratheodory' else top}")
    if "closed" in out.report:
        out.say(f"  closed (d of the top form vanishes): {out.report['closed']}")
    for c in checks:
        out.say(f"  {c.check}: {c.status}")
    out.say(f"  Lepagean: {'pass' if lep.lepagean else 'fail'}")
    return 0 if status == "pass" else 1


def cmd_verify(args, out: Output) -> int:
    res = run_suite(args.suite, seed=args.seed if args.seed is not None else 0, trials=args.trials)
    out.report = res.to_json()
    out.say(f"{res.name}: {'pass' if res.passed else 'fail'} ({res.trials} trials, seed {res.seed}, {res.elapsed:.2f}s)")
    for f in res.failures:
        out.say(f"  counterexample: {json.dumps(f, default=str)}")
    return 0 if res.passed else 1


def _select(items: dict, name: str | None, what: str) -> dict:
    if name is None:
        if not items:
            raise PreconditionError(f"the problem file defines no {what}")
        return items
    if name not in items:
        raise PreconditionError(f"no {what[:-1]} named {name!r}")
    return {name: items[name]}


def cmd_first_variation(args, out: Output) -> int:
    prob = load_problem(args.problem)
    grid = _grid(args, prob)
    tol = _option(args, prob, "tol", 1e-8)
    curves = _select(prob.curves, args.curve, "curves")
    fields = _select(prob.fields, args.field, "fields")
    out.report = {"check": "first-variation", "results": {}}
    ok = True
    for cname, curve in curves.items():
        for fname, X in fields.items():
            rep = first_variation(prob.lagrangian, curve, X, grid, tol)
            out.report["results"][f"{cname}/{fname}"] = rep.to_json()
            ok &= rep.passed
            out.say(
                f"{cname}/{fname}: lhs={rep.lhs:.12g} rhs={rep.rhs:.12g} boundary={rep.boundary:.12g} "
                f"residual={rep.residual:.3e} {'pass' if rep.passed else 'fail'}"
            )
    return 0 if ok else 1


def cmd_action(args, out: Output) -> int:
    prob = load_problem(args.problem)
    grid = _grid(args, prob)
    curves = _select(prob.curves, args.curve, "curves")
    out.report = {"check": "action", "grid": grid.to_json(), "actions": {}}
    for name, curve in curves.items():
        val = action(prob.lagrangian, curve, grid)
        out.report["actions"][name] = val
        out.say(f"{name}: {val:.15g}")
    return 0


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    common.add_argument("--json", metavar="PATH", help="write a JSON report to PATH")

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--grid", type=int, default=None, help="cells per axis")
    numeric.add_argument("--rule", choices=("gauss", "trapezoid"), default=None)
    numeric.add_argument("--g", type=int, default=None, help="Gauss points per cell")
    numeric.add_argument("--tol", type=float, default=None)

    parser = argparse.ArgumentParser(prog="jetvar", description="Jet calculus for homogeneous variational problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="homogeneity of the Lagrangian")
    p.add_argument("problem")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("euler", parents=[common], help="Euler-Lagrange expressions")
    p.add_argument("problem")
    p.set_defaults(func=cmd_euler)

    p = sub.add_parser("equivalents", parents=[common], help="Lepagean equivalents")
    p.add_argument("problem")
    p.add_argument("--kind", choices=("hilbert", "caratheodory", "fundamental"), default="hilbert")
    p.set_defaults(func=cmd_equivalents)

    p = sub.add_parser("verify", parents=[common], help="run a randomized identity suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("first-variation", parents=[common, numeric], help="first variation formula")
    p.add_argument("problem")
    p.add_argument("--curve", default=None)
    p.add_argument("--field", default=None)
    p.set_defaults(func=cmd_first_variation)

    p = sub.add_parser("action", parents=[common, numeric], help="action integrals along curves")
    p.add_argument("problem")
    p.add_argument("--curve", default=None)
    p.set_defaults(func=cmd_action)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    out = Output(args)
    try:
        code = args.func(args, out)
    except ParseError as exc:
        print(f"{getattr(args, 'problem', '<input>')}:{exc}", file=sys.stderr)
        return out.finish(2)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return out.finish(2)
    except JetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        out.report.setdefault("error", str(exc))
        return out.finish(2)
    return out.finish(code)


if __name__ == "__main__":
    sys.exit(main())
