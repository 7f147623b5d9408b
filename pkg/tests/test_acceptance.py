"""Acceptance criteria.  Each test prints one ``[PASS]``/``[FAIL]`` line;
``python tests/test_acceptance.py`` runs them all outside pytest."""
from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from jetvar.forms import vf_d
from jetvar.jetcalc import vertical_total_residual, commutator_residual, homotopy_residual
from jetvar.numeric import Grid, PolyCurve, bump_field, euler_max_along, first_variation, reparam_invariance, smoothstep, t_var
from jetvar.suites import Sampler, bicomplex_residuals, graph_curve, run_suite, homotopy_bidegrees
from jetvar.symexpr import Dimensions, u
from jetvar.variational import L_area, L_length, L_minor, Lagrangian, euler_form, fundamental, variational_checks


def _commutator_suites() -> tuple[bool, str]:
    t0 = time.perf_counter()
    smp = Sampler(0)
    bad = 0
    count = 0
    for m in (1, 2, 3):
        dims = Dimensions(m, m + 1)
        for case in range(100):
            r = 1 + case % 2
            base_form = smp.form(dims, r, order=0)
            first = smp.form(dims, r, order=1)
            for j in range(1, m + 1):
                for k in range(1, m + 1):
                    bad += not vertical_total_residual(base_form, j, k).is_zero()
                    bad += not commutator_residual(first, j, k).is_zero()
            count += 2
    elapsed = time.perf_counter() - t0
    return bad == 0 and elapsed < 60, f"{count} forms, {bad} nonzero residuals, {elapsed:.1f}s"


def _homotopy() -> tuple[bool, str]:
    t0 = time.perf_counter()
    smp = Sampler(1)
    bad = 0
    truncated_bad = 0
    count = 0
    for m in (2, 3):
        dims = Dimensions(m, m + 1)
        for r, s in homotopy_bidegrees(m):
            for _ in range(50):
                xi = smp.vector_form(dims, r, s)
                bad += not homotopy_residual(xi).is_zero()
                truncated_bad += not homotopy_residual(xi, complete=False).is_zero()
                count += 1
    elapsed = time.perf_counter() - t0
    detail = (
        f"{count} forms, {bad} nonzero residuals, {elapsed:.1f}s "
        f"(two-term operators fail on {truncated_bad})"
    )
    return bad == 0 and elapsed < 120, detail


def _bicomplex() -> tuple[bool, str]:
    smp = Sampler(2)
    seen: dict = {}
    bad: dict = {}
    case = 0
    while len(seen) < 4 or min(seen.values()) < 100:
        m = 1 + case % 3
        dims = Dimensions(m, m + 1)
        xi = smp.vector_form(dims, case % 3, smp.rng.randrange(m))
        for law, res in bicomplex_residuals(xi).items():
            seen[law] = seen.get(law, 0) + 1
            bad[law] = bad.get(law, 0) + (not res.is_zero())
        case += 1
    detail = ", ".join(f"{law}: {seen[law] - bad[law]}/{seen[law]}" for law in sorted(seen))
    return not any(bad.values()), detail


def _suite(name: str) -> tuple[bool, str]:
    res = run_suite(name, seed=0, trials=100)
    return res.passed, f"{res.trials} trials, {len(res.failures)} failures, {res.elapsed:.1f}s"


def _contact() -> tuple[bool, str]:
    res = run_suite("contact", seed=0, trials=20)
    return res.passed, f"20 curves and 20 points per (m, n), {len(res.failures)} failures"


VARIATIONAL = [
    ("length n=2", lambda: L_length(2)),
    ("length n=3", lambda: L_length(3)),
    ("area n=3", lambda: L_area(3)),
    ("minor n=2", lambda: L_minor(2)),
    ("minor n=3", lambda: L_minor(3)),
    ("minor n=4", lambda: L_minor(4)),
]


def _variational() -> tuple[bool, str]:
    ok = True
    parts = []
    for name, make in VARIATIONAL:
        reports = variational_checks(make())
        numeric = sum(r.status == "numeric-pass" for r in reports)
        failed = [r.check for r in reports if not r.passed]
        ok &= not failed
        parts.append(f"{name}: {len(reports) - len(failed)}/{len(reports)}" + (f" ({numeric} numeric)" if numeric else ""))
    return ok, "; ".join(parts)


def _null_lagrangian() -> tuple[bool, str]:
    e_minor = all(euler_form(L_minor(n)).is_zero() for n in (2, 3, 4))
    closed = all(vf_d(fundamental(L_minor(n)).top).is_zero() for n in (2, 3, 4))
    control = not euler_form(L_area(3)).is_zero()
    return e_minor and closed and control, f"E0(minor)=0: {e_minor}, d Theta_2=0: {closed}, E0(area)!=0: {control}"


def _first_variation() -> tuple[bool, str]:
    t1, t2 = t_var(1), t_var(2)
    lag = L_area(3)
    surf = graph_curve(2, t1 * t1 * t2 / 2 + t2 * t2 / 3 - t1 * t2 / 5)
    X = bump_field(3, 2, [0, 0, 1])
    fine = first_variation(lag, surf, X, Grid(64))
    gap = abs(fine.lhs - fine.rhs)
    r2 = first_variation(lag, surf, X, Grid(2)).residual
    r4 = first_variation(lag, surf, X, Grid(4)).residual
    line = euler_max_along(L_length(3), PolyCurve([t1, 2 * t1 - 1, 3 - t1], 1), samples=100)
    plane = euler_max_along(lag, PolyCurve([t1, t2, 2 * t1 - t2 + 1], 2), samples=100)
    ok = gap < 1e-8 and r2 >= 4 * r4 and line < 1e-12 and plane < 1e-12
    detail = (
        f"|lhs-rhs| at N=64: {gap:.2e}; residual N=2 -> 4: {r2:.2e} -> {r4:.2e} ({r2 / r4:.1f}x); "
        f"extremal max|E0|: line {line:.1e}, plane {plane:.1e}"
    )
    return ok, detail


def _reparametrisation() -> tuple[bool, str]:
    t1, t2 = t_var(1), t_var(2)
    arc = PolyCurve([t1, t1 * t1 - t1 / 2], 1)
    surf = PolyCurve([t1, t2, t1 * t2 + t1 * t1 / 2], 2)
    r1 = reparam_invariance(L_length(2), arc, smoothstep(1), Grid(200)).residual
    r2 = reparam_invariance(L_area(3), surf, smoothstep(2), Grid(64)).residual
    control = Lagrangian(u(1, 1) ** 2, Dimensions(1, 2))
    rc = reparam_invariance(control, arc, smoothstep(1), Grid(200)).residual
    ok = r1 < 1e-8 and r2 < 1e-8 and rc > 1e-2
    return ok, f"length {r1:.1e}, area {r2:.1e}, non-homogeneous control {rc:.3f}"


CRITERIA = [
    (1, "S and d_k commutators", _commutator_suites),
    (2, "homotopy formula", _homotopy),
    (3, "bicomplex laws", _bicomplex),
    (4, "jet-group suite", lambda: _suite("group")),
    (5, "exchange/holonomic suite", lambda: _suite("exchange")),
    (6, "contact suite", _contact),
    (7, "variational identities", _variational),
    (8, "null Lagrangian", _null_lagrangian),
    (9, "first variation", _first_variation),
    (10, "reparametrisation invariance", _reparametrisation),
]


def run_criterion(number: int) -> tuple[bool, str]:
    _, name, fn = CRITERIA[number - 1]
    ok, detail = fn()
    return ok, f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(n) for n, _, _ in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
