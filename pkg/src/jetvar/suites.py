"""Seeded randomized identity suites.  Each suite owns its generators, so a
rerun with the same seed reproduces the same instances and failures."""
from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .forms import ScalarForm, VectorForm, vf_d
from .jetcalc import d_T, i_T, vertical_total_residual, commutator_residual, homotopy_residual
from .jetgroup import (
    GroupElement2,
    act2,
    compose2,
    field_at,
    infinitesimal2,
    inverse2,
    random_group_element2,
    random_regular_point,
    solve_element,
)
from .numeric import Grid, PolyCurve, bump_field, first_variation, t_var
from .prolong import (
    DoubleJetPoint,
    VectorFieldOnE,
    contact_det_form,
    contact_pairing_residuals,
    contact_rank,
    example_contact_2form,
    exchange,
    holonomic_embed,
    is_contact_numeric,
    is_holonomic,
    exchange_block_identity,
)
from .symexpr import ZERO, Dimensions, Expr, JetPoint, base, const, var
from .variational import (
    L_area,
    L_length,
    L_minor,
    Lagrangian,
    euler_tower,
    fundamental,
    tower_homotopy_residuals,
    tower_recurrence_residuals,
)

DIMS_CYCLE = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]
DEFAULT_TRIALS = 100


class Sampler:
    """Random expressions and forms with small integer coefficients."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.np = np.random.default_rng(seed)

    def expr(self, dims: Dimensions, order: int, nterms: int = 3) -> Expr:
        cs = dims.coords(order)
        e = ZERO
        for _ in range(nterms):
            t = const(self.rng.randint(-3, 3))
            for _ in range(self.rng.randint(0, 2)):
                t = t * var(self.rng.choice(cs))
            e = e + t
        return e

    def form(self, dims: Dimensions, r: int, order: int, nterms: int = 3) -> ScalarForm:
        cs = dims.coords(order)
        f = ScalarForm(r)
        for _ in range(nterms):
            f = f + ScalarForm.basis(*self.rng.sample(cs, r), coeff=self.expr(dims, order))
        return f

    def vector_form(self, dims: Dimensions, r: int, s: int, order: int = 1, nterms: int = 2) -> VectorForm:
        comps = {}
        for idx in itertools.combinations(range(1, dims.m + 1), s):
            if self.rng.random() < 0.7 or not comps:
                comps[idx] = self.form(dims, r, order, nterms)
        return VectorForm(dims.m, r, s, comps)

    def base_poly(self, dims: Dimensions, nterms: int = 2) -> Expr:
        return self.expr(Dimensions(dims.m, dims.n, 0), 0, nterms)


@dataclass
class SuiteResult:
    name: str
    seed: int
    trials: int
    failures: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "seed": self.seed,
            "trials": self.trials,
            "status": "pass" if self.passed else "fail",
            "failures": self.failures,
            "elapsed": round(self.elapsed, 3),
        }


def _dims(k: int, cycle=DIMS_CYCLE) -> Dimensions:
    m, n = cycle[k % len(cycle)]
    return Dimensions(m, n)


# ----------------------------------------------------------------------------
# symbolic suites


def suite_vertical_total(seed: int, trials: int) -> list:
    """``S^j d_k omega = r delta_k^j omega`` for forms on E."""
    smp = Sampler(seed)
    failures = []
    for case in range(trials):
        dims = _dims(case)
        r = 1 + case % 2
        omega = smp.form(dims, r, order=0)
        for j in range(1, dims.m + 1):
            for k in range(1, dims.m + 1):
                if not vertical_total_residual(omega, j, k).is_zero():
                    failures.append({"case": case, "dims": [dims.m, dims.n], "j": j, "k": k, "input": str(omega)})
    return failures


def suite_commutator(seed: int, trials: int) -> list:
    """``[S^j, d_k] = r delta_k^j`` on first-order forms."""
    smp = Sampler(seed)
    failures = []
    for case in range(trials):
        dims = _dims(case)
        r = 1 + case % 2
        omega = smp.form(dims, r, order=1)
        for j in range(1, dims.m + 1):
            for k in range(1, dims.m + 1):
                if not commutator_residual(omega, j, k).is_zero():
                    failures.append({"case": case, "dims": [dims.m, dims.n], "j": j, "k": k, "input": str(omega)})
    return failures


def homotopy_bidegrees(m: int) -> list[tuple[int, int]]:
    """``(r, w)`` with ``r`` in ``1..m`` and the weight ``w`` of the operand in
    ``0..m-1``."""
    return [(r, w) for r in range(1, m + 1) for w in range(m)]


def suite_homotopy(seed: int, trials: int) -> list:
    """``P2 d_T Xi + d_T P1 Xi = Xi`` on random first-order vector forms."""
    smp = Sampler(seed)
    failures = []
    cases = [(m, n, r, w) for m, n in DIMS_CYCLE for r, w in homotopy_bidegrees(m)]
    for case in range(trials):
        m, n, r, w = cases[case % len(cases)]
        xi = smp.vector_form(Dimensions(m, n), r, w)
        if not homotopy_residual(xi).is_zero():
            failures.append({"case": case, "dims": [m, n], "r": r, "s": w, "input": str(xi)})
    return failures


def bicomplex_residuals(xi: VectorForm) -> dict:
    """The bicomplex laws evaluated on ``xi`` (laws that need more weight
    room than ``xi`` has are skipped)."""
    out = {"d^2": vf_d(vf_d(xi))}
    if xi.s < xi.m:
        out["d dT - dT d"] = vf_d(d_T(xi)) - d_T(vf_d(xi))
        cartan = i_T(vf_d(xi))
        if xi.r >= 1:
            cartan = cartan + vf_d(i_T(xi))
        out["dT - (d iT + iT d)"] = d_T(xi) - cartan
    if xi.s < xi.m - 1:
        out["dT^2"] = d_T(d_T(xi))
    return out


def suite_bicomplex(seed: int, trials: int) -> list:
    smp = Sampler(seed)
    failures = []
    for case in range(trials):
        dims = _dims(case)
        r = case % 3
        s = smp.rng.randrange(dims.m)
        xi = smp.vector_form(dims, r, s)
        for law, res in bicomplex_residuals(xi).items():
            if not res.is_zero():
                failures.append({"case": case, "dims": [dims.m, dims.n], "law": law, "input": str(xi)})
    return failures


# ----------------------------------------------------------------------------
# groups and double velocities


def _group_failures(case: int, g, h, k, p: JetPoint, rng: np.random.Generator, m: int) -> list:
    out = []
    dims = Dimensions(m, p.n)
    ident = GroupElement2.identity(m)
    if compose2(compose2(g, h), k) != compose2(g, compose2(h, k)):
        out.append("associativity")
    if compose2(g, ident) != g or compose2(ident, g) != g:
        out.append("identity")
    if compose2(g, inverse2(g)) != ident or compose2(inverse2(g), g) != ident:
        out.append("inverse")
    # right action: p.(g h) = (p.g).h
    lhs = act2(compose2(g, h), p)
    rhs = act2(h, act2(g, p))
    if not (np.allclose(lhs.v, rhs.v, rtol=1e-9, atol=1e-9) and np.allclose(lhs.w, rhs.w, rtol=1e-9, atol=1e-9)):
        out.append("right-action")
    # generator against finite differences of s -> (I + s a, s b)
    a = rng.standard_normal((m, m))
    b = rng.standard_normal((m, m, m))
    b = (b + np.swapaxes(b, 1, 2)) / 2
    field = field_at(infinitesimal2(a, b, dims), p, dims, 2)
    eps = 1e-6
    plus = act2(GroupElement2(np.eye(m) + eps * a, eps * b), p)
    minus = act2(GroupElement2(np.eye(m) - eps * a, -eps * b), p)
    fd_v = (plus.v - minus.v) / (2 * eps)
    fd_w = (plus.w - minus.w) / (2 * eps)
    scale = max(1.0, float(np.abs(fd_v).max()), float(np.abs(fd_w).max()))
    if max(np.abs(fd_v - field.v).max(), np.abs(fd_w - field.w).max()) > 1e-6 * scale:
        out.append("infinitesimal")
    # freeness: the element moving p to p.g is g itself
    gf = GroupElement2(g.A.astype(float), g.B.astype(float))
    found = solve_element(p, act2(gf, p))
    if found is None or found.distance(gf) > 1e-7 * max(1.0, float(np.abs(gf.A).max())):
        out.append("freeness")
    return [{"case": case, "m": m, "law": law} for law in out]


def suite_group(seed: int, trials: int) -> list:
    """Group axioms (exact), right-action law, generators against finite
    differences and freeness at regular points."""
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    failures = []
    for case in range(trials):
        dims = _dims(case)
        m = dims.m
        g, h, k = (random_group_element2(m, rng) for _ in range(3))
        p = random_regular_point(dims, nrng, order=2)
        failures.extend(_group_failures(case, g, h, k, p, nrng, m))
    return failures


def random_double_point(m: int, n: int, rng: random.Random, lo: int = -3, hi: int = 3) -> DoubleJetPoint:
    def arr(*shape):
        return np.array([rng.randint(lo, hi) for _ in range(int(np.prod(shape)))], dtype=np.int64).reshape(shape)

    return DoubleJetPoint(arr(n), arr(m, n), arr(m, n), arr(m, m, n))


def random_holonomic_point(m: int, n: int, rng: random.Random) -> DoubleJetPoint:
    p = random_double_point(m, n, rng)
    w = p.vv + np.swapaxes(p.vv, 0, 1)
    return holonomic_embed(JetPoint(p.x, p.v, w))


def suite_exchange(seed: int, trials: int) -> list:
    """Involution, the first-block identity and fixed points = holonomic."""
    rng = random.Random(seed)
    failures = []
    for case in range(trials):
        dims = _dims(case)
        m, n = dims.m, dims.n
        for kind, p in (("generic", random_double_point(m, n, rng)), ("holonomic", random_holonomic_point(m, n, rng))):
            e = exchange(p)
            bad = []
            if exchange(e) != p:
                bad.append("involution")
            if not exchange_block_identity(p):
                bad.append("first-block")
            if (e == p) != is_holonomic(p):
                bad.append("fixed-point")
            if kind == "holonomic" and e != p:
                bad.append("holonomic-fixed")
            failures.extend({"case": case, "kind": kind, "law": law} for law in bad)
    return failures


# ----------------------------------------------------------------------------
# contact forms

CONTACT_DIMS = [(1, 2), (1, 3), (2, 3), (2, 4)]


def suite_contact(seed: int, trials: int) -> list:
    """Determinant forms annihilate every ``d_k``; the example 2-form pulls
    back to zero; the determinant forms span rank ``n - m``."""
    failures = []
    for m, n in CONTACT_DIMS:
        for idx in itertools.permutations(range(1, n + 1), m + 1):
            th = contact_det_form(idx, m, n)
            if any(res.terms for res in contact_pairing_residuals(th, m)):
                failures.append({"dims": [m, n], "law": "pairing", "indices": list(idx)})
    rep = is_contact_numeric(example_contact_2form(), 2, 3, trials=trials, seed=seed)
    if not rep.passed:
        failures.append({"law": "pullback", "residual": rep.residual})
    nrng = np.random.default_rng(seed)
    for m, n in CONTACT_DIMS:
        for case in range(trials):
            p = random_regular_point(Dimensions(m, n), nrng)
            rank = contact_rank(m, n, p)
            if rank != n - m:
                failures.append({"dims": [m, n], "case": case, "law": "rank", "rank": rank})
    return failures


# ----------------------------------------------------------------------------
# Euler towers

FIXED_LAGRANGIANS: list[Callable[[], Lagrangian]] = [
    lambda: L_length(2),
    lambda: L_length(3),
    lambda: L_area(3),
    lambda: L_minor(2),
    lambda: L_minor(3),
    lambda: L_minor(4, (2, 4)),
]


def random_homogeneous_lagrangian(smp: Sampler, dims: Dimensions, nterms: int = 2) -> Lagrangian:
    """``sum_k f_k(u) minor_k`` with polynomial ``f_k`` on E; every term
    scales by ``det A`` under reparametrisation."""
    m, n = dims.m, dims.n
    L = ZERO
    cols = list(itertools.combinations(range(1, n + 1), m))
    for _ in range(nterms):
        minor = L_minor(n, smp.rng.choice(cols)).L
        L = L + smp.base_poly(dims) * minor
    if not L.terms:
        L = L_minor(n, cols[0]).L
    return Lagrangian(L, dims, homogeneous=True)


def _tower_lagrangians(seed: int, trials: int) -> list[tuple[int, Lagrangian]]:
    smp = Sampler(seed)
    out = []
    for case in range(trials):
        if case < len(FIXED_LAGRANGIANS):
            out.append((case, FIXED_LAGRANGIANS[case]()))
        else:
            out.append((case, random_homogeneous_lagrangian(smp, _dims(case))))
    return out


def suite_tower_recurrence(seed: int, trials: int) -> list:
    """``E_r = ((-1)^(r+1)/(m-r)) i_T E_{r+1}`` along the fundamental tower."""
    failures = []
    for case, lag in _tower_lagrangians(seed, trials):
        tower = euler_tower(fundamental(lag))
        for r, res in enumerate(tower_recurrence_residuals(tower)):
            if not res.is_zero():
                failures.append({"case": case, "r": r, "L": lag.L.text})
    return failures


def suite_tower_homotopy(seed: int, trials: int) -> list:
    """``E_{r+1} = (-1)^(r+1) P2 d E_r`` along the fundamental tower."""
    failures = []
    for case, lag in _tower_lagrangians(seed, trials):
        tower = euler_tower(fundamental(lag))
        for r, res in enumerate(tower_homotopy_residuals(tower)):
            if not res.is_zero():
                failures.append({"case": case, "r": r, "L": lag.L.text})
    return failures


# ----------------------------------------------------------------------------
# first variation


def graph_curve(m: int, g: Expr) -> PolyCurve:
    """``t -> (t^1, .., t^m, g(t))``."""
    return PolyCurve([t_var(i) for i in range(1, m + 1)] + [g], m)


def _random_poly_t(rng: random.Random, m: int, degree: int = 2) -> Expr:
    e = ZERO
    for exps in itertools.product(range(degree + 1), repeat=m):
        if sum(exps) > degree or sum(exps) == 0:
            continue
        term = Expr.lift(Fraction(rng.randint(-3, 3), rng.randint(2, 5)))
        for i, k in enumerate(exps):
            term = term * t_var(i + 1) ** k
        e = e + term
    return e


def suite_firstvariation(seed: int, trials: int, grid: Grid | None = None, tol: float = 1e-8) -> list:
    """Boundary-vanishing fields on graph curves (``lhs = rhs``) alternate
    with polynomial fields on general curves (Stokes-corrected residual)."""
    rng = random.Random(seed)
    grid = grid or Grid(16, "gauss", 4)
    failures = []
    for case in range(trials):
        m = 1 + case % 2
        lag = L_length(2) if m == 1 else L_area(3)
        n = lag.n
        if case % 4 < 2:
            curve = graph_curve(m, _random_poly_t(rng, m))
            X = bump_field(n, m, [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(n)])
            rep = first_variation(lag, curve, X, grid, tol)
            ok = abs(rep.lhs - rep.rhs) < tol and abs(rep.boundary) < tol
        else:
            comps = [t_var(i) + _random_poly_t(rng, m) / 4 for i in range(1, m + 1)]
            comps += [_random_poly_t(rng, m) for _ in range(n - m)]
            curve = PolyCurve(comps, m)
            dims = Dimensions(m, n, 0)
            smp = Sampler(rng.randrange(2**31))
            X = VectorFieldOnE([smp.base_poly(dims) for _ in range(n)])
            rep = first_variation(lag, curve, X, grid, tol)
            ok = rep.passed
        if not ok:
            failures.append({"case": case, "report": rep.to_json()})
    return failures


# keys are the suite names accepted by `jetvar verify`; they are a stable interface
SUITES: dict[str, Callable[[int, int], list]] = {
    "lemma19": suite_vertical_total,
    "lemma21": suite_commutator,
    "theorem22": suite_homotopy,
    "bicomplex": suite_bicomplex,
    "group": suite_group,
    "exchange": suite_exchange,
    "contact": suite_contact,
    "lemma26": suite_tower_recurrence,
    "theorem33": suite_tower_homotopy,
    "firstvariation": suite_firstvariation,
}


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    trials = DEFAULT_TRIALS if trials is None else trials
    t0 = time.perf_counter()
    failures = SUITES[name](seed, trials)
    return SuiteResult(name, seed, trials, failures, time.perf_counter() - t0)
