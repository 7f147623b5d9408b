"""Prolongations of maps and vector fields, double velocities and the
exchange map, and contact forms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateFormError, PreconditionError
from .forms import FieldAlong, ScalarForm, contract, curve_pullback_maps, dcov, lie_derivative, pullback_basis
from .jetcalc import total_d, total_field
from .report import Report
from .symexpr import ZERO, Coord, Dimensions, Expr, JetPoint, base


def _check_base_only(components: Sequence[Expr], what: str) -> list[Expr]:
    comps = [Expr.lift(c) for c in components]
    for c in comps:
        if c.order > 0:
            raise PreconditionError(f"{what} components must depend on base coordinates only")
    return comps


@dataclass(frozen=True)
class SmoothMap:
    """A map E1 -> E2 in charts: ``components[a-1]`` is ``f^a(u^1..u^n1)``."""

    components: tuple

    def __init__(self, components: Sequence):
        object.__setattr__(self, "components", tuple(_check_base_only(components, "SmoothMap")))

    @classmethod
    def identity(cls, n: int) -> "SmoothMap":
        return cls([Expr.lift(base(a)) for a in range(1, n + 1)])

    @property
    def target_dim(self) -> int:
        return len(self.components)

    def base_subs(self) -> dict:
        return {base(a): f for a, f in enumerate(self.components, start=1)}

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self o inner``."""
        sub = inner.base_subs()
        return SmoothMap([f.subs(sub) for f in self.components])


@dataclass(frozen=True)
class VectorFieldOnE:
    """``X = X^a d/du^a`` with base-only components."""

    components: tuple

    def __init__(self, components: Sequence):
        object.__setattr__(self, "components", tuple(_check_base_only(components, "vector field")))

    @property
    def n(self) -> int:
        return len(self.components)

    def as_field(self) -> FieldAlong:
        return FieldAlong({base(a): x for a, x in enumerate(self.components, start=1)})

    def apply(self, f) -> Expr:
        return self.as_field().apply(f)


def prolong_map1(f: SmoothMap, m: int) -> dict:
    """``u^a -> f^a``, ``u_i^a -> d_i f^a``."""
    out = {}
    for a, fa in enumerate(f.components, start=1):
        out[base(a)] = fa
        for i in range(1, m + 1):
            out[Coord(1, a, (i,))] = fa.total_d(i)
    return out


def prolong_map2(f: SmoothMap, m: int) -> dict:
    """Adds ``u_ij^a -> d_i d_j f^a``."""
    out = prolong_map1(f, m)
    for a, fa in enumerate(f.components, start=1):
        for i in range(1, m + 1):
            di = fa.total_d(i)
            for j in range(i, m + 1):
                out[Coord(2, a, (i, j))] = di.total_d(j)
    return out


def compose_substitutions(outer: Mapping[Coord, Expr], inner: Mapping[Coord, Expr]) -> dict:
    """The substitution map of ``outer o inner``."""
    return {c: e.subs(inner) for c, e in outer.items()}


def prolong_field1(X: VectorFieldOnE, m: int) -> FieldAlong:
    """``X^a d/du^a + (d_i X^a) d/du_i^a``."""
    vals = {}
    for a, xa in enumerate(X.components, start=1):
        vals[base(a)] = xa
        for i in range(1, m + 1):
            vals[Coord(1, a, (i,))] = xa.total_d(i)
    return FieldAlong(vals)


def prolong_field2(X: VectorFieldOnE, m: int) -> FieldAlong:
    """Adds the value ``d_i d_j X^a`` on ``u_ij^a``."""
    vals = dict(prolong_field1(X, m).values)
    for a, xa in enumerate(X.components, start=1):
        for i in range(1, m + 1):
            di = xa.total_d(i)
            for j in range(i, m + 1):
                vals[Coord(2, a, (i, j))] = di.total_d(j)
    return FieldAlong(vals)


def prolongation_commutator_residuals(X: VectorFieldOnE, f: Expr, m: int) -> list[Expr]:
    """``d_i(X f) - X^1(d_i f)`` for f on E, and
    ``d_i(X^1 g) - X^2(d_i g)`` for ``g = f`` lifted to first order via
    ``g = sum_k d_k f`` plus ``f`` itself."""
    f = Expr.lift(f)
    X0 = X.as_field()
    X1 = prolong_field1(X, m)
    X2 = prolong_field2(X, m)
    out = []
    for i in range(1, m + 1):
        out.append(X0.apply(f).total_d(i) - X1.apply(f.total_d(i)))
    g = f
    for k in range(1, m + 1):
        g = g + f.total_d(k) * f
    for i in range(1, m + 1):
        out.append(X1.apply(g).total_d(i) - X2.apply(g.total_d(i)))
    return out


def prolongation_commutator_form_residual(X: VectorFieldOnE, omega: ScalarForm, m: int, i: int) -> ScalarForm:
    """``d_i L_{X^1} omega - L_{X^2} d_i omega`` for a first-order form."""
    return total_d(lie_derivative(omega, prolong_field1(X, m)), i) - lie_derivative(total_d(omega, i), prolong_field2(X, m))


# ----------------------------------------------------------------------------
# double velocities


@dataclass(frozen=True, eq=False)
class DoubleJetPoint:
    """Point of ``T_m' T_m E``: ``x = u^a``, ``v[i] = u_i^a``,
    ``vp[j] = u_{;j}^a`` and ``vv[i, j] = u_{i;j}^a``."""

    x: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    vv: np.ndarray

    def __post_init__(self):
        for name in ("x", "v", "vp", "vv"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        m, n = self.v.shape
        mp = self.vp.shape[0]
        if self.vp.shape != (mp, n) or self.vv.shape != (m, mp, n) or self.x.shape != (n,):
            raise ValueError("inconsistent DoubleJetPoint shapes")

    @property
    def m(self) -> int:
        return self.v.shape[0]

    @property
    def mp(self) -> int:
        return self.vp.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, DoubleJetPoint)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.vp, other.vp)
            and np.array_equal(self.vv, other.vv)
        )


def exchange(p: DoubleJetPoint) -> DoubleJetPoint:
    """``u_i o e = u_{;i}``, ``u_{;j} o e = u_j``, ``u_{i;j} o e = u_{j;i}``."""
    return DoubleJetPoint(p.x, p.vp, p.v, np.swapaxes(p.vv, 0, 1))


def is_holonomic(p: DoubleJetPoint, atol: float = 0.0) -> bool:
    if p.m != p.mp:
        return False
    vv_t = np.swapaxes(p.vv, 0, 1)
    if atol == 0:
        return bool(np.array_equal(p.v, p.vp) and np.array_equal(p.vv, vv_t))
    return bool(np.allclose(p.v, p.vp, atol=atol, rtol=0) and np.allclose(p.vv, vv_t, atol=atol, rtol=0))


def holonomic_embed(q: JetPoint) -> DoubleJetPoint:
    if q.w is None:
        raise PreconditionError("holonomic_embed needs a second-order point")
    x = q.x if q.x is not None else np.zeros(q.n)
    return DoubleJetPoint(x, q.v, q.v.copy(), q.w)


def holonomic_extract(p: DoubleJetPoint) -> JetPoint:
    if not is_holonomic(p):
        raise PreconditionError("point is not holonomic")
    return JetPoint(p.x, p.v, p.vv)


def exchange_block_identity(p: DoubleJetPoint) -> bool:
    """The first-velocity block of ``e(p)`` is the ``u_{;}`` block of ``p``."""
    e = exchange(p)
    return bool(np.array_equal(e.v, p.vp) and np.array_equal(e.x, p.x))


# ----------------------------------------------------------------------------
# contact forms


def _det(rows: list[list[Expr]]) -> Expr:
    n = len(rows)
    if n == 0:
        return Expr.lift(1)
    if n == 1:
        return rows[0][0]
    out = ZERO
    for k in range(n):
        if not rows[0][k].terms:
            continue
        minor = [row[:k] + row[k + 1:] for row in rows[1:]]
        term = rows[0][k] * _det(minor)
        out = out + term if k % 2 == 0 else out - term
    return out


def contact_det_form(indices: Sequence[int], m: int, n: int | None = None) -> ScalarForm:
    """The determinant 1-form with rows ``(u_1^a), ..., (u_m^a), (du^a)`` over
    the base indices ``a`` in ``indices`` (expanded along the du-row)."""
    idx = list(indices)
    if len(idx) != m + 1:
        raise ValueError(f"need {m + 1} base indices, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise DegenerateFormError("repeated base index gives the zero form")
    if n is not None and any(a < 1 or a > n for a in idx):
        raise ValueError("base index out of range")
    rows = [[Expr.lift(Coord(1, a, (i,))) for a in idx] for i in range(1, m + 1)]
    out = ScalarForm(1)
    for k, a in enumerate(idx):
        minor = [row[:k] + row[k + 1:] for row in rows]
        sign = 1 if (m + k) % 2 == 0 else -1
        out = out + dcov(base(a)).scale(_det(minor).scale(sign))
    return out


def contact_pairing_residuals(theta: ScalarForm, m: int) -> list[Expr]:
    """``<theta, d_k>`` for every k."""
    return [contract(theta, total_field(k, theta.covectors())).terms.get((), ZERO) for k in range(1, m + 1)]


def example_contact_2form() -> ScalarForm:
    """``(u_1^1 du^2 - u_1^2 du^1) ^ du_2^3 - (u_2^1 du^2 - u_2^2 du^1) ^ du_1^3``
    (m = 2, n = 3): contact, yet not built from determinant forms and their
    derivatives."""
    from .forms import wedge

    def th(i):
        return dcov(base(2)).scale(Coord(1, 1, (i,))) - dcov(base(1)).scale(Coord(1, 2, (i,)))

    return wedge(th(1), dcov(Coord(1, 3, (2,)))) - wedge(th(2), dcov(Coord(1, 3, (1,))))


def contact_rank(m: int, n: int, p: JetPoint, families: Sequence[Sequence[int]] | None = None) -> int:
    """Numeric rank of the coefficient matrix of determinant forms at ``p``."""
    if families is None:
        families = list(itertools.combinations(range(1, n + 1), m + 1))
    rows = []
    for idx in families:
        th = contact_det_form(idx, m, n)
        rows.append([float(th.coefficient(base(a)).evaluate(p)) if th.coefficient(base(a)).terms else 0.0 for a in range(1, n + 1)])
    mat = np.array(rows)
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > 1e-10 * max(1.0, sv[0])))


def is_contact_numeric(
    omega: ScalarForm,
    m: int,
    n: int,
    trials: int = 20,
    seed: int = 0,
    samples: int = 5,
    tol: float = 1e-10,
) -> Report:
    """Pull ``omega`` back along random prolonged polynomial m-curves and
    evaluate at random parameters; reports the largest coefficient seen."""
    from .numeric import random_poly_curve

    rng = np.random.default_rng(seed)
    order = max(1, omega.order)
    worst = 0.0
    for _ in range(trials):
        curve = random_poly_curve(m, n, rng)
        subs, basis = curve_pullback_maps(list(curve.components), m, order)
        pulled = pullback_basis(omega, subs, basis)
        for _ in range(samples):
            t = rng.uniform(0, 1, m)
            if not curve.is_immersion_at(t):
                continue
            point = {base(i + 1): float(t[i]) for i in range(m)}
            for coef in pulled.terms.values():
                worst = max(worst, abs(float(coef.evaluate(point))))
    status = "pass" if worst < tol else "fail"
    return Report("contact", status, worst, trials)
