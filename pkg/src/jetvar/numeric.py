"""Quadrature over the unit cube: actions, the first variation formula,
reparametrisation invariance, and a finite-difference oracle."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import OrientationError, PreconditionError, RegularityError
from .forms import contract
from .prolong import VectorFieldOnE, prolong_field1
from .report import Report
from .symexpr import Coord, Expr, JetPoint, base, vel
from .variational import Lagrangian, euler_form

DEFAULT_TOL = 1e-8


# ----------------------------------------------------------------------------
# polynomial m-curves


class PolyCurve:
    """``t -> (gamma^1(t), .., gamma^n(t))`` with polynomial components.
    The base coordinates ``u[1..m]`` of the component expressions stand for
    the parameters ``t^1..t^m``."""

    def __init__(self, components: Sequence, m: int):
        comps = tuple(Expr.lift(c) for c in components)
        for c in comps:
            for mono in c.terms:
                for at, x in mono:
                    if type(at) is not Coord or at.order != 0 or at.a > m or x < 0:
                        raise PreconditionError(f"curve component {c} is not a polynomial in t^1..t^{m}")
        self.components = comps
        self.m = m
        self._d1 = [[g.diff(base(i)) for g in comps] for i in range(1, m + 1)]
        self._d2: dict = {}

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max((sum(x for _, x in mono) for g in self.components for mono in g.terms), default=0)

    def _second(self, i: int, j: int) -> list[Expr]:
        key = (min(i, j), max(i, j))
        if key not in self._d2:
            self._d2[key] = [d.diff(base(key[1])) for d in self._d1[key[0] - 1]]
        return self._d2[key]

    @staticmethod
    def _eval(e: Expr, tmap: dict, shape):
        val = e.evaluate(tmap)
        return np.broadcast_to(np.asarray(val, dtype=float), shape)

    def jet(self, t, order: int = 1) -> JetPoint:
        """Prolongation at ``t`` (shape ``(m,)`` or ``(m, K)`` for a batch)."""
        t = np.asarray(t, dtype=float)
        if t.shape[0] != self.m:
            raise ValueError(f"need {self.m} parameters")
        shape = t.shape[1:]
        tmap = {base(i + 1): t[i] for i in range(self.m)}
        x = np.stack([self._eval(g, tmap, shape) for g in self.components])
        v = np.stack([np.stack([self._eval(d, tmap, shape) for d in row]) for row in self._d1])
        w = None
        if order >= 2:
            w = np.empty((self.m, self.m, self.n) + shape)
            for i in range(1, self.m + 1):
                for j in range(i, self.m + 1):
                    vals = np.stack([self._eval(d, tmap, shape) for d in self._second(i, j)])
                    w[i - 1, j - 1] = vals
                    w[j - 1, i - 1] = vals
        if order > 2:
            raise ValueError("curve jets are provided up to order 2")
        return JetPoint(x, v, w)

    def is_immersion_at(self, t) -> bool:
        v = self.jet(t).v
        v = np.moveaxis(v.reshape(self.m, self.n, -1), -1, 0)
        sv = np.linalg.svd(v, compute_uv=False)
        return bool(np.all(sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)))

    def compose(self, phi: "PolyCurve") -> "PolyCurve":
        """``self o phi`` for a map ``phi`` of parameter space."""
        if phi.n != self.m or phi.m != self.m:
            raise ValueError("reparametrisation must map R^m to R^m")
        sub = {base(i + 1): g for i, g in enumerate(phi.components)}
        return PolyCurve([g.subs(sub) for g in self.components], self.m)


def t_var(i: int) -> Expr:
    """The parameter ``t^i`` as a curve expression."""
    return Expr.lift(base(i))


def random_poly_curve(m: int, n: int, rng: np.random.Generator, degree: int = 2) -> PolyCurve:
    """Polynomial curve with small rational coefficients."""
    monos = [e for e in itertools.product(range(degree + 1), repeat=m) if sum(e) <= degree]
    comps = []
    for _ in range(n):
        g = Expr.lift(0)
        for e in monos:
            c = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
            term = Expr.lift(c)
            for i, k in enumerate(e):
                term = term * t_var(i + 1) ** k
            g = g + term
        comps.append(g)
    return PolyCurve(comps, m)


def smoothstep(m: int) -> PolyCurve:
    """``t^i -> (t^i)^2 (3 - 2 t^i)`` in every coordinate."""
    return PolyCurve([t_var(i) ** 2 * (3 - 2 * t_var(i)) for i in range(1, m + 1)], m)


# ----------------------------------------------------------------------------
# quadrature grids


@dataclass(frozen=True)
class Grid:
    """Tensor grid on ``[0, 1]^m`` with ``N`` cells per axis.  ``gauss`` uses
    ``g`` Gauss-Legendre points per cell; ``trapezoid`` uses ``N + 1`` nodes."""

    N: int
    rule: str = "gauss"
    g: int = 4

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.rule not in ("gauss", "trapezoid"):
            raise ValueError(f"unknown rule {self.rule!r}")

    def axis(self) -> tuple[np.ndarray, np.ndarray]:
        h = 1.0 / self.N
        if self.rule == "trapezoid":
            nodes = np.linspace(0.0, 1.0, self.N + 1)
            weights = np.full(self.N + 1, h)
            weights[0] = weights[-1] = h / 2
            return nodes, weights
        x, w = np.polynomial.legendre.leggauss(self.g)
        left = np.arange(self.N) * h
        nodes = (left[:, None] + (x[None, :] + 1) * h / 2).ravel()
        weights = np.tile(w * h / 2, self.N)
        return nodes, weights

    def nodes(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """``(points (m, K), weights (K,))``."""
        if m == 0:
            return np.zeros((0, 1)), np.ones(1)
        x, w = self.axis()
        pts = np.stack([a.ravel() for a in np.meshgrid(*([x] * m), indexing="ij")])
        wts = np.ones(1)
        for _ in range(m):
            wts = np.multiply.outer(wts, w).ravel()
        return pts, wts

    def face(self, m: int, j: int, side: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes on the face ``t^j = side`` of the cube."""
        pts, wts = self.nodes(m - 1)
        full = np.insert(pts, j - 1, side, axis=0)
        return full, wts

    def to_json(self) -> dict:
        out = {"N": self.N, "rule": self.rule}
        if self.rule == "gauss":
            out["g"] = self.g
        return out


def integrate(values: np.ndarray, weights: np.ndarray) -> float:
    # numpy reduces contiguous float arrays pairwise: deterministic order
    return float(np.sum(np.ascontiguousarray(values * weights)))


def _regular_nodes(curve: PolyCurve, pts: np.ndarray) -> JetPoint:
    jet = curve.jet(pts, order=1)
    v = np.moveaxis(jet.v, -1, 0)
    sv = np.linalg.svd(v, compute_uv=False)
    bad = np.nonzero(~(sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)))[0]
    if bad.size:
        raise RegularityError(f"curve is not an immersion at t = {pts[:, bad[0]].tolist()}")
    return jet


def _values(e: Expr, point: JetPoint, size: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(e.evaluate(point), dtype=float), (size,))


# ----------------------------------------------------------------------------
# action and first variation


def action(lag: Lagrangian, curve: PolyCurve, grid: Grid) -> float:
    """``int_C L(j1 gamma(t)) dt``."""
    if curve.m != lag.m:
        raise ValueError("curve and Lagrangian disagree on m")
    pts, wts = grid.nodes(curve.m)
    jet = _regular_nodes(curve, pts)
    return integrate(_values(lag.L, jet, wts.size), wts)


@dataclass
class VariationReport:
    lhs: float
    rhs: float
    boundary: float
    grid: Grid
    tolerance: float
    check: str = "first-variation"

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs - self.boundary)

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "boundary": self.boundary,
            "residual": self.residual,
            "grid": self.grid.to_json(),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def variation_integrands(lag: Lagrangian, X: VectorFieldOnE) -> tuple[Expr, Expr, list[Expr]]:
    """``(X^1 L, X^a E_a, [F^j])`` with ``F^j = X^a dL/du_j^a``."""
    m = lag.m
    lhs = prolong_field1(X, m).apply(lag.L)
    E0 = euler_form(lag)[tuple(range(1, m + 1))]
    rhs = contract(E0, X.as_field()).terms.get((), Expr.lift(0)) if E0.terms else Expr.lift(0)
    flux = []
    for j in range(1, m + 1):
        f = Expr.lift(0)
        for a, xa in enumerate(X.components, start=1):
            f = f + xa * lag.L.diff(vel(a, j))
        flux.append(f)
    return lhs, rhs, flux


def first_variation(
    lag: Lagrangian, curve: PolyCurve, X: VectorFieldOnE, grid: Grid, tol: float = DEFAULT_TOL
) -> VariationReport:
    """Compare ``int X^1(L)`` with ``int X^a E_a`` plus the boundary flux of
    ``i_X Theta_1``."""
    m = lag.m
    if curve.m != m or X.n != lag.n or curve.n != lag.n:
        raise ValueError("curve, field and Lagrangian dimensions disagree")
    lhs_e, rhs_e, flux = variation_integrands(lag, X)
    pts, wts = grid.nodes(m)
    _regular_nodes(curve, pts)
    jet2 = curve.jet(pts, order=2)
    lhs = integrate(_values(lhs_e, jet2, wts.size), wts)
    rhs = integrate(_values(rhs_e, jet2, wts.size), wts)
    boundary = 0.0
    for j in range(1, m + 1):
        for side, sign in ((1.0, 1.0), (0.0, -1.0)):
            fpts, fw = grid.face(m, j, side)
            jet = _regular_nodes(curve, fpts)
            boundary += sign * integrate(_values(flux[j - 1], jet, fw.size), fw)
    return VariationReport(lhs, rhs, boundary, grid, tol)


def bump_field(n: int, m: int, coeffs: Sequence) -> VectorFieldOnE:
    """``X^a = c^a prod_i sin(pi u^i)`` over the first m base coordinates;
    it vanishes on the boundary image of a graph-type curve."""
    import math

    from .symexpr import sin

    prod = Expr.lift(1)
    for i in range(1, m + 1):
        prod = prod * sin(Expr.lift(base(i)).scale(Fraction(math.pi)))
    return VectorFieldOnE([prod.scale(c) for c in coeffs[:n]])


def euler_max_along(lag: Lagrangian, curve: PolyCurve, samples: int = 100, seed: int = 0) -> float:
    """Largest ``|E_a|`` over random parameter samples."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 1, (curve.m, samples))
    jet = curve.jet(t, order=2)
    E0 = euler_form(lag)[tuple(range(1, lag.m + 1))]
    worst = 0.0
    for coef in E0.terms.values():
        worst = max(worst, float(np.max(np.abs(_values(coef, jet, samples)))))
    return worst


# ----------------------------------------------------------------------------
# reparametrisation


def reparam_invariance(
    lag: Lagrangian, curve: PolyCurve, phi: PolyCurve, grid: Grid, tol: float = DEFAULT_TOL
) -> Report:
    """Action of ``gamma o phi`` against that of ``gamma`` on the unit cube.
    ``phi`` must map the cube onto itself fixing its corners."""
    m = curve.m
    pts, _ = grid.nodes(m)
    jac = np.moveaxis(phi.jet(pts).v, -1, 0)
    dets = np.linalg.det(jac)
    if np.any(dets <= 0):
        k = int(np.argmin(dets))
        raise OrientationError(f"reparametrisation Jacobian {dets[k]:.3g} <= 0 at t = {pts[:, k].tolist()}")
    for corner in itertools.product((0, 1), repeat=m):
        image = phi.jet(np.array(corner, dtype=float)).x
        if not np.allclose(image, corner, atol=1e-14):
            raise PreconditionError("reparametrisation must fix the corners of the cube")
    a0 = action(lag, curve, grid)
    a1 = action(lag, curve.compose(phi), grid)
    res = abs(a1 - a0)
    return Report("reparametrisation", "pass" if res < tol else "fail", res, 1)


# ----------------------------------------------------------------------------
# finite differences


def finite_diff_oracle(e: Expr, c: Coord, p: JetPoint) -> float:
    """Central difference in the canonical coordinate ``c``."""
    e = Expr.lift(e)
    x = float(p.value(c))
    h = 1e-5 * max(1.0, abs(x))
    hi = float(e.evaluate(p.replace(c, x + h)))
    lo = float(e.evaluate(p.replace(c, x - h)))
    return (hi - lo) / (2 * h)
