"""Jet operators: total derivatives, vertical endomorphisms, the horizontal
operators ``i_T`` and ``d_T``, the homotopy operators and the ``Delta``
generators of the infinitesimal reparametrisation action."""
from __future__ import annotations

from dataclasses import dataclass
import math
from fractions import Fraction
from typing import Callable, Iterable

from .errors import DegreeError, OrderOverflowError, UnsupportedOrderError, WeightOverflowError
from .forms import (
    FieldAlong,
    ScalarForm,
    VectorForm,
    contract,
    covector_derivation,
    dcov,
    dt_contract,
    dt_wedge,
    lie_derivative,
)
from .symexpr import MAX_ORDER, ZERO, Coord, Dimensions, Expr, extended_orders


@dataclass(frozen=True)
class OperatorContext:
    dims: Dimensions
    order: int = 1

    def check_raise(self):
        if self.order >= MAX_ORDER:
            raise OrderOverflowError(f"operand already at order {MAX_ORDER}")


def field_from_rule(rule: Callable[[Coord], Expr], coords: Iterable[Coord]) -> FieldAlong:
    return FieldAlong({c: rule(c) for c in coords})


def total_field(k: int, coords: Iterable[Coord]) -> FieldAlong:
    """The total derivative ``d_k`` as a field along the projection."""
    return field_from_rule(lambda c: Expr.lift(c.raised(k)), coords)


# ----------------------------------------------------------------------------
# total derivatives


def total_d(obj, k: int):
    """``d_k`` on expressions, scalar forms and (componentwise) vector forms."""
    if isinstance(obj, VectorForm):
        return obj.map_components(lambda f: total_d(f, k))
    if isinstance(obj, ScalarForm):
        coeffs = ScalarForm(obj.degree, {m: c.total_d(k) for m, c in obj.terms.items()})
        return coeffs + covector_derivation(obj, lambda c: dcov(c.raised(k)))
    return Expr.lift(obj).total_d(k)


# ----------------------------------------------------------------------------
# vertical endomorphisms


def _s_rule(j: int):
    def rule(c: Coord) -> ScalarForm:
        if c.order == 0:
            return ScalarForm(1)
        if c.order == 1:
            return dcov(Coord(0, c.a, ())) if c.idx[0] == j else ScalarForm(1)
        if c.order == 2:
            p, q = c.idx
            out = ScalarForm(1)
            if p == j:
                out = out + dcov(Coord(1, c.a, (q,)))
            if q == j:
                out = out + dcov(Coord(1, c.a, (p,)))
            return out
        raise UnsupportedOrderError(f"S^{j} is not defined on d{c}")

    return rule


def vertical_S(omega, j: int):
    """``S^j``: a degree-0 derivation on covectors, coefficients untouched."""
    if isinstance(omega, VectorForm):
        return omega.map_components(lambda f: vertical_S(f, j))
    return covector_derivation(omega, _s_rule(j))


def vf_S(xi: VectorForm) -> VectorForm:
    """``S(chi (x) w) = S^j chi (x) (d/dt^j _| w)``; lowers the weight by one."""
    if xi.s == 0:
        raise DegreeError("S needs weight >= 1")
    out: dict = {}
    for idx, chi in xi.comps.items():
        for j in idx:
            sign, rest = dt_contract(j, idx)
            term = vertical_S(chi, j)
            if sign < 0:
                term = -term
            out[rest] = out[rest] + term if rest in out else term
    return VectorForm(xi.m, xi.r, xi.s - 1, out)


# ----------------------------------------------------------------------------
# horizontal operators


def _check_weight(xi: VectorForm):
    if xi.s >= xi.m:
        raise WeightOverflowError(f"weight {xi.s} is already maximal (m = {xi.m})")


def i_T(xi: VectorForm) -> VectorForm:
    """``i_T(chi (x) w) = (d_i _| chi) (x) dt^i ^ w``."""
    if xi.r == 0:
        raise DegreeError("i_T needs form degree >= 1")
    _check_weight(xi)
    out: dict = {}
    for idx, chi in xi.comps.items():
        covs = chi.covectors()
        for i in range(1, xi.m + 1):
            sign, new = dt_wedge(i, idx)
            if not sign:
                continue
            term = contract(chi, total_field(i, covs))
            if sign < 0:
                term = -term
            out[new] = out[new] + term if new in out else term
    return VectorForm(xi.m, xi.r - 1, xi.s + 1, out)


def d_T(xi: VectorForm) -> VectorForm:
    """``d_T(chi (x) w) = d_i chi (x) dt^i ^ w``."""
    _check_weight(xi)
    out: dict = {}
    for idx, chi in xi.comps.items():
        for i in range(1, xi.m + 1):
            sign, new = dt_wedge(i, idx)
            if not sign:
                continue
            term = total_d(chi, i)
            if sign < 0:
                term = -term
            out[new] = out[new] + term if new in out else term
    return VectorForm(xi.m, xi.r, xi.s + 1, out)


def i_T_power(xi: VectorForm, k: int) -> VectorForm:
    for _ in range(k):
        xi = i_T(xi)
    return xi


# ----------------------------------------------------------------------------
# homotopy operators


def _components_order(xi: VectorForm) -> int:
    return max((max((c.order for c in f.covectors()), default=0) for f in xi.comps.values()), default=0)


def _falling_series(xi: VectorForm, r: int, a: int) -> VectorForm:
    """``sum_q (-1)^q / (r^(q+1) a(a+1)...(a+q)) d^(q) S^(q) xi``, where
    ``d^(q) S^(q) = sum d_l1..d_lq S^l1..S^lq``.

    This is ``(N + r a)^-1`` with ``N = d_l S^l``, expanded in falling
    factorials of ``N / r``; the sum stops once ``S^(q)`` annihilates ``xi``."""
    m = xi.m
    out = xi.scale(Fraction(1, r * a))
    layer = {(): xi}
    q = 0
    coef = Fraction(1, r * a)
    while layer:
        q += 1
        coef = -coef / (r * (a + q))
        nxt = {}
        for ls, form in layer.items():
            for l in range(ls[-1] if ls else 1, m + 1):
                img = form.map_components(lambda f: vertical_S(f, l))
                if not img.is_structurally_zero():
                    nxt[ls + (l,)] = img
        layer = nxt
        for ls, form in layer.items():
            weight = math.factorial(q)
            for l in set(ls):
                weight //= math.factorial(ls.count(l))
            term = form
            for l in ls:
                term = total_d(term, l)
            out = out + term.scale(coef * weight)
    return out


def homotopy_P1(xi: VectorForm, complete: bool = True) -> VectorForm:
    """Homotopy operator on weight ``s+1`` (first-order operands).

    The leading term is ``(1/(r(m-s))) S``.  When ``complete`` (the default)
    the correction terms in ``d^(q) S^(q) S`` are added; they vanish unless some
    term of ``xi`` carries two or more velocity covectors, and without them
    the homotopy identity fails for such forms."""
    if xi.r == 0:
        raise DegreeError("P1 needs form degree >= 1")
    if xi.s == 0:
        raise DegreeError("P1 needs weight >= 1")
    if xi.order > 1:
        raise UnsupportedOrderError("P1 acts on first-order vector forms")
    s = xi.s - 1
    if not complete:
        return vf_S(xi).scale(Fraction(1, xi.r * (xi.m - s)))
    with extended_orders(xi.r + 2):
        return _falling_series(vf_S(xi), xi.r, xi.m - s)


def homotopy_P2(eta: VectorForm, complete: bool = True) -> VectorForm:
    """Homotopy operator on weight ``s+2`` (operands of order <= 2).

    The first two terms are ``(1/(r(m-s-1))) S eta`` and
    ``-(1/(r^2 (m-s)(m-s-1))) d_l S^l S eta``; ``complete=False`` stops there.
    The complete operator continues the series and may carry coordinates
    above order 3 on forms with several velocity covectors."""
    if eta.r == 0:
        raise DegreeError("P2 needs form degree >= 1")
    if eta.s == 0:
        raise DegreeError("P2 needs weight >= 1")
    if _components_order(eta) > 2:
        raise UnsupportedOrderError("P2 acts on forms of order <= 2")
    r, m, s = eta.r, eta.m, eta.s - 2
    if not complete:
        return _truncated_P2(eta)
    with extended_orders(2 * r + 3):
        return _falling_series(vf_S(eta), r, m - s - 1)


def _truncated_P2(eta: VectorForm) -> VectorForm:
    r, m, s = eta.r, eta.m, eta.s - 2
    se = vf_S(eta)
    c1 = Fraction(1, r * (m - s - 1))
    c2 = Fraction(1, r * r * (m - s) * (m - s - 1))
    q = se.map_components(lambda f: _sum_dS(f, m))
    return se.scale(c1) - q.scale(c2)


def _sum_dS(chi: ScalarForm, m: int) -> ScalarForm:
    out = ScalarForm(chi.degree)
    for l in range(1, m + 1):
        sl = vertical_S(chi, l)
        if sl.terms:
            out = out + total_d(sl, l)
    return out


# ----------------------------------------------------------------------------
# Delta generators


def delta_rule(i: int, j: int) -> Callable[[Coord], Expr]:
    """Value of ``Delta_i^j`` on each coordinate function."""

    def rule(c: Coord) -> Expr:
        if c.order == 0:
            return ZERO
        if c.order == 1:
            return Expr.lift(Coord(1, c.a, (i,))) if c.idx[0] == j else ZERO
        if c.order == 2:
            p, q = c.idx
            out = ZERO
            if p == j:
                out = out + Expr.lift(Coord.make(c.a, i, q))
            if q == j:
                out = out + Expr.lift(Coord.make(c.a, i, p))
            return out
        raise UnsupportedOrderError("Delta generators act up to order 2")

    return rule


def delta_field(i: int, j: int, coords: Iterable[Coord]) -> FieldAlong:
    return field_from_rule(delta_rule(i, j), coords)


def lie_along_delta(obj, i: int, j: int):
    """Lie derivative along ``Delta_i^j``; the generator's order follows the
    operand (first or second order)."""
    if isinstance(obj, VectorForm):
        return obj.map_components(lambda f: lie_along_delta(f, i, j))
    if isinstance(obj, ScalarForm):
        return lie_derivative(obj, delta_field(i, j, obj.coords()))
    e = Expr.lift(obj)
    return delta_field(i, j, e.coords()).apply(e)


# ----------------------------------------------------------------------------
# identity residuals used by the suites


def vertical_total_residual(omega: ScalarForm, j: int, k: int) -> ScalarForm:
    """``S^j d_k omega - r delta_k^j omega`` for a form on E."""
    out = vertical_S(total_d(omega, k), j)
    if j == k:
        out = out - omega.scale(omega.degree)
    return out


def commutator_residual(omega: ScalarForm, j: int, k: int) -> ScalarForm:
    """``S^j d_k omega - d_k S^j omega - r delta_k^j omega`` for first-order omega."""
    out = vertical_S(total_d(omega, k), j) - total_d(vertical_S(omega, j), k)
    if j == k:
        out = out - omega.scale(omega.degree)
    return out


def homotopy_residual(xi: VectorForm, complete: bool = True) -> VectorForm:
    """``P2 d_T xi + d_T P1 xi - xi`` (the P1 term is absent at weight 0)."""
    with extended_orders(2 * xi.r + 3):
        out = homotopy_P2(d_T(xi), complete) - xi
        if xi.s > 0:
            out = out + d_T(homotopy_P1(xi, complete))
    return out
