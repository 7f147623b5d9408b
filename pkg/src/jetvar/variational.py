"""Lagrangians, the Euler form and its tower, and the Lepagean equivalents
(Hilbert, Caratheodory, fundamental)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .forms import ScalarForm, VectorForm, dcov, dt_contract, ext_d, vf_d, wedge, wedge_all
from .jetcalc import d_T, homotopy_P1, homotopy_P2, i_T, i_T_power, vertical_S, vf_S
from .jetgroup import homogeneity_symbolic, random_regular_point
from .report import Report
from .symexpr import ZERO, Dimensions, Expr, base, cancel, sqrt, vel

NUMERIC_SAMPLES = 50
NUMERIC_RTOL = 1e-9


# ----------------------------------------------------------------------------
# Lagrangians


@dataclass(frozen=True)
class Lagrangian:
    """``Lambda = L d^m t`` for a first-order function ``L``."""

    L: Expr
    dims: Dimensions
    homogeneous: bool | None = None

    def __post_init__(self):
        L = Expr.lift(self.L)
        object.__setattr__(self, "L", L)
        if L.order > 1:
            raise PreconditionError("the Lagrangian must be first-order")
        for c in L.coords():
            if c.a > self.dims.n or any(i > self.dims.m for i in c.idx):
                raise PreconditionError(f"coordinate {c} is outside the dimensions {self.dims}")
        if self.homogeneous is None:
            object.__setattr__(self, "homogeneous", homogeneity_symbolic(L, self.dims.m).passed)

    @property
    def m(self) -> int:
        return self.dims.m

    @property
    def n(self) -> int:
        return self.dims.n

    @property
    def form(self) -> VectorForm:
        return VectorForm.top(self.m, ScalarForm.function(self.L))


def L_length(n: int) -> Lagrangian:
    """Arc length of curves in R^n."""
    L = sqrt(sum((Expr.lift(vel(a, 1)) ** 2 for a in range(1, n + 1)), ZERO))
    return Lagrangian(L, Dimensions(1, n))


def L_area(n: int) -> Lagrangian:
    """Area of surfaces in R^n: ``sqrt(g11 g22 - g12^2)``."""

    def g(i, j):
        return sum((Expr.lift(vel(a, i)) * Expr.lift(vel(a, j)) for a in range(1, n + 1)), ZERO)

    return Lagrangian(sqrt(g(1, 1) * g(2, 2) - g(1, 2) ** 2), Dimensions(2, n))


def L_minor(n: int, cols: Sequence[int] = (1, 2)) -> Lagrangian:
    """The minor ``det(u_i^{cols[j]})`` of the velocity matrix; ``m = len(cols)``."""
    cols = tuple(cols)
    m = len(cols)
    if len(set(cols)) != m:
        raise PreconditionError("minor columns must be distinct")
    L = ZERO
    for perm in itertools.permutations(range(m)):
        sign = _perm_sign(perm)
        term = Expr.lift(sign)
        for i, k in enumerate(perm):
            term = term * Expr.lift(vel(cols[k], i + 1))
        L = L + term
    return Lagrangian(L, Dimensions(m, n))


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


# ----------------------------------------------------------------------------
# Hilbert equivalent and Euler form


def hilbert_theta1(lag: Lagrangian) -> VectorForm:
    """``Theta_1 = S d Lambda``."""
    return vf_S(vf_d(lag.form))


def euler_form(lag: Lagrangian, theta1: VectorForm | None = None) -> VectorForm:
    """``E_0 = d Lambda - d_T Theta_1`` (Hilbert ``Theta_1`` by default)."""
    if theta1 is None:
        theta1 = hilbert_theta1(lag)
    return vf_d(lag.form) - d_T(theta1)


@dataclass(frozen=True)
class EulerLagrange:
    """Euler-Lagrange expression for one base index, raw and factored as
    ``dL/du^a - sum_k d_k(dL/du_k^a)``."""

    a: int
    raw: Expr
    dL_du: Expr
    momenta: tuple

    @property
    def factored(self) -> str:
        parts = [f"({self.dL_du})"]
        parts += [f"d_{k}({p})" for k, p in enumerate(self.momenta, start=1) if p.terms]
        return " - ".join(parts)

    def to_json(self) -> dict:
        return {"a": self.a, "raw": self.raw.text, "factored": self.factored}


def euler_lagrange(lag: Lagrangian) -> list[EulerLagrange]:
    E0 = euler_form(lag)
    comp = E0[tuple(range(1, lag.m + 1))]
    out = []
    for a in range(1, lag.n + 1):
        momenta = tuple(lag.L.diff(vel(a, k)) for k in range(1, lag.m + 1))
        out.append(EulerLagrange(a, comp.coefficient(base(a)), lag.L.diff(base(a)), momenta))
    return out


def is_horizontal(xi: VectorForm | ScalarForm) -> bool:
    """Only base covectors ``du^a`` appear."""
    forms = xi.comps.values() if isinstance(xi, VectorForm) else [xi]
    return all(c.order == 0 for f in forms for c in f.covectors())


def S_all(xi: VectorForm) -> list[VectorForm]:
    """``S^j xi`` for every counting index j."""
    return [xi.map_components(lambda f, j=j: vertical_S(f, j)) for j in range(1, xi.m + 1)]


# ----------------------------------------------------------------------------
# zero testing with a numeric fallback


def _items(obj) -> dict:
    """Flatten an Expr / ScalarForm / VectorForm to ``key -> Expr``."""
    if isinstance(obj, VectorForm):
        return {(k, mono): c for k, f in obj.comps.items() for mono, c in f.terms.items()}
    if isinstance(obj, ScalarForm):
        return dict(obj.terms)
    return {(): Expr.lift(obj)}


def _difference(lhs, rhs):
    if isinstance(lhs, (VectorForm, ScalarForm)):
        return lhs - rhs
    return Expr.lift(lhs) - Expr.lift(rhs)


def _is_zero(obj) -> bool:
    if isinstance(obj, (VectorForm, ScalarForm)):
        return obj.is_zero()
    return Expr.lift(obj).is_zero()


def verify_equal(
    check: str,
    lhs,
    rhs,
    dims: Dimensions,
    samples: int = NUMERIC_SAMPLES,
    rtol: float = NUMERIC_RTOL,
    seed: int = 0,
) -> Report:
    """Symbolic equality, downgraded to a numeric comparison at random
    regular points when the normal form cannot decide it."""
    if _is_zero(_difference(lhs, rhs)):
        return Report(check, "pass", 0.0, 1)
    left, right = _items(lhs), _items(rhs)
    keys = sorted(set(left) | set(right), key=repr)
    order = max([e.order for e in left.values()] + [e.order for e in right.values()] + [1])
    if order > 2:
        return Report(check, "fail", math.inf, 1, [{"reason": "numeric fallback supports order <= 2"}])
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    attempts = 0
    while done < samples and attempts < 20 * samples:
        attempts += 1
        p = random_regular_point(dims, rng, order=2)
        try:
            pairs = [
                (float(left.get(k, ZERO).evaluate(p)), float(right.get(k, ZERO).evaluate(p))) for k in keys
            ]
        except (DomainError, ValueError, FloatingPointError):
            continue
        done += 1
        for lv, rv in pairs:
            err = abs(lv - rv) / max(1.0, abs(lv), abs(rv))
            worst = max(worst, err)
    if done < samples:
        return Report(check, "fail", math.inf, done, [{"reason": "could not sample enough admissible points"}])
    return Report(check, "numeric-pass" if worst <= rtol else "fail", worst, done)


def verify_zero(check: str, obj, dims: Dimensions, **kw) -> Report:
    zero = obj.scale(0) if isinstance(obj, (VectorForm, ScalarForm)) else ZERO
    return verify_equal(check, obj, zero, dims, **kw)


# ----------------------------------------------------------------------------
# Lepagean test


@dataclass
class LepageanReport:
    lepagean: bool
    horizontal: bool
    euler: VectorForm
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.checks)

    def to_json(self) -> dict:
        return {
            "lepagean": self.lepagean,
            "horizontal": self.horizontal,
            "checks": [r.to_json() for r in self.checks],
        }


def lepagean_check(candidate: VectorForm, lag: Lagrangian) -> LepageanReport:
    """Is ``S E~_0 = 0`` for ``E~_0 = d Lambda - d_T candidate``?  When it is,
    also confirm ``candidate - Theta_1 = d_T P_1 candidate`` and that the
    Euler form agrees with the Hilbert one."""
    m = lag.m
    if (candidate.m, candidate.r, candidate.s) != (m, 1, m - 1):
        raise PreconditionError(f"candidate must have bidegree (1, {m - 1}) with m = {m}")
    if candidate.order > 1:
        raise PreconditionError("candidate must be first-order")
    E_tilde = euler_form(lag, candidate)
    s_images = S_all(E_tilde)
    lepagean = all(x.is_zero() for x in s_images)
    rep = LepageanReport(lepagean, is_horizontal(candidate), E_tilde)
    status = "pass" if lepagean else "fail"
    rep.checks.append(Report("S-euler-zero", status, 0.0 if lepagean else 1.0, m))
    if lepagean:
        theta1 = hilbert_theta1(lag)
        if m >= 2:
            phi = homotopy_P1(candidate)
            rep.checks.append(verify_equal("difference-dT-exact", candidate - theta1, d_T(phi), lag.dims))
        else:
            rep.checks.append(verify_equal("difference-dT-exact", candidate, theta1, lag.dims))
        rep.checks.append(verify_equal("euler-unique", E_tilde, euler_form(lag), lag.dims))
    return rep


# ----------------------------------------------------------------------------
# equivalent chains


@dataclass(frozen=True)
class EquivalentChain:
    """``thetas[r]`` has bidegree ``(r, m-r)``; ``thetas[0] = Lambda``."""

    thetas: tuple
    provenance: str

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(self.thetas))
        if self.provenance not in ("hilbert", "caratheodory", "fundamental", "user"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.thetas:
            raise PreconditionError("empty chain")
        m = self.thetas[0].m
        for r, th in enumerate(self.thetas):
            if (th.m, th.r, th.s) != (m, r, m - r):
                raise PreconditionError(f"Theta_{r} has bidegree ({th.r}, {th.s}), expected ({r}, {m - r})")

    @property
    def m(self) -> int:
        return self.thetas[0].m

    @property
    def complete(self) -> bool:
        return len(self.thetas) == self.m + 1

    @property
    def top(self) -> VectorForm:
        return self.thetas[-1]

    def __getitem__(self, r: int) -> VectorForm:
        return self.thetas[r]


def descent_chain(top: VectorForm, provenance: str = "user") -> EquivalentChain:
    """Build ``Theta_r = ((-1)^r / (m-r)) i_T Theta_{r+1}`` down from an
    ``m``-form of weight 0."""
    m = top.m
    if (top.r, top.s) != (m, 0):
        raise PreconditionError("the top of a chain has bidegree (m, 0)")
    thetas = [top]
    for r in range(m - 1, -1, -1):
        thetas.append(i_T(thetas[-1]).scale(Fraction((-1) ** r, m - r)))
    return EquivalentChain(tuple(reversed(thetas)), provenance)


def descent_residuals(chain: EquivalentChain) -> list[VectorForm]:
    """``Theta_r - ((-1)^r/(m-r)) i_T Theta_{r+1}`` for ``r < m``."""
    m = chain.m
    return [
        chain[r] - i_T(chain[r + 1]).scale(Fraction((-1) ** r, m - r)) for r in range(len(chain.thetas) - 1)
    ]


def fundamental(lag: Lagrangian) -> EquivalentChain:
    """``Theta_{r+1} = ((-1)^r / (r+1)^2) S d Theta_r``, starting at ``Lambda``."""
    thetas = [lag.form]
    for r in range(lag.m):
        thetas.append(vf_S(vf_d(thetas[-1])).scale(Fraction((-1) ** r, (r + 1) ** 2)))
    return EquivalentChain(tuple(thetas), "fundamental")


def fundamental_closed_form(lag: Lagrangian, r: int) -> VectorForm:
    """``(1/(r!)^2) d^r L / du_{i1}^{a1}..du_{ir}^{ar} du^{a1}^..^du^{ar}
    (x) (d/dt^{ir} _| .. _| d/dt^{i1} _| d^m t)``."""
    m, n = lag.m, lag.n
    if not 0 <= r <= m:
        raise ValueError(f"r must lie in 0..{m}")
    out: dict = {}
    coef = Fraction(1, math.factorial(r) ** 2)
    pairs = [(i, a) for i in range(1, m + 1) for a in range(1, n + 1)]
    for chain in itertools.product(pairs, repeat=r):
        idx: tuple = tuple(range(1, m + 1))
        sign = 1
        for i, _ in chain:
            sg, idx = dt_contract(i, idx)
            sign *= sg
            if not sign:
                break
        if not sign:
            continue
        d = lag.L
        for i, a in chain:
            d = d.diff(vel(a, i))
            if not d.terms:
                break
        if not d.terms:
            continue
        form = wedge_all(dcov(base(a)) for _, a in chain)
        if not form.terms:
            continue
        term = form.scale(d.scale(coef * sign))
        out[idx] = out[idx] + term if idx in out else term
    return VectorForm(m, r, m - r, out)


def fundamental_top(lag: Lagrangian) -> ScalarForm:
    """``(1/m!) d^m L / du_1^{a1}..du_m^{am} du^{a1}^..^du^{am}``."""
    m, n = lag.m, lag.n
    out = ScalarForm(m)
    for cols in itertools.product(range(1, n + 1), repeat=m):
        d = lag.L
        for i, a in enumerate(cols, start=1):
            d = d.diff(vel(a, i))
        if not d.terms:
            continue
        out = out + wedge_all(dcov(base(a)) for a in cols).scale(d)
    return out.scale(Fraction(1, math.factorial(m)))


def theta_forms(lag: Lagrangian) -> list[ScalarForm]:
    """``theta^j = dL/du_j^a du^a``, the components of the Hilbert form."""
    return [
        sum((dcov(base(a)).scale(lag.L.diff(vel(a, j))) for a in range(1, lag.n + 1)), ScalarForm(1))
        for j in range(1, lag.m + 1)
    ]


def caratheodory(lag: Lagrangian) -> ScalarForm:
    """``L^(1-m) theta^1 ^ .. ^ theta^m``.  For ``m = 1`` this is the Hilbert
    form itself."""
    form = wedge_all(theta_forms(lag))
    if lag.m == 1:
        return form
    return form.scale(lag.L.reciprocal() ** (lag.m - 1)).map_coefficients(cancel)


def caratheodory_chain(lag: Lagrangian) -> EquivalentChain:
    return descent_chain(VectorForm.scalar(lag.m, caratheodory(lag)), "caratheodory")


def hilbert_chain(lag: Lagrangian) -> EquivalentChain:
    """``Lambda, Theta_1`` (complete only for ``m = 1``)."""
    return EquivalentChain((lag.form, hilbert_theta1(lag)), "hilbert")


def top_sign(m: int) -> int:
    """``(-1)^(m(m-1)/2)``."""
    return -1 if (m * (m - 1) // 2) % 2 else 1


def top_identity_rhs(lag: Lagrangian) -> VectorForm:
    """``(-1)^(m(m-1)/2) m! Lambda``."""
    return lag.form.scale(top_sign(lag.m) * math.factorial(lag.m))


# ----------------------------------------------------------------------------
# Euler tower


@dataclass(frozen=True)
class EulerTower:
    """``forms[r] = E_r`` of bidegree ``(r+1, m-r)``."""

    forms: tuple
    m: int

    def __getitem__(self, r: int) -> VectorForm:
        return self.forms[r]


def euler_tower(chain: EquivalentChain) -> EulerTower:
    """``E_r = d Theta_r - (-1)^r d_T Theta_{r+1}`` and ``E_m = d Theta_m``."""
    if not chain.complete:
        raise PreconditionError("the Euler tower needs Theta_0 .. Theta_m")
    m = chain.m
    forms = []
    for r in range(m):
        forms.append(vf_d(chain[r]) - d_T(chain[r + 1]).scale((-1) ** r))
    forms.append(vf_d(chain[m]))
    return EulerTower(tuple(forms), m)


def tower_recurrence_residuals(tower: EulerTower) -> list[VectorForm]:
    """``E_r - ((-1)^(r+1)/(m-r)) i_T E_{r+1}`` for ``r < m``."""
    m = tower.m
    return [tower[r] - i_T(tower[r + 1]).scale(Fraction((-1) ** (r + 1), m - r)) for r in range(m)]


def tower_homotopy_residuals(tower: EulerTower, complete: bool = True) -> list[VectorForm]:
    """``E_{r+1} - (-1)^(r+1) P_2 d E_r`` for ``r < m``."""
    m = tower.m
    return [
        tower[r + 1] - homotopy_P2(vf_d(tower[r]), complete).scale((-1) ** (r + 1)) for r in range(m)
    ]


# ----------------------------------------------------------------------------
# bundled identity checks


def variational_checks(lag: Lagrangian, seed: int = 0) -> list[Report]:
    """The identities every homogeneous Lagrangian should satisfy."""
    m, dims = lag.m, lag.dims
    out = []
    theta1 = hilbert_theta1(lag)
    E0 = euler_form(lag)
    out.append(verify_equal("iT-theta1", i_T(theta1), lag.form.scale(m), dims, seed=seed))
    s_ok = all(x.is_zero() for x in S_all(E0))
    out.append(Report("S-euler-zero", "pass" if s_ok else "fail", 0.0 if s_ok else 1.0, m))
    rhs = top_identity_rhs(lag)
    fund = fundamental(lag)
    out.append(verify_equal("iT^m-fundamental", i_T_power(fund.top, m), rhs, dims, seed=seed))
    out.append(
        verify_equal("fundamental-closed-form", fund.top, fundamental_closed_form(lag, m), dims, seed=seed)
    )
    car = VectorForm.scalar(m, caratheodory(lag))
    out.append(verify_equal("iT^m-caratheodory", i_T_power(car, m), rhs, dims, seed=seed))
    if m >= 2:
        out.append(
            verify_equal(
                "iT^(m-1)-caratheodory",
                i_T_power(car, m - 1),
                theta1.scale(top_sign(m) * math.factorial(m - 1)),
                dims,
                seed=seed,
            )
        )
    for chain in (fund, caratheodory_chain(lag)):
        tower = euler_tower(chain)
        tag = chain.provenance
        for r, res in enumerate(tower_recurrence_residuals(tower)):
            out.append(verify_zero(f"tower-recurrence-{tag}-r{r}", res, dims, seed=seed))
        for r, res in enumerate(tower_homotopy_residuals(tower)):
            out.append(verify_zero(f"tower-homotopy-{tag}-r{r}", res, dims, seed=seed))
        out.append(verify_equal(f"tower-E0-{tag}", tower[0], E0, dims, seed=seed))
    return out
