"""Scalar exterior forms and vector forms with values in the exterior algebra
of the parameter space.

A basis covector ``du_c`` is identified with its :class:`Coord` ``c``; the
total order on covectors is the tuple order of ``Coord`` (jet order, then base
index, then counting indices).  A :class:`ScalarForm` maps strictly increasing
covector tuples to coefficient expressions.

A :class:`VectorForm` of bidegree ``(r, s)`` maps strictly increasing tuples of
``s`` counting indices (a ``dt`` monomial) to r-form components.
"""
from __future__ import annotations

import json
from typing import Callable, Iterable, Mapping

from .errors import DegreeError, IncompleteMapError
from .symexpr import ZERO, Coord, Expr

Mono = tuple  # strictly increasing tuple of Coord


def _sort_sign(seq) -> tuple[int, tuple]:
    """Sign of the permutation sorting ``seq`` (0 on a repeat) and the sorted tuple."""
    lst = list(seq)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and lst[j - 1] == lst[j]:
            return 0, ()
    return sign, tuple(lst)


def covector_text(c: Coord) -> str:
    return "d" + str(c)


class ScalarForm:
    """An exterior r-form with expression coefficients.  Immutable."""

    __slots__ = ("degree", "terms")

    def __init__(self, degree: int, terms: Mapping[Mono, Expr] | None = None):
        self.degree = degree
        clean = {}
        for mono, coef in (terms or {}).items():
            if len(mono) != degree:
                raise DegreeError(f"term {mono} does not have degree {degree}")
            coef = Expr.lift(coef)
            if coef.terms:
                clean[mono] = coef
        self.terms = clean

    # -- constructors ----------------------------------------------------------
    @classmethod
    def function(cls, f) -> "ScalarForm":
        return cls(0, {(): Expr.lift(f)})

    @classmethod
    def basis(cls, *covs: Coord, coeff=1) -> "ScalarForm":
        sign, mono = _sort_sign(covs)
        if not sign:
            return cls(len(covs))
        return cls(len(covs), {mono: Expr.lift(coeff).scale(sign)})

    @classmethod
    def zero(cls, degree: int) -> "ScalarForm":
        return cls(degree)

    # -- queries ---------------------------------------------------------------
    def covectors(self) -> set:
        return {c for mono in self.terms for c in mono}

    @property
    def order(self) -> int:
        o = max((c.order for c in self.covectors()), default=0)
        return max([o] + [e.order for e in self.terms.values()])

    def coords(self) -> set:
        out = set(self.covectors())
        for e in self.terms.values():
            out |= e.coords()
        return out

    def coefficient(self, *covs: Coord) -> Expr:
        sign, mono = _sort_sign(covs)
        if not sign:
            return ZERO
        return self.terms.get(mono, ZERO).scale(sign)

    def is_structurally_zero(self) -> bool:
        return not self.terms

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.terms.values())

    def equals(self, other: "ScalarForm") -> bool:
        return (self - other).is_zero()

    def __eq__(self, other):
        if not isinstance(other, ScalarForm):
            return NotImplemented
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.degree, frozenset(self.terms.items())))

    # -- linear structure ------------------------------------------------------
    def _check(self, other: "ScalarForm"):
        if other.degree != self.degree:
            raise DegreeError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "ScalarForm") -> "ScalarForm":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return ScalarForm(self.degree, out)

    def __neg__(self):
        return ScalarForm(self.degree, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "ScalarForm":
        """Multiply every coefficient by the function (or number) ``f``."""
        f = Expr.lift(f)
        if not f.terms:
            return ScalarForm(self.degree)
        return ScalarForm(self.degree, {m: c * f for m, c in self.terms.items()})

    def __mul__(self, f):
        if isinstance(f, ScalarForm):
            return wedge(self, f)
        return self.scale(f)

    __rmul__ = scale

    def map_coefficients(self, fn: Callable[[Expr], Expr]) -> "ScalarForm":
        return ScalarForm(self.degree, {m: fn(c) for m, c in self.terms.items()})

    def __xor__(self, other):
        return wedge(self, other)

    # -- text / json -----------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            coef = self.terms[mono]
            basis = "^".join(covector_text(c) for c in mono)
            if not mono:
                parts.append(f"({coef})")
            elif coef == 1:
                parts.append(basis)
            else:
                parts.append(f"({coef})*{basis}")
        return " + ".join(parts)

    __repr__ = __str__

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "terms": [
                {"covectors": [covector_text(c) for c in mono], "coeff": self.terms[mono].text}
                for mono in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScalarForm":
        from .parser import parse_coord, parse_expr

        out = cls(data["degree"])
        for t in data["terms"]:
            covs = [parse_coord(c[1:] if c.startswith("d") else c) for c in t["covectors"]]
            out = out + cls.basis(*covs, coeff=parse_expr(t["coeff"]))
        return out


def dcov(c: Coord) -> ScalarForm:
    """The basis 1-form ``du_c``."""
    return ScalarForm(1, {(c,): Expr.lift(1)})


def wedge(alpha: ScalarForm, beta: ScalarForm) -> ScalarForm:
    out: dict = {}
    for m1, c1 in alpha.terms.items():
        for m2, c2 in beta.terms.items():
            if m2 and m1:
                sign, mono = _sort_sign(m1 + m2)
                if not sign:
                    continue
            else:
                sign, mono = 1, m1 + m2
            c = c1 * c2
            if sign < 0:
                c = -c
            out[mono] = out[mono] + c if mono in out else c
    return ScalarForm(alpha.degree + beta.degree, out)


def wedge_all(forms: Iterable[ScalarForm]) -> ScalarForm:
    out = ScalarForm.function(1)
    for f in forms:
        out = wedge(out, f)
    return out


def ext_d(omega: ScalarForm) -> ScalarForm:
    out: dict = {}
    for mono, coef in omega.terms.items():
        for c in sorted(coef.coords()):
            if c in mono:
                continue
            dc = coef.diff(c)
            if not dc.terms:
                continue
            sign, m2 = _sort_sign((c,) + mono)
            term = dc if sign > 0 else -dc
            out[m2] = out[m2] + term if m2 in out else term
    return ScalarForm(omega.degree + 1, out)


class FieldAlong:
    """A vector field along a projection, stored by its value ``V(u_c)`` on
    every canonical coordinate function (equivalently its pairing with
    ``du_c``).  Coordinates absent from the map pair to zero."""

    __slots__ = ("values",)

    def __init__(self, values: Mapping[Coord, Expr] | None = None):
        self.values = {c: Expr.lift(v) for c, v in (values or {}).items() if Expr.lift(v).terms}

    def __getitem__(self, c: Coord) -> Expr:
        return self.values.get(c, ZERO)

    def apply(self, f) -> Expr:
        """Directional derivative ``V(f)``."""
        f = Expr.lift(f)
        out = ZERO
        for c in f.coords():
            v = self.values.get(c)
            if v is not None:
                d = f.diff(c)
                if d.terms:
                    out = out + v * d
        return out

    def __add__(self, other: "FieldAlong") -> "FieldAlong":
        vals = dict(self.values)
        for c, v in other.values.items():
            vals[c] = vals[c] + v if c in vals else v
        return FieldAlong(vals)

    def scale(self, f) -> "FieldAlong":
        f = Expr.lift(f)
        return FieldAlong({c: v * f for c, v in self.values.items()})

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values.values())

    def __repr__(self):
        inner = ", ".join(f"{c}: {v}" for c, v in sorted(self.values.items()))
        return f"FieldAlong({{{inner}}})"


def contract(omega: ScalarForm, field: FieldAlong) -> ScalarForm:
    """Interior product ``V _| omega``."""
    if omega.degree == 0:
        raise DegreeError("cannot contract a 0-form")
    out: dict = {}
    for mono, coef in omega.terms.items():
        for p, c in enumerate(mono):
            v = field.values.get(c)
            if v is None:
                continue
            rest = mono[:p] + mono[p + 1:]
            term = coef * v
            if p % 2:
                term = -term
            out[rest] = out[rest] + term if rest in out else term
    return ScalarForm(omega.degree - 1, out)


def covector_derivation(omega: ScalarForm, rule: Callable[[Coord], ScalarForm]) -> ScalarForm:
    """Extend ``rule`` (covector -> 1-form) to a degree-0 derivation that leaves
    coefficients untouched."""
    out = ScalarForm(omega.degree)
    cache: dict = {}
    for mono, coef in omega.terms.items():
        for p, c in enumerate(mono):
            img = cache.get(c)
            if img is None:
                img = cache[c] = rule(c)
            if not img.terms:
                continue
            left = ScalarForm(p, {mono[:p]: coef})
            right = ScalarForm(len(mono) - p - 1, {mono[p + 1:]: Expr.lift(1)})
            out = out + wedge(wedge(left, img), right)
    return out


def lie_derivative(omega: ScalarForm, field: FieldAlong) -> ScalarForm:
    """Cartan action of a field along a projection: coefficients are
    differentiated by ``V`` and each ``du_c`` becomes ``d(V(u_c))``."""
    coeffs = ScalarForm(omega.degree, {m: field.apply(c) for m, c in omega.terms.items()})
    return coeffs + covector_derivation(omega, lambda c: ext_d(ScalarForm.function(field[c])))


def pullback_basis(
    omega: ScalarForm,
    subs: Mapping[Coord, Expr],
    basis: Mapping[Coord, ScalarForm],
) -> ScalarForm:
    """Substitute expressions for coordinates and 1-forms for covectors."""
    out = None
    for mono, coef in omega.terms.items():
        try:
            term = ScalarForm.function(coef.subs(subs, strict=True))
            for c in mono:
                term = wedge(term, basis[c])
        except KeyError as exc:
            raise IncompleteMapError(f"no pullback given for covector d{exc.args[0]}") from None
        out = term if out is None else out + term
    if out is None:
        # the zero form; degree of the image is unknown in general
        deg = omega.degree
        return ScalarForm(deg)
    return out


def curve_pullback_maps(gamma: list, m: int, order: int) -> tuple[dict, dict]:
    """``(subs, basis)`` for pulling forms back along the prolonged curve."""
    from .symexpr import Dimensions

    gamma = [Expr.lift(g) for g in gamma]
    subs: dict = {}
    dims = Dimensions(m, max(m, len(gamma)), order)
    for c in dims.coords(order):
        if c.a > len(gamma):
            continue
        e = gamma[c.a - 1]
        for i in c.idx:
            e = e.diff(Coord(0, i, ()))
        subs[c] = e
    basis = {c: ext_d(ScalarForm.function(e)) for c, e in subs.items()}
    return subs, basis


# ----------------------------------------------------------------------------
# vector forms

DT = tuple  # strictly increasing tuple of counting indices


def dt_wedge(i: int, idx: DT) -> tuple[int, DT]:
    """``dt^i ^ dt^idx`` as ``(sign, sorted tuple)``; sign 0 if ``i`` repeats."""
    if i in idx:
        return 0, ()
    pos = sum(1 for k in idx if k < i)
    return (-1) ** pos, tuple(sorted(idx + (i,)))


def dt_contract(j: int, idx: DT) -> tuple[int, DT]:
    """``d/dt^j _| dt^idx``."""
    if j not in idx:
        return 0, ()
    p = idx.index(j)
    return (-1) ** p, idx[:p] + idx[p + 1:]


class VectorForm:
    """Element of bidegree ``(r, s)``: components indexed by increasing
    ``s``-tuples of counting indices in ``1..m``."""

    __slots__ = ("m", "r", "s", "comps")

    def __init__(self, m: int, r: int, s: int, comps: Mapping[DT, ScalarForm] | None = None):
        if not 0 <= s <= m:
            raise DegreeError(f"weight {s} outside 0..{m}")
        self.m, self.r, self.s = m, r, s
        clean = {}
        for idx, form in (comps or {}).items():
            sign, key = _sort_sign(idx)
            if not sign:
                continue
            if len(key) != s or (key and (key[0] < 1 or key[-1] > m)):
                raise DegreeError(f"bad dt index {idx} for weight {s}, m={m}")
            if form.degree != r:
                raise DegreeError(f"component of degree {form.degree}, expected {r}")
            form = form if sign > 0 else -form
            if key in clean:
                form = clean[key] + form
            if form.terms:
                clean[key] = form
            else:
                clean.pop(key, None)
        self.comps = clean

    @classmethod
    def top(cls, m: int, form: ScalarForm) -> "VectorForm":
        """``form (x) d^m t``."""
        return cls(m, form.degree, m, {tuple(range(1, m + 1)): form})

    @classmethod
    def scalar(cls, m: int, form: ScalarForm) -> "VectorForm":
        return cls(m, form.degree, 0, {(): form})

    def __getitem__(self, idx) -> ScalarForm:
        idx = tuple(idx)
        sign, key = _sort_sign(idx)
        if not sign:
            return ScalarForm(self.r)
        f = self.comps.get(key, ScalarForm(self.r))
        return f if sign > 0 else -f

    def _check(self, other):
        if (self.m, self.r, self.s) != (other.m, other.r, other.s):
            raise DegreeError(
                f"bidegree mismatch: {(self.m, self.r, self.s)} vs {(other.m, other.r, other.s)}"
            )

    def __add__(self, other: "VectorForm") -> "VectorForm":
        self._check(other)
        out = dict(self.comps)
        for k, f in other.comps.items():
            out[k] = out[k] + f if k in out else f
        return VectorForm(self.m, self.r, self.s, out)

    def __neg__(self):
        return VectorForm(self.m, self.r, self.s, {k: -f for k, f in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "VectorForm":
        return VectorForm(self.m, self.r, self.s, {k: v.scale(f) for k, v in self.comps.items()})

    __mul__ = scale
    __rmul__ = scale

    def map_components(self, fn: Callable[[ScalarForm], ScalarForm], r: int | None = None) -> "VectorForm":
        return VectorForm(self.m, self.r if r is None else r, self.s, {k: fn(v) for k, v in self.comps.items()})

    @property
    def order(self) -> int:
        return max((f.order for f in self.comps.values()), default=0)

    def is_structurally_zero(self) -> bool:
        return not self.comps

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.comps.values())

    def equals(self, other: "VectorForm") -> bool:
        return (self - other).is_zero()

    def __eq__(self, other):
        if not isinstance(other, VectorForm):
            return NotImplemented
        return (self.m, self.r, self.s) == (other.m, other.r, other.s) and self.comps == other.comps

    def __hash__(self):
        return hash((self.m, self.r, self.s, frozenset(self.comps.items())))

    def __str__(self):
        if not self.comps:
            return "0"
        parts = []
        for k in sorted(self.comps):
            dt = "^".join(f"dt{i}" for i in k) or "1"
            parts.append(f"[{self.comps[k]}] (x) {dt}")
        return " + ".join(parts)

    __repr__ = __str__

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "s": self.s,
            "components": {",".join(map(str, k)): self.comps[k].to_json() for k in sorted(self.comps)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "VectorForm":
        comps = {}
        for key, val in data["components"].items():
            idx = tuple(int(x) for x in key.split(",") if x)
            comps[idx] = ScalarForm.from_json(val)
        return cls(data["m"], data["r"], data["s"], comps)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def dm1t(m: int, j: int, form: ScalarForm | None = None) -> VectorForm:
    """``form (x) (d/dt^j _| d^m t)``, written ``d^{m-1}t_j``."""
    form = ScalarForm.function(1) if form is None else form
    sign, idx = dt_contract(j, tuple(range(1, m + 1)))
    return VectorForm(m, form.degree, m - 1, {idx: form if sign > 0 else -form})


def vf_d(xi: VectorForm) -> VectorForm:
    return xi.map_components(ext_d, r=xi.r + 1)


def vf_wedge_form(alpha: ScalarForm, xi: VectorForm) -> VectorForm:
    """``alpha ^ xi`` acting on the form part."""
    return xi.map_components(lambda f: wedge(alpha, f), r=xi.r + alpha.degree)
