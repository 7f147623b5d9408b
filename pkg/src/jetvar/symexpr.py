"""Exact symbolic expressions over jet coordinates.

An :class:`Expr` is kept in a single normal form: an expanded sum of
monomials with rational coefficients.  A monomial is a sorted tuple of
``(atom, exponent)`` pairs, where an atom is one of

* a :class:`Coord` (``u[a]``, ``u[a;i]``, ``u[a;i,j]``, ``u[a;i,j,k]``),
* a :class:`Fn` node ``sqrt|exp|log|sin|cos`` of a normal-form argument,
* an :class:`Inv` node ``1/g`` for a normal-form sum ``g`` of two or more terms.

Coordinate exponents may be negative (Laurent monomials).  ``sqrt`` atoms only
ever carry exponent 1: ``sqrt(g)**2`` is rewritten as ``g`` during
multiplication and ``1/sqrt(g)`` as ``sqrt(g) * (1/g)``.  Because ``Inv(g) * g``
is not cancelled inside the normal form, :meth:`Expr.is_zero` clears those
denominators before testing for structural zero.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    DomainError,
    IncompletePointError,
    OrderOverflowError,
    UnsupportedFunctionError,
)

MAX_ORDER = 3
FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")

_cap: ContextVar[int] = ContextVar("jet_order_cap", default=MAX_ORDER)


def order_cap() -> int:
    """The jet order currently allowed for new coordinates."""
    return _cap.get()


@contextmanager
def extended_orders(cap: int):
    """Temporarily allow coordinates up to order ``cap``.  Only the complete
    homotopy operators need this; everything public stays at order 3."""
    token = _cap.set(max(_cap.get(), cap))
    try:
        yield
    finally:
        _cap.reset(token)


class Coord(NamedTuple):
    """A canonical jet coordinate ``u^a_{idx}``; counting indices are sorted."""

    order: int
    a: int
    idx: tuple[int, ...]

    @classmethod
    def make(cls, a: int, *idx: int) -> "Coord":
        if len(idx) > _cap.get():
            raise OrderOverflowError(f"jet order {len(idx)} exceeds {_cap.get()}")
        return cls(len(idx), a, tuple(sorted(idx)))

    def raised(self, k: int) -> "Coord":
        """The coordinate ``d_k`` maps this one to."""
        if self.order >= _cap.get():
            raise OrderOverflowError(f"d_{k} of {self} exceeds order {_cap.get()}")
        return Coord(self.order + 1, self.a, tuple(sorted(self.idx + (k,))))

    def __str__(self) -> str:
        if not self.idx:
            return f"u[{self.a}]"
        return f"u[{self.a};{','.join(map(str, self.idx))}]"


def base(a: int) -> Coord:
    return Coord(0, a, ())


def vel(a: int, i: int) -> Coord:
    return Coord(1, a, (i,))


def acc(a: int, i: int, j: int) -> Coord:
    return Coord.make(a, i, j)


def jerk(a: int, i: int, j: int, k: int) -> Coord:
    return Coord.make(a, i, j, k)


def multiplicity(i: int, j: int) -> int:
    """``#(ij)``: 1 on the diagonal, 2 off it."""
    return 1 if i == j else 2


@dataclass(frozen=True)
class Dimensions:
    m: int
    n: int
    order: int = 2

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.n < self.m:
            raise ValueError(f"need n >= m, got m={self.m}, n={self.n}")
        if not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must lie in 0..{MAX_ORDER}")

    def coords(self, order: int | None = None) -> list[Coord]:
        """All canonical coordinates up to ``order`` (default: self.order)."""
        top = self.order if order is None else order
        out = [base(a) for a in range(1, self.n + 1)]
        for k in range(1, top + 1):
            for idx in _sorted_tuples(self.m, k):
                out.extend(Coord(k, a, idx) for a in range(1, self.n + 1))
        return out


def _sorted_tuples(m: int, k: int) -> list[tuple[int, ...]]:
    if k == 0:
        return [()]
    return [t + (i,) for t in _sorted_tuples(m, k - 1) for i in range(t[-1] if t else 1, m + 1)]


# ----------------------------------------------------------------------------
# atoms


class Fn:
    __slots__ = ("name", "arg", "key", "coords", "_hash", "_dcache")

    def __init__(self, name: str, arg: "Expr"):
        self.name = name
        self.arg = arg
        self.key = (1, name, arg.text)
        self.coords = arg.coords()
        self._hash = hash(("fn", name, arg))
        self._dcache: dict = {}

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return type(other) is Fn and other.name == self.name and other.arg == self.arg

    def __repr__(self):
        return f"{self.name}({self.arg.text})"


class Inv:
    __slots__ = ("arg", "key", "coords", "_hash", "_dcache")

    def __init__(self, arg: "Expr"):
        self.arg = arg
        self.key = (2, "", arg.text)
        self.coords = arg.coords()
        self._hash = hash(("inv", arg))
        self._dcache: dict = {}

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return type(other) is Inv and other.arg == self.arg

    def __repr__(self):
        return f"({self.arg.text})^-1"


_ATOMS: dict = {}


def _intern(atom):
    return _ATOMS.setdefault(atom, atom)


def _akey(atom):
    return (0, atom) if type(atom) is Coord else atom.key


def _item_key(item):
    at = item[0]
    return (0, at) if type(at) is Coord else at.key


def _is_sqrt(atom) -> bool:
    return type(atom) is Fn and atom.name == "sqrt"


def _sort_mono(d: dict) -> tuple:
    if len(d) == 1:
        return tuple(d.items())
    return tuple(sorted(d.items(), key=_item_key))


def _clean(acc: dict) -> dict:
    return {m: c for m, c in acc.items() if c}


def _add_into(acc: dict, mono: tuple, coef) -> None:
    acc[mono] = acc.get(mono, 0) + coef


def _mono_mul(m1: tuple, m2: tuple):
    """Product of two monomials: ``(monomial, extra)`` where ``extra`` is an
    :class:`Expr` factor produced by ``sqrt(g)**2 -> g`` (or ``None``)."""
    if not m1:
        return m2, None
    if not m2:
        return m1, None
    d = dict(m1)
    extra = None
    for at, e in m2:
        ne = d.get(at, 0) + e
        if ne == 0:
            d.pop(at, None)
        elif ne >= 2 and _is_sqrt(at):
            q, r = divmod(ne, 2)
            if r:
                d[at] = r
            else:
                del d[at]
            f = at.arg ** q
            extra = f if extra is None else extra * f
        else:
            d[at] = ne
    return _sort_mono(d), extra


def _mul_terms(t1: dict, t2: dict) -> dict:
    acc: dict = {}
    for m1, c1 in t1.items():
        for m2, c2 in t2.items():
            mono, extra = _mono_mul(m1, m2)
            if extra is None:
                _add_into(acc, mono, c1 * c2)
            else:
                for mm, cc in _mul_terms({mono: c1 * c2}, extra.terms).items():
                    _add_into(acc, mm, cc)
    return _clean(acc)


def _as_rational(x):
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, int):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise DomainError(f"non-finite constant {x}")
        return Fraction(float(x))
    if isinstance(x, np.integer):
        return int(x)
    raise TypeError(f"cannot make an expression from {type(x).__name__}")


def _coef_text(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ----------------------------------------------------------------------------
# expressions


class Expr:
    """Immutable expression in normal form.  Build with :func:`const`,
    :func:`var` and the arithmetic operators, or parse text with
    :func:`jetvar.parser.parse_expr`."""

    __slots__ = ("terms", "_hash", "_coords", "_text", "_dcache", "_tcache", "_order")

    def __init__(self, terms: dict):
        self.terms = terms
        self._hash = None
        self._coords = None
        self._text = None
        self._order = None
        self._dcache: dict = {}
        self._tcache: dict = {}

    # -- construction helpers -------------------------------------------------
    @staticmethod
    def lift(x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, Coord):
            return Expr({((x, 1),): 1})
        c = _as_rational(x)
        return Expr({(): c} if c else {})

    @staticmethod
    def atom(at) -> "Expr":
        return Expr({((at, 1),): 1})

    # -- basic queries --------------------------------------------------------
    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Expr):
            return self.terms == other.terms
        try:
            return self.terms == Expr.lift(other).terms
        except TypeError:
            return NotImplemented

    def __bool__(self):
        return bool(self.terms)

    def coords(self) -> frozenset:
        """Every coordinate the expression depends on, including inside atoms."""
        if self._coords is None:
            out = set()
            for mono in self.terms:
                for at, _ in mono:
                    if type(at) is Coord:
                        out.add(at)
                    else:
                        out |= at.coords
            self._coords = frozenset(out)
        return self._coords

    @property
    def order(self) -> int:
        if self._order is None:
            self._order = max((c.order for c in self.coords()), default=0)
        return self._order

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self):
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return Fraction(self.terms.get((), 0))

    def atoms(self) -> set:
        return {at for mono in self.terms for at, _ in mono}

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda it: tuple((_akey(a), e) for a, e in it[0]))

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = Expr.lift(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        acc = dict(self.terms)
        for m, c in other.terms.items():
            v = acc.get(m, 0) + c
            if v:
                acc[m] = v
            else:
                acc.pop(m, None)
        return Expr(acc)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Expr.lift(other))

    def __rsub__(self, other):
        return Expr.lift(other) + (-self)

    def scale(self, c) -> "Expr":
        c = _as_rational(c)
        if not c:
            return ZERO
        if c == 1:
            return self
        return Expr({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Expr):
            return self.scale(other)
        if not self.terms or not other.terms:
            return ZERO
        if len(other.terms) == 1 and () in other.terms:
            return self.scale(other.terms[()])
        if len(self.terms) == 1 and () in self.terms:
            return other.scale(self.terms[()])
        return Expr(_mul_terms(self.terms, other.terms))

    __rmul__ = __mul__

    def reciprocal(self) -> "Expr":
        if not self.terms:
            raise ZeroDivisionError("division by the zero expression")
        if len(self.terms) > 1:
            (lead_mono, lead_coef) = self.sorted_terms()[0]
            h = self.scale(Fraction(1) / lead_coef)
            return Expr({((_intern(Inv(h)), 1),): Fraction(1) / lead_coef})
        (mono, c), = self.terms.items()
        out = Expr({(): Fraction(1) / c})
        plain = {}
        for at, e in mono:
            if _is_sqrt(at):
                # 1/sqrt(g) = sqrt(g) / g
                out = out * Expr.atom(at) * at.arg.reciprocal()
            elif type(at) is Inv:
                out = out * at.arg ** e
            else:
                plain[at] = -e
        if plain:
            out = out * Expr({_sort_mono(plain): 1})
        return out

    def __truediv__(self, other):
        if not isinstance(other, Expr):
            c = _as_rational(other)
            if not c:
                raise ZeroDivisionError("division by zero")
            return self.scale(Fraction(1) / c)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return Expr.lift(other) * self.reciprocal()

    def __pow__(self, k):
        if isinstance(k, Expr):
            k = k.constant_value()
            if k.denominator != 1:
                raise ValueError("only integer powers are supported; use sqrt")
            k = k.numerator
        if not isinstance(k, (int, np.integer)):
            raise TypeError("exponent must be an integer")
        k = int(k)
        if k < 0:
            return self.reciprocal() ** (-k)
        result = ONE
        b = self
        while k:
            if k & 1:
                result = result * b
            k >>= 1
            if k:
                b = b * b
        return result

    # -- calculus -------------------------------------------------------------
    def diff(self, c: Coord) -> "Expr":
        """Partial derivative treating canonical coordinates as independent."""
        cached = self._dcache.get(c)
        if cached is not None:
            return cached
        if c not in self.coords():
            self._dcache[c] = ZERO
            return ZERO
        acc: dict = {}
        for mono, coef in self.terms.items():
            for p, (at, e) in enumerate(mono):
                if type(at) is Coord:
                    if at != c:
                        continue
                    rest = mono[:p] + mono[p + 1:] if e == 1 else mono[:p] + ((at, e - 1),) + mono[p + 1:]
                    _add_into(acc, rest, coef * e)
                    continue
                if c not in at.coords:
                    continue
                da = _atom_partial(at, c)
                rest = mono[:p] + mono[p + 1:] if e == 1 else mono[:p] + ((at, e - 1),) + mono[p + 1:]
                for mm, cc in _mul_terms({rest: coef * e}, da.terms).items():
                    _add_into(acc, mm, cc)
        out = Expr(_clean(acc))
        self._dcache[c] = out
        return out

    def total_d(self, k: int) -> "Expr":
        """Total derivative ``d_k``: raises the jet order by one."""
        if self.order >= _cap.get():
            raise OrderOverflowError(f"d_{k} of an order-{self.order} expression exceeds the cap")
        cached = self._tcache.get(k)
        if cached is not None:
            return cached
        out = ZERO
        for c in sorted(self.coords()):
            d = self.diff(c)
            if d.terms:
                out = out + Expr.lift(c.raised(k)) * d
        self._tcache[k] = out
        return out

    def subs(self, mapping: Mapping[Coord, "Expr"], strict: bool = False) -> "Expr":
        """Substitute expressions for coordinates.  With ``strict`` every
        coordinate must be mapped."""
        memo: dict = {}

        def atom_value(at):
            if at in memo:
                return memo[at]
            if type(at) is Coord:
                if at in mapping:
                    v = Expr.lift(mapping[at])
                elif strict:
                    from .errors import IncompleteMapError

                    raise IncompleteMapError(f"no substitution for {at}")
                else:
                    v = Expr.lift(at)
            elif type(at) is Fn:
                v = apply_function(at.name, at.arg.subs(mapping, strict))
            else:
                v = at.arg.subs(mapping, strict).reciprocal()
            memo[at] = v
            return v

        out = ZERO
        for mono, coef in self.terms.items():
            t = Expr({(): coef})
            for at, e in mono:
                t = t * (atom_value(at) ** e)
            out = out + t
        return out

    def is_zero(self) -> bool:
        """Exact zero test.  ``True`` is always sound; ``False`` may miss
        identities that hold only through sqrt algebra."""
        e = self
        for _ in range(16):
            if not e.terms:
                return True
            invs: dict = {}
            for mono in e.terms:
                for at, k in mono:
                    if type(at) is Inv:
                        invs[at] = max(invs.get(at, 0), k)
            if not invs:
                return False
            at = max(invs, key=lambda x: x.key)
            top = invs[at]
            acc = ZERO
            for mono, coef in e.terms.items():
                k = 0
                rest = []
                for b, x in mono:
                    if b is at or b == at:
                        k = x
                    else:
                        rest.append((b, x))
                acc = acc + Expr({tuple(rest): coef}) * at.arg ** (top - k)
            e = acc
        return not e.terms

    def equals(self, other) -> bool:
        return (self - Expr.lift(other)).is_zero()

    # -- numerics -------------------------------------------------------------
    def evaluate(self, point, exact: bool = False):
        """Evaluate at a :class:`JetPoint` (or a ``Coord -> value`` mapping).

        Values may be numpy arrays of a common shape for batched evaluation.
        With ``exact`` and rational point values, function-free expressions
        evaluate to a :class:`~fractions.Fraction`."""
        lookup = point.value if isinstance(point, JetPoint) else _mapping_lookup(point)
        memo: dict = {}

        def val(at):
            if at in memo:
                return memo[at]
            if type(at) is Coord:
                v = lookup(at)
                v = _exactify(v) if exact else _floatify(v)
            elif type(at) is Fn:
                v = _apply_numeric(at.name, at.arg.evaluate(point, exact))
            else:
                g = at.arg.evaluate(point, exact)
                if np.any(np.asarray(g) == 0):
                    raise DomainError(f"division by zero in 1/({at.arg.text})")
                v = 1 / g
            memo[at] = v
            return v

        total = Fraction(0) if exact else 0.0
        for mono, coef in self.terms.items():
            t = Fraction(coef) if exact else float(coef)
            for at, e in mono:
                x = val(at)
                if e == 1:
                    t = t * x
                elif e > 0:
                    t = t * x ** e
                else:
                    if np.any(np.asarray(x) == 0):
                        raise DomainError(f"division by zero: {at} ** {e}")
                    t = t * (1 / x) ** (-e)
            total = total + t
        return total

    # -- text -----------------------------------------------------------------
    @property
    def text(self) -> str:
        if self._text is None:
            self._text = _format(self)
        return self._text

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"Expr({self.text!r})"


ZERO = Expr({})
ONE = Expr({(): 1})


def const(x) -> Expr:
    return Expr.lift(x)


def var(c: Coord) -> Expr:
    return Expr.lift(c)


def u(a: int, *idx: int) -> Expr:
    """Shorthand: ``u(1)`` is ``u[1]``, ``u(2, 1)`` is ``u[2;1]``."""
    return Expr.lift(Coord.make(a, *idx))


def apply_function(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise UnsupportedFunctionError(f"unsupported function {name!r}")
    arg = Expr.lift(arg)
    if arg.is_constant():
        v = arg.constant_value()
        if name == "sqrt":
            if v < 0:
                raise DomainError(f"sqrt of negative constant {v}")
            rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
            if rn * rn == v.numerator and rd * rd == v.denominator:
                return Expr.lift(Fraction(rn, rd))
        elif name == "log":
            if v <= 0:
                raise DomainError(f"log of non-positive constant {v}")
            if v == 1:
                return ZERO
        elif v == 0:
            return ONE if name in ("exp", "cos") else ZERO
    return Expr.atom(_intern(Fn(name, arg)))


def sqrt(x) -> Expr:
    return apply_function("sqrt", x)


def exp(x) -> Expr:
    return apply_function("exp", x)


def log(x) -> Expr:
    return apply_function("log", x)


def sin(x) -> Expr:
    return apply_function("sin", x)


def cos(x) -> Expr:
    return apply_function("cos", x)


HALF = Fraction(1, 2)


def _atom_partial(at, c: Coord) -> Expr:
    cached = at._dcache.get(c)
    if cached is not None:
        return cached
    da = at.arg.diff(c)
    if type(at) is Inv:
        out = -(Expr.atom(at) ** 2) * da
    elif at.name == "sqrt":
        out = da.scale(HALF) * Expr.atom(at).reciprocal()
    elif at.name == "exp":
        out = da * Expr.atom(at)
    elif at.name == "log":
        out = da * at.arg.reciprocal()
    elif at.name == "sin":
        out = da * cos(at.arg)
    elif at.name == "cos":
        out = -(da * sin(at.arg))
    else:  # pragma: no cover - guarded at construction
        raise UnsupportedFunctionError(at.name)
    at._dcache[c] = out
    return out


def partial(e: Expr, c: Coord) -> Expr:
    return Expr.lift(e).diff(c)


def sym_partial(e: Expr, a: int, i: int, j: int) -> Expr:
    """``(1/#(ij)) d e / d u^a_{ij}``, the normalisation used with symmetric
    second-order coordinates."""
    return Expr.lift(e).diff(acc(a, i, j)).scale(Fraction(1, multiplicity(i, j)))


def total_derivative(e: Expr, k: int) -> Expr:
    return Expr.lift(e).total_d(k)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` from its atoms, re-normalising every atom argument, and
    cancel polynomial factors against reciprocal atoms."""
    return cancel(Expr.lift(e).subs({}))


def _poly_vectors(poly: dict, order: list) -> dict:
    pos = {c: k for k, c in enumerate(order)}
    out = {}
    for mono, coef in poly.items():
        vec = [0] * len(order)
        for c, x in mono:
            vec[pos[c]] = x
        out[tuple(vec)] = coef
    return out


def _grlex(vec: tuple) -> tuple:
    return (sum(vec), vec)


def _poly_divide(num: dict, den: dict) -> dict | None:
    """Exact quotient of two coordinate polynomials (monomial tuple ->
    coefficient), or ``None`` when ``den`` does not divide ``num``."""
    order = sorted({c for p in (num, den) for mono in p for c, _ in mono})
    P = _poly_vectors(num, order)
    G = _poly_vectors(den, order)
    glead = max(G, key=_grlex)
    gcoef = Fraction(G[glead])
    Q: dict = {}
    while P:
        lead = max(P, key=_grlex)
        shift = tuple(a - b for a, b in zip(lead, glead))
        if min(shift) < 0:
            return None
        c = P[lead] / gcoef
        Q[shift] = Q.get(shift, 0) + c
        for vec, gc in G.items():
            key = tuple(a + b for a, b in zip(vec, shift))
            val = P.get(key, 0) - c * gc
            if val:
                P[key] = val
            else:
                P.pop(key, None)
    return {tuple((order[k], x) for k, x in enumerate(vec) if x): c for vec, c in Q.items()}


def _is_polynomial(e: Expr) -> bool:
    return all(type(at) is Coord and x > 0 for mono in e.terms for at, x in mono)


def cancel(e: Expr) -> Expr:
    """Divide out reciprocal atoms ``1/h`` whose polynomial cofactor is an
    exact multiple of ``h``; the value is unchanged."""
    e = Expr.lift(e)
    groups: dict = {}
    for mono, coef in e.terms.items():
        poly = tuple((at, x) for at, x in mono if type(at) is Coord and x > 0)
        rest = tuple((at, x) for at, x in mono if not (type(at) is Coord and x > 0))
        g = groups.setdefault(rest, {})
        g[poly] = g.get(poly, 0) + coef
    changed = True
    while changed:
        changed = False
        for rest in list(groups):
            poly = groups[rest]
            for p, (at, x) in enumerate(rest):
                if type(at) is not Inv or not _is_polynomial(at.arg):
                    continue
                q = _poly_divide(poly, at.arg.terms)
                if q is None:
                    continue
                new_rest = rest[:p] + rest[p + 1:] if x == 1 else rest[:p] + ((at, x - 1),) + rest[p + 1:]
                del groups[rest]
                target = groups.setdefault(new_rest, {})
                for mono, c in q.items():
                    target[mono] = target.get(mono, 0) + c
                changed = True
                break
            if changed:
                break
    acc: dict = {}
    for rest, poly in groups.items():
        for mono, coef in poly.items():
            if coef:
                _add_into(acc, _sort_mono(dict(mono + rest)), coef)
    return Expr(_clean(acc))


def _format(e: Expr) -> str:
    if not e.terms:
        return "0"
    parts = []
    for mono, coef in e.sorted_terms():
        coef = Fraction(coef)
        neg = coef < 0
        mag = -coef if neg else coef
        factors = [_format_factor(at, x) for at, x in mono]
        if not factors:
            body = _coef_text(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _coef_text(mag) + "*" + "*".join(factors)
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


def _format_factor(at, x: int) -> str:
    if type(at) is Coord:
        s = str(at)
    elif type(at) is Fn:
        s = f"{at.name}({at.arg.text})"
    else:
        s = f"({at.arg.text})"
        x = -x
    return s if x == 1 else f"{s}^{x}"


# ----------------------------------------------------------------------------
# numeric points


def _floatify(v):
    if isinstance(v, np.ndarray):
        return v.astype(float, copy=False)
    return float(v)


def _exactify(v):
    if isinstance(v, np.ndarray):
        return v
    if isinstance(v, (int, Fraction, np.integer)):
        return Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
    return v


def _apply_numeric(name: str, x):
    arr = np.asarray(x)
    if name == "sqrt":
        if np.any(arr < 0):
            raise DomainError("sqrt of a negative value")
        if isinstance(x, Fraction):
            rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
            if rn * rn == x.numerator and rd * rd == x.denominator:
                return Fraction(rn, rd)
        return np.sqrt(x) if isinstance(x, np.ndarray) else math.sqrt(x)
    if name == "log":
        if np.any(arr <= 0):
            raise DomainError("log of a non-positive value")
        return np.log(x) if isinstance(x, np.ndarray) else math.log(x)
    fn = {"exp": (np.exp, math.exp), "sin": (np.sin, math.sin), "cos": (np.cos, math.cos)}[name]
    return fn[0](x) if isinstance(x, np.ndarray) else fn[1](x)


def _mapping_lookup(mapping):
    def look(c):
        try:
            return mapping[c]
        except KeyError:
            raise IncompletePointError(f"point has no value for {c}") from None

    return look


@dataclass(frozen=True)
class JetPoint:
    """Numeric point of T_mE, T^2_mE or T^3_mE.

    Arrays are indexed from 0: ``x[a-1]`` is ``u^a``, ``v[i-1, a-1]`` is
    ``u^a_i``, ``w[i-1, j-1, a-1]`` is ``u^a_{ij}`` (symmetric in i, j) and
    ``z`` likewise for third order.  Any trailing axes are batch axes.
    """

    x: np.ndarray | None = None
    v: np.ndarray | None = None
    w: np.ndarray | None = None
    z: np.ndarray | None = None

    def __post_init__(self):
        for name in ("x", "v", "w", "z"):
            val = getattr(self, name)
            if val is not None and not isinstance(val, np.ndarray):
                object.__setattr__(self, name, np.asarray(val))
        if self.w is not None and self.v is None:
            raise ValueError("second-order data needs first-order data")
        if self.z is not None and self.w is None:
            raise ValueError("third-order data needs second-order data")
        if self.w is not None and not np.array_equal(self.w, np.swapaxes(self.w, 0, 1)):
            raise ValueError("w must be symmetric in its two counting indices")

    @property
    def m(self) -> int:
        return self.v.shape[0]

    @property
    def n(self) -> int:
        if self.x is not None:
            return self.x.shape[0]
        return self.v.shape[1]

    @property
    def order(self) -> int:
        return 3 if self.z is not None else 2 if self.w is not None else 1 if self.v is not None else 0

    def value(self, c: Coord):
        arr = (self.x, self.v, self.w, self.z)[c.order] if c.order <= 3 else None
        if arr is None:
            raise IncompletePointError(f"point carries no order-{c.order} data for {c}")
        key = tuple(i - 1 for i in c.idx) + (c.a - 1,)
        try:
            if any(k < 0 for k in key):
                raise IndexError
            return arr[key]
        except IndexError:
            raise IncompletePointError(f"coordinate {c} is out of range for this point") from None

    def replace(self, c: Coord, value) -> "JetPoint":
        """Copy with one canonical coordinate changed (all symmetric slots)."""
        import itertools

        arrays = [None if a is None else a.astype(float).copy() for a in (self.x, self.v, self.w, self.z)]
        arr = arrays[c.order]
        if arr is None:
            raise IncompletePointError(f"point carries no order-{c.order} data")
        for perm in set(itertools.permutations(c.idx)):
            arr[tuple(i - 1 for i in perm) + (c.a - 1,)] = value
        return JetPoint(*arrays)


def is_regular(p: JetPoint, rtol: float = 1e-10) -> bool:
    """True iff the m x n velocity matrix has rank m."""
    if p.v is None:
        raise IncompletePointError("regularity needs first-order data")
    v = np.asarray(p.v, dtype=float)
    sv = np.linalg.svd(v, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return False
    return bool(np.all(sv > rtol * sv[0])) and sv.size == v.shape[0]


def coords_of(exprs: Iterable[Expr]) -> set:
    out: set = set()
    for e in exprs:
        out |= Expr.lift(e).coords()
    return out
