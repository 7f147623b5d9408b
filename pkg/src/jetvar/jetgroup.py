"""The jet groups L1_m and L2_m, their right actions on velocities and the
infinitesimal generators of those actions.

Conventions: ``A[i, j] = A_j^i`` (row = upper index) and
``B[i, j, k] = B_{jk}^i``.  Entries may be floats or Fractions (object
arrays); the group law is exact for Fractions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NotInvertibleError, OrientationError, PreconditionError
from .forms import FieldAlong, VectorForm, _sort_sign
from .jetcalc import lie_along_delta
from .report import Report
from .symexpr import ZERO, Coord, Dimensions, Expr, JetPoint, is_regular


def _is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def exact_det(a: np.ndarray):
    """Determinant by fraction-exact elimination (object arrays) or LAPACK."""
    if not _is_exact(a):
        return float(np.linalg.det(a.astype(float)))
    n = a.shape[0]
    mat = [[Fraction(x) for x in row] for row in a]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if mat[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            mat[c], mat[piv] = mat[piv], mat[c]
            det = -det
        det *= mat[c][c]
        for r in range(c + 1, n):
            f = mat[r][c] / mat[c][c]
            if f:
                for k in range(c, n):
                    mat[r][k] -= f * mat[c][k]
    return det


def exact_inv(a: np.ndarray) -> np.ndarray:
    if not _is_exact(a):
        return np.linalg.inv(a.astype(float))
    n = a.shape[0]
    mat = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if mat[r][c] != 0), None)
        if piv is None:
            raise NotInvertibleError("singular matrix")
        mat[c], mat[piv] = mat[piv], mat[c]
        p = mat[c][c]
        mat[c] = [x / p for x in mat[c]]
        for r in range(n):
            if r != c and mat[r][c]:
                f = mat[r][c]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[c])]
    return np.array([row[n:] for row in mat], dtype=object)


def _as_matrix(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object or any(isinstance(x, Fraction) for x in arr.flat):
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr.astype(object)
    return arr.astype(float)


@dataclass(frozen=True, eq=False)
class GroupElement1:
    A: np.ndarray
    oriented: bool = False

    def __post_init__(self):
        A = _as_matrix(self.A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        object.__setattr__(self, "A", A)
        d = exact_det(A)
        if d == 0:
            raise NotInvertibleError("det A = 0")
        if self.oriented and d < 0:
            raise OrientationError("oriented elements need det A > 0")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @classmethod
    def identity(cls, m: int, exact: bool = True) -> "GroupElement1":
        eye = np.array([[Fraction(int(i == j)) for j in range(m)] for i in range(m)], dtype=object)
        return cls(eye if exact else np.eye(m))

    def det(self):
        return exact_det(self.A)

    def __matmul__(self, other: "GroupElement1") -> "GroupElement1":
        return compose1(self, other)

    def __eq__(self, other):
        return isinstance(other, GroupElement1) and np.array_equal(self.A, other.A)


@dataclass(frozen=True, eq=False)
class GroupElement2:
    A: np.ndarray
    B: np.ndarray
    oriented: bool = False

    def __post_init__(self):
        A = _as_matrix(self.A)
        m = A.shape[0]
        B = np.asarray(self.B)
        if B.size == 0 or (B.ndim == 0 and B == 0):
            B = np.zeros((m, m, m), dtype=A.dtype) if A.dtype != object else np.full((m, m, m), Fraction(0), dtype=object)
        if A.dtype == object:
            B = np.vectorize(Fraction, otypes=[object])(B)
        else:
            B = B.astype(float)
        if B.shape != (m, m, m):
            raise ValueError(f"B must have shape {(m, m, m)}")
        if not np.array_equal(B, np.swapaxes(B, 1, 2)):
            raise ValueError("B must be symmetric in its lower indices")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        d = exact_det(A)
        if d == 0:
            raise NotInvertibleError("det A = 0")
        if self.oriented and d < 0:
            raise OrientationError("oriented elements need det A > 0")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @classmethod
    def identity(cls, m: int, exact: bool = True) -> "GroupElement2":
        g1 = GroupElement1.identity(m, exact)
        return cls(g1.A, np.zeros((m, m, m)))

    def det(self):
        return exact_det(self.A)

    def __matmul__(self, other: "GroupElement2") -> "GroupElement2":
        return compose2(self, other)

    def __eq__(self, other):
        return isinstance(other, GroupElement2) and np.array_equal(self.A, other.A) and np.array_equal(self.B, other.B)

    def distance(self, other: "GroupElement2") -> float:
        da = np.abs((self.A - other.A).astype(float)).max()
        db = np.abs((self.B - other.B).astype(float)).max()
        return float(max(da, db))


def _common(x: np.ndarray, y: np.ndarray):
    if x.dtype == object or y.dtype == object:
        if x.dtype != object:
            x = np.vectorize(Fraction, otypes=[object])(x)
        if y.dtype != object:
            y = np.vectorize(Fraction, otypes=[object])(y)
    return x, y


def compose1(g: GroupElement1, h: GroupElement1) -> GroupElement1:
    a, b = _common(g.A, h.A)
    return GroupElement1(a.dot(b))


def inverse1(g: GroupElement1) -> GroupElement1:
    return GroupElement1(exact_inv(g.A))


def compose2(g: GroupElement2, h: GroupElement2) -> GroupElement2:
    """Product of 2-jets of origin-fixing maps, ``g`` applied after ``h``."""
    A, Ah = _common(g.A, h.A)
    B, Bh = _common(g.B, h.B)
    A, Bh = _common(A, Bh)
    B, Ah = _common(B, Ah)
    C = np.einsum("il,ljk->ijk", A, Bh) + np.einsum("ihl,hj,lk->ijk", B, Ah, Ah)
    return GroupElement2(A.dot(Ah), C)


def inverse2(g: GroupElement2) -> GroupElement2:
    try:
        Ai = exact_inv(g.A)
    except np.linalg.LinAlgError:
        raise NotInvertibleError("singular A") from None
    B = g.B
    if Ai.dtype == object and B.dtype != object:
        B = np.vectorize(Fraction, otypes=[object])(B)
    Bi = -np.einsum("il,lpq,pj,qk->ijk", Ai, B, Ai, Ai)
    return GroupElement2(Ai, Bi)


# ----------------------------------------------------------------------------
# actions


def _numeric_like(a: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Exact group data acting on float points is converted to float."""
    if a.dtype == object and np.asarray(data).dtype != object:
        return a.astype(float)
    return a


def act1(g: GroupElement1 | GroupElement2, p: JetPoint) -> JetPoint:
    """``u_i^a -> u_h^a A_i^h``; a right action."""
    if p.v is None:
        raise PreconditionError("act1 needs first-order data")
    A = _numeric_like(g.A, p.v)
    v = np.einsum("hi,ha...->ia...", A, p.v)
    return JetPoint(p.x, v)


def act2(g: GroupElement2, p: JetPoint) -> JetPoint:
    """Adds ``u_ij^a -> u_hk^a A_i^h A_j^k + u_h^a B_ij^h``."""
    if p.w is None:
        raise PreconditionError("act2 needs second-order data")
    A, B = _numeric_like(g.A, p.v), _numeric_like(g.B, p.v)
    v = np.einsum("hi,ha...->ia...", A, p.v)
    w = np.einsum("hka...,hi,kj->ija...", p.w, A, A)
    w = w + np.einsum("ha...,hij->ija...", p.v, B)
    w = (w + np.swapaxes(w, 0, 1)) / 2
    return JetPoint(p.x, v, w)


def solve_element(p: JetPoint, q: JetPoint, atol: float = 1e-9) -> GroupElement2 | None:
    """The element ``g`` with ``act2(g, p) = q``, or ``None`` if there is none.
    At a regular ``p`` the solution is unique (the action is free)."""
    if not is_regular(p):
        raise PreconditionError("solve_element needs a regular point")
    V = np.asarray(p.v, dtype=float)
    A = np.linalg.lstsq(V.T, np.asarray(q.v, dtype=float).T, rcond=None)[0]
    rest = np.asarray(q.w, dtype=float) - np.einsum("hka,hi,kj->ija", np.asarray(p.w, dtype=float), A, A)
    m = V.shape[0]
    B = np.empty((m, m, m))
    for i in range(m):
        for j in range(m):
            B[:, i, j] = np.linalg.lstsq(V.T, rest[i, j], rcond=None)[0]
    B = (B + np.swapaxes(B, 1, 2)) / 2
    if abs(np.linalg.det(A)) < atol:
        return None
    g = GroupElement2(A, B)
    image = act2(g, p)
    if not (np.allclose(image.v, q.v, atol=atol) and np.allclose(image.w, q.w, atol=atol)):
        return None
    return g


# ----------------------------------------------------------------------------
# infinitesimal actions


def infinitesimal1(a, dims: Dimensions) -> FieldAlong:
    """Generator of ``s -> I + s a``: ``a_j^i u_i^a d/du_j^a``."""
    a = np.asarray(a)
    vals = {}
    for c in dims.coords(1):
        if c.order == 1:
            (j,) = c.idx
            e = ZERO
            for i in range(1, dims.m + 1):
                if a[i - 1, j - 1]:
                    e = e + Expr.lift(Coord(1, c.a, (i,))).scale(a[i - 1, j - 1])
            vals[c] = e
    return FieldAlong(vals)


def infinitesimal2(a, b, dims: Dimensions) -> FieldAlong:
    """Generator of ``s -> (I + s a, s b)``; on ``u_jk`` its value is
    ``a_j^i u_ik + a_k^i u_ij + b_jk^i u_i``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if not np.array_equal(b, np.swapaxes(b, 1, 2)):
        raise ValueError("b must be symmetric in its lower indices")
    field = infinitesimal1(a, dims)
    vals = dict(field.values)
    m = dims.m
    for c in dims.coords(2):
        if c.order != 2:
            continue
        j, k = c.idx
        e = ZERO
        for i in range(1, m + 1):
            if a[i - 1, j - 1]:
                e = e + Expr.lift(Coord.make(c.a, i, k)).scale(a[i - 1, j - 1])
            if a[i - 1, k - 1]:
                e = e + Expr.lift(Coord.make(c.a, i, j)).scale(a[i - 1, k - 1])
            if b[i - 1, j - 1, k - 1]:
                e = e + Expr.lift(Coord(1, c.a, (i,))).scale(b[i - 1, j - 1, k - 1])
        vals[c] = e
    return FieldAlong(vals)


def field_at(field: FieldAlong, p: JetPoint, dims: Dimensions, order: int) -> JetPoint:
    """Numeric components of a field at ``p``, laid out like a JetPoint
    (base components in ``x``)."""
    n, m = dims.n, dims.m
    x = np.zeros(n)
    v = np.zeros((m, n))
    w = np.zeros((m, m, n)) if order >= 2 else None
    for c, e in field.values.items():
        val = float(e.evaluate(p))
        if c.order == 0:
            x[c.a - 1] = val
        elif c.order == 1:
            v[c.idx[0] - 1, c.a - 1] = val
        elif c.order == 2 and w is not None:
            i, j = c.idx
            w[i - 1, j - 1, c.a - 1] = w[j - 1, i - 1, c.a - 1] = val
    return JetPoint(x, v, w)


# ----------------------------------------------------------------------------
# reports and checks


def lie_dt(i: int, j: int, idx: tuple) -> list[tuple[int, tuple]]:
    """``L_{t^j d/dt^i}`` of ``dt^idx``: each ``dt^i`` is replaced by ``dt^j``.
    Returns ``(sign, sorted index tuple)`` pairs."""
    out = []
    for p, k in enumerate(idx):
        if k != i:
            continue
        new = idx[:p] + (j,) + idx[p + 1:]
        sign, key = _sort_sign(new)
        if sign:
            out.append((sign, key))
    return out


def equivariance_residual(xi: VectorForm, i: int, j: int) -> VectorForm:
    """``Delta_i^j(xi) - xi (x) L_{t^j d/dt^i}(dt-part)``."""
    lhs = lie_along_delta(xi, i, j)
    rhs: dict = {}
    for idx, chi in xi.comps.items():
        for sign, key in lie_dt(i, j, idx):
            term = chi if sign > 0 else -chi
            rhs[key] = rhs[key] + term if key in rhs else term
    return lhs - VectorForm(xi.m, xi.r, xi.s, rhs)


def check_equivariant(xi: VectorForm) -> Report:
    """Symbolic infinitesimal equivariance for every pair ``(i, j)``."""
    if xi.order > 1:
        raise PreconditionError("equivariance is checked on first-order vector forms")
    failures = []
    for i in range(1, xi.m + 1):
        for j in range(1, xi.m + 1):
            res = equivariance_residual(xi, i, j)
            if not res.is_zero():
                failures.append({"i": i, "j": j, "residual": str(res)})
    return Report("equivariance", "fail" if failures else "pass", float(len(failures)), xi.m * xi.m, failures)


def random_oriented_matrix(m: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    while True:
        a = np.eye(m) + spread * rng.standard_normal((m, m))
        d = np.linalg.det(a)
        if abs(d) > 1e-2:
            if d < 0:
                a[0] = -a[0]
            return a


def random_regular_point(dims: Dimensions, rng: np.random.Generator, order: int = 1) -> JetPoint:
    while True:
        x = rng.standard_normal(dims.n)
        v = rng.standard_normal((dims.m, dims.n))
        w = None
        if order >= 2:
            w = rng.standard_normal((dims.m, dims.m, dims.n))
            w = (w + np.swapaxes(w, 0, 1)) / 2
        p = JetPoint(x, v, w)
        if is_regular(p) and np.linalg.svd(v, compute_uv=False).min() > 0.1:
            return p


def check_homogeneous_finite(
    L: Expr,
    dims: Dimensions,
    trials: int = 100,
    seed: int = 0,
    rtol: float = 1e-9,
    matrices: Sequence[np.ndarray] | None = None,
) -> Report:
    """Compare ``L(acted point)`` with ``det(A) L(point)`` at random regular
    points and random orientation-preserving ``A``."""
    L = Expr.lift(L)
    if L.order > 1:
        raise PreconditionError("L must be first-order")
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for t in range(trials):
        p = random_regular_point(dims, rng)
        A = matrices[t % len(matrices)] if matrices else random_oriented_matrix(dims.m, rng)
        g = GroupElement1(np.asarray(A, dtype=float))
        lhs = float(L.evaluate(act1(g, p)))
        rhs = float(g.det()) * float(L.evaluate(p))
        err = abs(lhs - rhs) / max(1.0, abs(rhs))
        worst = max(worst, err)
        if err > rtol:
            failures.append({"trial": t, "lhs": lhs, "rhs": rhs})
    status = "fail" if failures else "pass"
    return Report("homogeneous-finite", status, worst, trials, failures[:10])


def homogeneity_symbolic(L: Expr, m: int) -> Report:
    """``Delta_i^j L = delta_i^j L`` for all ``i, j``."""
    L = Expr.lift(L)
    failures = []
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            res = lie_along_delta(L, i, j) - (L if i == j else ZERO)
            if not res.is_zero():
                failures.append({"i": i, "j": j, "residual": str(res)})
    return Report("homogeneous-infinitesimal", "fail" if failures else "pass", float(len(failures)), m * m, failures)


def oriented_path_ok(g: GroupElement2, samples: int = 11) -> bool:
    """``s -> (A, s B)``, ``s in [0, 1]``, stays in the oriented group."""
    if float(g.det()) <= 0:
        return False
    for s in np.linspace(0.0, 1.0, samples):
        h = GroupElement2(g.A.astype(float), s * g.B.astype(float))
        if float(h.det()) <= 0:
            return False
    return True


def random_group_element2(m: int, rng: random.Random, exact: bool = True, lo: int = -3, hi: int = 3) -> GroupElement2:
    """Random element with small rational entries (det A != 0)."""
    while True:
        A = np.array([[Fraction(rng.randint(lo, hi), rng.randint(1, 3)) for _ in range(m)] for _ in range(m)], dtype=object)
        if exact_det(A) != 0:
            break
    B = np.empty((m, m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            for k in range(j, m):
                B[i, j, k] = B[i, k, j] = Fraction(rng.randint(lo, hi), rng.randint(1, 3))
    if not exact:
        return GroupElement2(A.astype(float), B.astype(float))
    return GroupElement2(A, B)
