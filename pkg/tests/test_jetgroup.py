from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetvar.errors import NotInvertibleError, OrientationError
from jetvar.forms import ScalarForm, VectorForm
from jetvar.jetgroup import (
    GroupElement1,
    GroupElement2,
    act1,
    act2,
    check_equivariant,
    check_homogeneous_finite,
    compose1,
    compose2,
    field_at,
    infinitesimal1,
    infinitesimal2,
    inverse1,
    inverse2,
    oriented_path_ok,
    random_group_element2,
    random_regular_point,
    solve_element,
)
from jetvar.jetcalc import delta_field
from jetvar.symexpr import Dimensions, JetPoint, u
from jetvar.variational import L_area, L_length, L_minor


def exact(x):
    return np.array(x, dtype=object)


def scalar_element(a, b) -> GroupElement2:
    return GroupElement2(exact([[Fraction(a)]]), exact([[[Fraction(b)]]]))


def test_compose_m1_example():
    g = scalar_element(2, 3) @ scalar_element(5, 7)
    assert g == scalar_element(10, 89)


def test_inverse_m1_example():
    assert inverse2(scalar_element(2, 3)) == scalar_element(Fraction(1, 2), Fraction(-3, 8))
    e = GroupElement2.identity(1)
    assert inverse2(e) == e


def test_identity_is_neutral():
    rng = random.Random(1)
    for m in (1, 2, 3):
        e = GroupElement2.identity(m)
        g = random_group_element2(m, rng)
        assert compose2(e, g) == g and compose2(g, e) == g


def test_singular_rejected():
    with pytest.raises(NotInvertibleError):
        GroupElement1(np.zeros((2, 2)))
    with pytest.raises(OrientationError):
        GroupElement1(np.diag([1.0, -1.0]), oriented=True)


def test_act1_examples():
    p = JetPoint(v=[[1.0, 0.0]])
    assert np.array_equal(act1(GroupElement1(np.array([[2.0]])), p).v, [[2.0, 0.0]])
    assert np.array_equal(act1(GroupElement1.identity(1, exact=False), p).v, p.v)


def test_act2_example():
    p = JetPoint(v=[[1.0, 0.0]], w=[[[0.0, 0.0]]])
    q = act2(GroupElement2(np.array([[1.0]]), np.array([[[0.5]]])), p)
    assert np.array_equal(q.w, [[[0.5, 0.0]]])


def test_first_order_group():
    rng = random.Random(2)
    g = random_group_element2(2, rng)
    h = random_group_element2(2, rng)
    g1, h1 = GroupElement1(g.A), GroupElement1(h.A)
    assert compose1(g1, h1) == GroupElement1(g.A.dot(h.A))
    assert compose1(g1, inverse1(g1)) == GroupElement1.identity(2)


def test_infinitesimal_examples():
    dims = Dimensions(2, 3)
    assert infinitesimal1(np.zeros((2, 2)), dims).is_zero()
    assert infinitesimal2(np.zeros((2, 2)), np.zeros((2, 2, 2)), dims).is_zero()
    E11 = np.array([[1, 0], [0, 0]])
    field = infinitesimal1(E11, dims)
    delta = delta_field(1, 1, dims.coords(1))
    for c in dims.coords(1):
        assert field[c].equals(delta[c])
    one = Dimensions(1, 2)
    f2 = infinitesimal2(np.zeros((1, 1)), np.ones((1, 1, 1)), one)
    for c in one.coords(2):
        expected = u(c.a, 1) if c.order == 2 else 0
        assert f2[c].equals(expected)


def test_equivariance_examples():
    assert check_equivariant(L_minor(2).form).passed
    assert check_equivariant(VectorForm.top(1, ScalarForm.function(u(1, 1)))).passed
    assert not check_equivariant(VectorForm.top(1, ScalarForm.function(u(1, 1) ** 2))).passed


def test_homogeneous_finite_examples():
    assert check_homogeneous_finite(L_area(3).L, Dimensions(2, 3), trials=100).passed
    rep = check_homogeneous_finite(u(1, 1) * 0 + 1, Dimensions(2, 3), trials=1, matrices=[np.diag([2.0, 1.0])])
    assert not rep.passed
    p = JetPoint(v=[[0.3, -1.2, 0.5]])
    L = L_length(3).L
    assert float(L.evaluate(act1(GroupElement1(np.array([[3.0]])), p))) == pytest.approx(3 * float(L.evaluate(p)))


def test_equivariance_implies_finite_homogeneity():
    for lag in (L_length(2), L_area(3), L_minor(3)):
        assert check_equivariant(lag.form).passed
        assert check_homogeneous_finite(lag.L, lag.dims, trials=50).passed


def test_oriented_path():
    g = GroupElement2(np.diag([2.0, 1.0]), np.ones((2, 2, 2)))
    assert oriented_path_ok(g)
    assert not oriented_path_ok(GroupElement2(np.diag([-2.0, 1.0]), np.ones((2, 2, 2))))


# --- properties --------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_group_axioms_exact(seed, m):
    rng = random.Random(seed)
    g, h, k = (random_group_element2(m, rng) for _ in range(3))
    assert compose2(compose2(g, h), k) == compose2(g, compose2(h, k))
    e = GroupElement2.identity(m)
    assert compose2(g, inverse2(g)) == e
    assert compose2(inverse2(g), g) == e
    assert np.array_equal(compose2(g, h).A, g.A.dot(h.A))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_right_action_law(seed, m):
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    g, h = random_group_element2(m, rng), random_group_element2(m, rng)
    p = random_regular_point(Dimensions(m, m + 1), nrng, order=2)
    lhs = act2(compose2(g, h), p)
    rhs = act2(h, act2(g, p))
    assert np.allclose(lhs.v, rhs.v, atol=1e-10) and np.allclose(lhs.w, rhs.w, atol=1e-10)
    back = act2(g, act2(inverse2(g), p))
    assert np.allclose(back.v, p.v) and np.allclose(back.w, p.w)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_infinitesimal_matches_finite_differences(seed, m):
    nrng = np.random.default_rng(seed)
    dims = Dimensions(m, m + 1)
    p = random_regular_point(dims, nrng, order=2)
    a = nrng.standard_normal((m, m))
    b = nrng.standard_normal((m, m, m))
    b = (b + np.swapaxes(b, 1, 2)) / 2
    step = 1e-5
    hi = act2(GroupElement2(np.eye(m) + step * a, step * b), p)
    lo = act2(GroupElement2(np.eye(m) - step * a, -step * b), p)
    fd_v = (hi.v - lo.v) / (2 * step)
    fd_w = (hi.w - lo.w) / (2 * step)
    got = field_at(infinitesimal2(a, b, dims), p, dims, 2)
    assert np.allclose(got.v, fd_v, rtol=1e-6, atol=1e-7)
    assert np.allclose(got.w, fd_w, rtol=1e-6, atol=1e-7)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_action_is_free_at_regular_points(seed, m):
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    g = random_group_element2(m, rng, exact=False)
    p = random_regular_point(Dimensions(m, m + 1), nrng, order=2)
    q = act2(g, p)
    found = solve_element(p, q)
    assert found is not None and found.distance(g) < 1e-8
    if g.distance(GroupElement2.identity(m, exact=False)) > 1e-6:
        assert not (np.allclose(q.v, p.v, atol=1e-12) and np.allclose(q.w, p.w, atol=1e-12))
