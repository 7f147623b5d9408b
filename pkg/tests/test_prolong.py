from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetvar.errors import DegenerateFormError, PreconditionError
from jetvar.forms import dcov
from jetvar.prolong import (
    DoubleJetPoint,
    SmoothMap,
    VectorFieldOnE,
    compose_substitutions,
    contact_det_form,
    contact_pairing_residuals,
    contact_rank,
    example_contact_2form,
    exchange,
    holonomic_embed,
    holonomic_extract,
    is_contact_numeric,
    is_holonomic,
    exchange_block_identity,
    prolongation_commutator_form_residual,
    prolongation_commutator_residuals,
    prolong_field1,
    prolong_field2,
    prolong_map1,
    prolong_map2,
)
from jetvar.suites import Sampler, random_double_point, random_holonomic_point
from jetvar.symexpr import Coord, Dimensions, Expr, JetPoint, acc, base, u, vel


def test_prolong_identity():
    sub = prolong_map2(SmoothMap.identity(2), 2)
    for c, e in sub.items():
        assert e.equals(Expr.lift(c))


def test_prolong_map_examples():
    f = SmoothMap([u(1) ** 2])
    assert prolong_map1(f, 1)[vel(1, 1)].equals(2 * u(1) * u(1, 1))
    assert prolong_map2(f, 1)[acc(1, 1, 1)].equals(2 * u(1, 1) ** 2 + 2 * u(1) * u(1, 1, 1))


def test_prolong_functorial_example():
    f, g = SmoothMap([u(1) ** 2]), SmoothMap([u(1) + 1])
    lhs = prolong_map2(f.compose(g), 1)
    rhs = compose_substitutions(prolong_map2(f, 1), prolong_map2(g, 1))
    for c in lhs:
        assert lhs[c].equals(rhs[c])


def test_smooth_map_rejects_velocities():
    with pytest.raises(PreconditionError):
        SmoothMap([u(1, 1)])
    with pytest.raises(PreconditionError):
        VectorFieldOnE([u(1, 1)])


def test_prolong_field_examples():
    const = prolong_field2(VectorFieldOnE([1, 0]), 1)
    assert const.values.keys() == {base(1)}
    X = VectorFieldOnE([u(2), 0])
    X1 = prolong_field1(X, 1)
    assert X1[base(1)].equals(u(2)) and X1[vel(1, 1)].equals(u(2, 1))
    assert set(X1.values) == {base(1), vel(1, 1)}
    X2 = prolong_field2(X, 1)
    assert X2[acc(1, 1, 1)].equals(u(2, 1, 1))


def test_exchange_example():
    p = DoubleJetPoint([0], [[2]], [[3]], [[[5]]])
    q = exchange(p)
    assert q == DoubleJetPoint([0], [[3]], [[2]], [[[5]]])


def test_holonomic_fixed_by_exchange():
    rng = random.Random(4)
    p = random_holonomic_point(2, 3, rng)
    assert is_holonomic(p) and exchange(p) == p


def test_holonomic_extract_requires_holonomic():
    p = DoubleJetPoint([0, 0], [[1, 0]], [[0, 1]], [[[0, 0]]])
    with pytest.raises(PreconditionError):
        holonomic_extract(p)


def test_contact_form_examples():
    th = contact_det_form([1, 2], 1, 2)
    assert th.equals(dcov(base(2)).scale(u(1, 1)) - dcov(base(1)).scale(u(2, 1)))
    assert all(r.is_zero() for r in contact_pairing_residuals(th, 1))
    th3 = contact_det_form([1, 2, 3], 2, 3)
    minor = u(1, 1) * u(2, 2) - u(2, 1) * u(1, 2)
    assert th3.coefficient(base(3)).equals(minor)
    with pytest.raises(DegenerateFormError):
        contact_det_form([1, 1, 2], 2, 3)


def test_contact_rank_at_standard_point():
    for m, n in [(1, 2), (1, 3), (2, 3), (2, 4)]:
        v = np.eye(m, n)
        families = [tuple(range(1, m + 1)) + (m + k,) for k in range(1, n - m + 1)]
        assert contact_rank(m, n, JetPoint(v=v), families) == n - m


def test_contact_numeric_examples():
    assert is_contact_numeric(contact_det_form([1, 2, 3], 2, 3), 2, 3).passed
    rep = is_contact_numeric(example_contact_2form(), 2, 3, trials=20)
    assert rep.passed and rep.residual < 1e-10
    bad = is_contact_numeric(dcov(base(1)), 1, 2)
    assert not bad.passed and bad.residual > 1e-3


# --- properties --------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_prolong_functorial(seed):
    smp = Sampler(seed)
    d = Dimensions(1, 2)
    f = SmoothMap([smp.base_poly(d), smp.base_poly(d)])
    g = SmoothMap([smp.base_poly(d), smp.base_poly(d)])
    lhs = prolong_map2(f.compose(g), 1)
    rhs = compose_substitutions(prolong_map2(f, 1), prolong_map2(g, 1))
    assert all(lhs[c].equals(rhs[c]) for c in lhs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_prolong_map2_symmetric(seed):
    smp = Sampler(seed)
    f = SmoothMap([smp.base_poly(Dimensions(2, 2)) * u(2) for _ in range(2)])
    sub = prolong_map2(f, 2)
    for a, fa in enumerate(f.components, start=1):
        assert fa.total_d(1).total_d(2).equals(fa.total_d(2).total_d(1))
        assert sub[Coord.make(a, 2, 1)].equals(fa.total_d(2).total_d(1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 2))
def test_prolongations_commute_with_total_derivatives(seed, m):
    smp = Sampler(seed)
    d = Dimensions(m, 3)
    X = VectorFieldOnE([smp.base_poly(d) for _ in range(3)])
    f = smp.base_poly(d, nterms=3)
    assert all(r.is_zero() for r in prolongation_commutator_residuals(X, f, m))
    omega = smp.form(d, 1, 1, nterms=2)
    for i in range(1, m + 1):
        assert prolongation_commutator_form_residual(X, omega, m, i).is_zero()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_exchange_properties(seed, m, k):
    rng = random.Random(seed)
    p = random_double_point(m, m + k, rng)
    assert exchange(exchange(p)) == p
    assert exchange_block_identity(p)
    assert is_holonomic(p) == (exchange(p) == p and np.array_equal(p.v, p.vp))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_holonomic_embed_round_trip(seed, m):
    nrng = np.random.default_rng(seed)
    w = nrng.integers(-3, 4, (m, m, m + 1))
    q = JetPoint(nrng.integers(-3, 4, m + 1), nrng.integers(-3, 4, (m, m + 1)), w + np.swapaxes(w, 0, 1))
    p = holonomic_embed(q)
    assert is_holonomic(p)
    assert exchange(p) == p
    back = holonomic_extract(p)
    assert np.array_equal(back.v, q.v) and np.array_equal(back.w, q.w)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(1, 2), (1, 3), (2, 3), (2, 4)]), st.data())
def test_determinant_forms_annihilate_total_derivatives(mn, data):
    m, n = mn
    idx = data.draw(st.permutations(range(1, n + 1)))[: m + 1]
    th = contact_det_form(idx, m, n)
    assert all(r.is_zero() for r in contact_pairing_residuals(th, m))
