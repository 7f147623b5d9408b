from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetvar.errors import (
    DomainError,
    IncompletePointError,
    OrderOverflowError,
    ParseError,
    UnsupportedFunctionError,
)
from jetvar.numeric import finite_diff_oracle
from jetvar.parser import parse_coord, parse_expr
from jetvar.symexpr import (
    Coord,
    Dimensions,
    Expr,
    JetPoint,
    apply_function,
    base,
    cancel,
    is_regular,
    partial,
    simplify,
    sqrt,
    sym_partial,
    u,
    vel,
)
from jetvar.variational import L_area


def test_partial_product_rule():
    assert partial(u(1) * u(2), base(1)).equals(u(2))


def test_partial_sqrt_matches_closed_form_and_finite_differences():
    e = sqrt(u(1, 1) ** 2 + u(2, 1) ** 2)
    got = partial(e, vel(1, 1))
    assert got.equals(u(1, 1) / sqrt(u(1, 1) ** 2 + u(2, 1) ** 2))
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = JetPoint(rng.normal(size=2), rng.normal(size=(1, 2)))
        fd = finite_diff_oracle(e, vel(1, 1), p)
        assert float(got.evaluate(p)) == pytest.approx(fd, rel=1e-6)


def test_partial_same_canonical_coordinate():
    assert parse_coord("u[1;1,2]") == parse_coord("u[1;2,1]")
    assert partial(parse_expr("u[1;1,2]"), parse_coord("u[1;2,1]")).equals(Expr.lift(1))


def test_sym_partial_multiplicity():
    assert sym_partial(parse_expr("u[1;1,1]"), 1, 1, 1).equals(Expr.lift(1))
    assert sym_partial(parse_expr("u[1;1,2]"), 1, 1, 2).equals(Expr.lift(Fraction(1, 2)))
    assert sym_partial(parse_expr("u[1;1,2]"), 1, 2, 1).equals(Expr.lift(Fraction(1, 2)))


def test_unknown_function_rejected():
    with pytest.raises(UnsupportedFunctionError):
        apply_function("tanh", u(1))
    with pytest.raises(ParseError):
        parse_expr("tanh(u[1])")


def test_eval_examples():
    p = JetPoint(v=[[3.0, 4.0]])
    assert u(1, 1) * u(2, 1) and float((u(1, 1) * u(2, 1)).evaluate(p)) == 12
    assert float(sqrt(u(1, 1) ** 2 + u(2, 1) ** 2).evaluate(p)) == 5
    q = JetPoint(v=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert float(L_area(3).L.evaluate(q)) == 1


def test_eval_exact_rational():
    p = JetPoint(v=[[Fraction(1, 3), Fraction(1, 2)]])
    assert (u(1, 1) * u(2, 1)).evaluate(p, exact=True) == Fraction(1, 6)


def test_eval_errors():
    with pytest.raises(DomainError):
        sqrt(u(1) - 2).evaluate(JetPoint(x=[0.0]))
    with pytest.raises(IncompletePointError):
        u(1, 1).evaluate(JetPoint(x=[0.0, 1.0]))


def test_is_regular_examples():
    assert is_regular(JetPoint(v=[[1, 0, 0], [0, 1, 0]]))
    assert not is_regular(JetPoint(v=[[1, 2, 3], [2, 4, 6]]))
    assert is_regular(JetPoint(v=[[1, 1, 0], [0, 1, 1]]))


def test_order_cap():
    with pytest.raises((OrderOverflowError, ParseError)):
        parse_expr("u[1;1,1,1,1]")
    with pytest.raises(OrderOverflowError):
        parse_expr("u[1;1,1,1]").total_d(1)


def test_dimensions_reject_small_n():
    with pytest.raises(ValueError):
        Dimensions(3, 2)
    assert len(Dimensions(2, 3).coords(1)) == 3 + 6


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_expr("u[1] + * u[2]")
    assert info.value.column == 8


def test_cancel_divides_exact_quotients():
    g = u(1, 1) ** 2 + u(2, 1) ** 2
    e = (u(1, 1) ** 4 - u(2, 1) ** 4) / g
    assert cancel(e) == u(1, 1) ** 2 - u(2, 1) ** 2


def test_sqrt_square_is_argument():
    g = u(1, 1) ** 2 + 1
    assert (sqrt(g) * sqrt(g)).equals(g)


# --- properties --------------------------------------------------------------

_coords = [base(1), base(2), vel(1, 1), vel(2, 1), vel(1, 2), Coord.make(1, 1, 2)]

coef = st.integers(-3, 3)
mono = st.lists(st.sampled_from(_coords), max_size=3)
polys = st.lists(st.tuples(coef, mono), min_size=1, max_size=4)


def _build(spec) -> Expr:
    e = Expr.lift(0)
    for c, cs in spec:
        t = Expr.lift(c)
        for x in cs:
            t = t * Expr.atom(x)
        e = e + t
    return e


@settings(max_examples=60, deadline=None)
@given(polys, st.sampled_from(_coords), st.sampled_from(_coords))
def test_mixed_partials_commute(spec, a, b):
    e = _build(spec) * sqrt(u(1, 1) ** 2 + 1)
    assert partial(partial(e, a), b).equals(partial(partial(e, b), a))


@settings(max_examples=40, deadline=None)
@given(polys, st.sampled_from(_coords), st.integers(0, 10_000))
def test_partial_agrees_with_finite_differences(spec, c, seed):
    e = _build(spec) * sqrt(u(1, 1) ** 2 + u(2, 2) ** 2 + 1)
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1, 1, (2, 2, 2))
    p = JetPoint(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, (2, 2)), w + np.swapaxes(w, 0, 1))
    got = float(partial(e, c).evaluate(p))
    fd = finite_diff_oracle(e, c, p)
    assert got == pytest.approx(fd, rel=1e-5, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_simplify_idempotent(a, b):
    e = _build(a) / (_build(b) + u(1, 1) ** 2 + 1)
    once = simplify(e)
    assert simplify(once) == once
    assert (once - e).is_zero()


@settings(max_examples=60, deadline=None)
@given(polys, st.integers(1, 2))
def test_total_d_leibniz(spec, k):
    f = _build(spec)
    g = u(1, 1) + u(2) * u(1)
    assert (f * g).total_d(k).equals(f.total_d(k) * g + f * g.total_d(k))
