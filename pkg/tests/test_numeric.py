from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetvar.errors import OrientationError, PreconditionError, RegularityError
from jetvar.numeric import (
    Grid,
    PolyCurve,
    action,
    bump_field,
    euler_max_along,
    finite_diff_oracle,
    first_variation,
    random_poly_curve,
    reparam_invariance,
    smoothstep,
    t_var,
)
from jetvar.prolong import VectorFieldOnE
from jetvar.suites import graph_curve
from jetvar.symexpr import Dimensions, JetPoint, u, vel
from jetvar.variational import L_area, L_length, Lagrangian

t1, t2 = t_var(1), t_var(2)


def test_action_examples():
    assert action(L_length(2), PolyCurve([t1, 0], 1), Grid(8)) == pytest.approx(1, abs=1e-14)
    assert action(L_length(2), PolyCurve([3 * t1, 4 * t1], 1), Grid(8)) == pytest.approx(5, abs=1e-13)
    assert action(L_area(3), PolyCurve([t1, t2, 0], 2), Grid(8)) == pytest.approx(1, abs=1e-14)


def test_action_rejects_non_immersion():
    with pytest.raises(RegularityError):
        action(L_length(2), PolyCurve([t1 * t1 - t1, 0], 1), Grid(2, rule="trapezoid"))


def test_curve_rejects_non_polynomials():
    with pytest.raises(PreconditionError):
        PolyCurve([u(1, 1)], 1)


def test_grid_weights_sum_to_one():
    for grid in (Grid(3), Grid(5, rule="trapezoid"), Grid(2, g=7)):
        for m in (1, 2):
            _, w = grid.nodes(m)
            assert float(np.sum(w)) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        Grid(0)
    with pytest.raises(ValueError):
        Grid(4, rule="simpson")


def test_reparametrisation_identity_is_exact():
    curve = PolyCurve([t1, t1 * t1], 1)
    rep = reparam_invariance(L_length(2), curve, PolyCurve([t1], 1), Grid(16))
    assert rep.residual == 0


def test_reparametrisation_invariance():
    arc = PolyCurve([t1, t1 * t1 - t1], 1)
    assert reparam_invariance(L_length(2), arc, smoothstep(1), Grid(200)).residual < 1e-8
    surf = PolyCurve([t1, t2, t1 * t2 + t1 * t1], 2)
    assert reparam_invariance(L_area(3), surf, smoothstep(2), Grid(64)).residual < 1e-8


def test_reparametrisation_negative_control():
    lag = Lagrangian(u(1, 1) ** 2, Dimensions(1, 2))
    rep = reparam_invariance(lag, PolyCurve([t1, 0], 1), smoothstep(1), Grid(200))
    # int_0^1 phi'(t)^2 dt = 6/5 against 1
    assert rep.residual == pytest.approx(0.2, rel=1e-10)


def test_reparametrisation_preconditions():
    curve = PolyCurve([t1, 0], 1)
    with pytest.raises(OrientationError):
        reparam_invariance(L_length(2), curve, PolyCurve([1 - t1], 1), Grid(8))
    with pytest.raises(PreconditionError):
        reparam_invariance(L_length(2), curve, PolyCurve([t1 / 2], 1), Grid(8))


def test_first_variation_converges():
    surf = graph_curve(2, t1 * t2 + t1 * t1 / 2)
    X = bump_field(3, 2, [0, 0, 1])
    coarse = first_variation(L_area(3), surf, X, Grid(2)).residual
    fine = first_variation(L_area(3), surf, X, Grid(4)).residual
    assert fine * 4 <= coarse
    rep = first_variation(L_area(3), surf, X, Grid(64))
    assert rep.passed and abs(rep.lhs - rep.rhs) < 1e-8
    data = rep.to_json()
    assert data["grid"] == {"N": 64, "rule": "gauss", "g": 4}
    assert set(data) == {"check", "lhs", "rhs", "boundary", "residual", "grid", "tolerance", "pass"}


def test_first_variation_boundary_flux():
    # a field that does not vanish on the boundary: the flux term carries it
    curve = PolyCurve([t1, t1 * t1], 1)
    X = VectorFieldOnE([u(2), u(1)])
    rep = first_variation(L_length(2), curve, X, Grid(64))
    assert abs(rep.boundary) > 1e-3
    assert rep.residual < 1e-10


def test_trapezoid_rule_second_order():
    surf = graph_curve(2, t1 * t2 + t1 * t1 / 2)
    X = VectorFieldOnE([u(2), u(1) * u(2), u(1)])
    r1 = first_variation(L_area(3), surf, X, Grid(8, rule="trapezoid")).residual
    r2 = first_variation(L_area(3), surf, X, Grid(16, rule="trapezoid")).residual
    assert 3 < r1 / r2 < 5


def test_extremals_have_vanishing_euler_form():
    assert euler_max_along(L_length(3), PolyCurve([t1, 2 * t1 + 1, -t1], 1)) < 1e-12
    assert euler_max_along(L_area(3), PolyCurve([t1, t2, t1 - 2 * t2 + 3], 2)) < 1e-12
    assert euler_max_along(L_length(2), PolyCurve([t1, t1 * t1], 1)) > 1e-2


def test_finite_diff_oracle_example():
    p = JetPoint(v=[[3.0, 0.5]])
    assert finite_diff_oracle(u(1, 1) ** 2, vel(1, 1), p) == pytest.approx(6, abs=1e-6)


# --- properties --------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_length_action_reparametrisation_property(seed):
    rng = np.random.default_rng(seed)
    curve = random_poly_curve(1, 2, rng)
    curve = PolyCurve([t1, curve.components[1]], 1)
    rep = reparam_invariance(L_length(2), curve, smoothstep(1), Grid(200))
    assert rep.residual < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_curve_jet_matches_symbolic_derivatives(seed):
    rng = np.random.default_rng(seed)
    curve = random_poly_curve(2, 3, rng, degree=3)
    t = rng.uniform(0, 1, 2)
    jet = curve.jet(t, order=2)
    h = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (curve.jet(t + e).x - curve.jet(t - e).x) / (2 * h)
        assert np.allclose(jet.v[i], fd, rtol=1e-6, atol=1e-6)
        fd2 = (curve.jet(t + e).v - curve.jet(t - e).v) / (2 * h)
        assert np.allclose(jet.w[:, i], fd2, rtol=1e-6, atol=1e-6)
