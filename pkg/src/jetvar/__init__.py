"""Symbolic jet calculus for homogeneous (parametrisation-invariant)
variational problems."""
from __future__ import annotations

from .errors import JetError, ParseError
from .forms import ScalarForm, VectorForm, dcov, ext_d, wedge
from .jetcalc import d_T, homotopy_P1, homotopy_P2, i_T, total_d, vertical_S, vf_S
from .numeric import Grid, PolyCurve, action, first_variation
from .parser import parse_expr
from .symexpr import Coord, Dimensions, Expr, JetPoint, u
from .variational import (
    L_area,
    L_length,
    L_minor,
    Lagrangian,
    caratheodory,
    euler_form,
    euler_tower,
    fundamental,
    hilbert_theta1,
    lepagean_check,
)

__version__ = "0.1.0"
