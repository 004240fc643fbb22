import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from darboux_roll.errors import ChartSingularity, GoalTangentSingularity
from darboux_roll.montana import (ContactState, SphereGeometry, check_latitude,
                                  constrained_montana_field, montana_field, montana_matrix,
                                  wrap_angle)

real = st.floats(-3, 3)
state_st = st.builds(ContactState, real, real, st.floats(-math.pi, math.pi),
                     st.floats(-1.4, 1.4), st.floats(-math.pi, math.pi))


@given(state_st, st.tuples(real, real, real), st.floats(0.1, 5))
def test_field_is_matrix_times_omega(x, omega, radius):
    geom = SphereGeometry(radius)
    np.testing.assert_allclose(montana_field(x, omega, geom),
                               montana_matrix(x, geom) @ np.array(omega), atol=1e-12)


@given(state_st, st.tuples(real, real, real), st.tuples(real, real, real), real)
def test_field_linear_in_omega(x, a, b, k):
    geom = SphereGeometry()
    lhs = montana_field(x, np.add(a, np.multiply(k, b)), geom)
    rhs = montana_field(x, a, geom) + k * montana_field(x, b, geom)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_spin_only_changes_psi():
    d = montana_field(ContactState(0.3, -0.2, 1.0, 0.5, 0.7), (0, 0, 1), SphereGeometry(2.0))
    np.testing.assert_array_equal(d, [0, 0, 0, 0, -1])


def test_pure_roll_about_x():
    # w = (1, 0, 0) at psi = 0, v_o = 0: plane point moves along -v_s, sphere along -v_o
    d = montana_field(ContactState(0, 0, 0, 0, 0), (1, 0, 0), SphereGeometry(2.0))
    np.testing.assert_allclose(d, [0, -2, 0, -1, 0], atol=1e-15)


@given(state_st, real, real, st.floats(-1.5, 1.5))
def test_constrained_heading(x, wy, wz, g_f):
    d = constrained_montana_field(x, wy, wz, g_f, SphereGeometry())
    if math.hypot(d[0], d[1]) > 1e-9:
        heading = math.atan2(d[1], d[0])
        assert min(abs(math.remainder(heading - g_f, math.pi)), 1) < 1e-9


def test_goal_tangent_singularity():
    with pytest.raises(GoalTangentSingularity):
        constrained_montana_field(ContactState(0, 0, 0, 0, 0), 1, 0, math.pi / 2, SphereGeometry())


def test_chart_singularity():
    with pytest.raises(ChartSingularity):
        montana_field(ContactState(0, 0, 0, math.pi / 2, 0), (1, 0, 0), SphereGeometry())
    with pytest.raises(ChartSingularity):
        check_latitude(-1.6)


@given(st.floats(-100, 100))
def test_wrap_angle(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.remainder(w - a, 2 * math.pi) == pytest.approx(0, abs=1e-9)


def test_wrap_angle_boundary():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(math.pi) == math.pi
    assert ContactState(0, 0, 3 * math.pi, 0, -3 * math.pi).wrapped() == (0, 0, math.pi, 0, math.pi)


def test_geometry_validation():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            SphereGeometry(bad)
