import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from darboux_roll.diffgeo import (CurvatureTriple, SurfaceChart, coordinate_curvatures,
                                  directional_curvature, fundamental_forms, gauss_weingarten,
                                  metric_partials, plane_chart, sphere_chart, sphere_curvatures)
from darboux_roll.errors import DegenerateChart, NonOrthogonalChart

angle = st.floats(-math.pi, math.pi)
latitude = st.floats(-1.4, 1.4)


# Frozen oracle: E = R^2 cos^2 v, F = 0, G = R^2, L = R cos^2 v, M = 0, N = R (inward normal).
@pytest.mark.parametrize("radius,u,v", [(1.0, 0.3, 0.4), (2.0, -1.1, -0.9), (0.5, 2.5, 1.2)])
def test_sphere_fundamental_forms(radius, u, v):
    got = fundamental_forms(sphere_chart(radius), u, v)
    c2 = math.cos(v) ** 2
    np.testing.assert_allclose(got, [radius ** 2 * c2, 0, radius ** 2, radius * c2, 0, radius],
                               atol=1e-9)


def test_plane_forms_and_curvatures():
    chart = plane_chart()
    np.testing.assert_allclose(fundamental_forms(chart, 1.3, -0.4), [1, 0, 1, 0, 0, 0], atol=1e-12)
    uc, vc = coordinate_curvatures(chart, 0.2, 0.7)
    np.testing.assert_allclose(uc + vc, 0, atol=1e-12)


def test_sphere_chart_point():
    np.testing.assert_allclose(sphere_chart(2.0)(0.0, 0.0), [0.0, 0.0, -2.0])


def test_sphere_metric_partials():
    d = metric_partials(sphere_chart(1.5), 0.2, 0.6)
    assert d["E_v"] == pytest.approx(-2.25 * math.sin(1.2), abs=1e-9)
    for k in ("E_u", "F_u", "F_v", "G_u", "G_v"):
        assert d[k] == pytest.approx(0.0, abs=1e-9)


@given(u=angle, v=latitude)
def test_sphere_coordinate_curvatures(u, v):
    uc, vc = coordinate_curvatures(sphere_chart(1.0), u, v)
    eu, ev = sphere_curvatures(v)
    np.testing.assert_allclose(uc + vc, eu + ev, atol=1e-7)


# A skewed, curved chart: r = (u + 0.5 v, v, 0.3 u^2 + 0.2 u v - 0.1 v^2 + 0.05 sin(u v)).
def _skew(u, v, m=math):
    return [u + 0.5 * v, v, 0.3 * u * u + 0.2 * u * v - 0.1 * v * v + 0.05 * m.sin(u * v)]


SKEW = SurfaceChart(lambda u, v: np.array(_skew(u, v)), (-2.0, 2.0), (-2.0, 2.0))


def _exact(u, v):
    """Exact partials and unit normal of the skewed chart via mpmath."""
    mpmath.mp.dps = 30
    d = lambda i, j, k: float(mpmath.diff(lambda a, b: _skew(a, b, mpmath)[k], (u, v), (i, j)))  # noqa: E731
    r_u, r_v = (np.array([d(1, 0, k) for k in range(3)]), np.array([d(0, 1, k) for k in range(3)]))
    second = {key: np.array([d(*key, k) for k in range(3)]) for key in ((2, 0), (1, 1), (0, 2))}
    n = np.cross(r_u, r_v)
    return r_u, r_v, second, n / np.linalg.norm(n)


@pytest.mark.parametrize("u,v", [(0.3, -0.2), (-1.0, 0.7), (1.5, 1.1)])
def test_gauss_equations_non_orthogonal(u, v):
    r_u, r_v, sec, n = _exact(u, v)
    G111, G211, G112, G212, G122, G222 = gauss_weingarten(SKEW, u, v).christoffel
    E, F, G, L, M, N = fundamental_forms(SKEW, u, v)
    assert abs(F) > 0.1
    for rhs, lhs in (((G111, G211, L), sec[(2, 0)]), ((G112, G212, M), sec[(1, 1)]),
                     ((G122, G222, N), sec[(0, 2)])):
        np.testing.assert_allclose(rhs[0] * r_u + rhs[1] * r_v + rhs[2] * n, lhs, atol=1e-8)


@pytest.mark.parametrize("u,v", [(0.3, -0.2), (-1.0, 0.7)])
def test_weingarten_equations_non_orthogonal(u, v):
    mpmath.mp.dps = 30

    def normal(a, b, k):
        ru = [mpmath.diff(lambda x: _skew(x, b, mpmath)[i], a) for i in range(3)]
        rv = [mpmath.diff(lambda y: _skew(a, y, mpmath)[i], b) for i in range(3)]
        c = [ru[1] * rv[2] - ru[2] * rv[1], ru[2] * rv[0] - ru[0] * rv[2], ru[0] * rv[1] - ru[1] * rv[0]]
        return c[k] / mpmath.sqrt(sum(x * x for x in c))

    n_u = np.array([float(mpmath.diff(lambda a: normal(a, v, k), u)) for k in range(3)])
    n_v = np.array([float(mpmath.diff(lambda b: normal(u, b, k), v)) for k in range(3)])
    r_u, r_v, _, _ = _exact(u, v)
    W11, W21, W12, W22 = gauss_weingarten(SKEW, u, v).weingarten
    np.testing.assert_allclose(W11 * r_u + W21 * r_v, n_u, atol=1e-8)
    np.testing.assert_allclose(W12 * r_u + W22 * r_v, n_v, atol=1e-8)


def test_non_orthogonal_chart_rejected_by_coordinate_curvatures():
    with pytest.raises(NonOrthogonalChart):
        coordinate_curvatures(SKEW, 0.3, 0.2)


def test_degenerate_chart():
    flat = SurfaceChart(lambda u, v: np.array([u + v, u + v, 0.0]), (-1, 1), (-1, 1))
    with pytest.raises(DegenerateChart):
        fundamental_forms(flat, 0.0, 0.0)


def test_outside_domain():
    with pytest.raises(ValueError):
        fundamental_forms(sphere_chart(), 0.0, 2.0)


@given(v=latitude, phi=angle, radius=st.floats(0.2, 5.0))
def test_directional_sphere(v, phi, radius):
    got = directional_curvature(*sphere_curvatures(v, radius), phi)
    np.testing.assert_allclose(got, [math.tan(v) * math.cos(phi) / radius, 1 / radius, 0.0],
                               atol=1e-12)


@given(phi=angle, kn1=st.floats(-3, 3), kn2=st.floats(-3, 3), tg=st.floats(-3, 3))
def test_directional_curvature_reduces_to_coordinate_curves(phi, kn1, kn2, tg):
    uc, vc = CurvatureTriple(0.4, kn1, tg), CurvatureTriple(-0.2, kn2, -tg)
    assert directional_curvature(uc, vc, 0.0) == pytest.approx(uc, abs=1e-12)
    at_right = directional_curvature(uc, vc, math.pi / 2)
    np.testing.assert_allclose(at_right, vc, atol=1e-12)
    # normal curvatures in orthogonal directions sum to the mean-curvature trace
    a = directional_curvature(uc, vc, phi).k_n
    b = directional_curvature(uc, vc, phi + math.pi / 2).k_n
    assert a + b == pytest.approx(kn1 + kn2, abs=1e-12)


def test_chart_validation():
    with pytest.raises(ValueError):
        SurfaceChart(lambda u, v: (u, v, 0), (0, 0), (0, 1))
    with pytest.raises(ValueError):
        SurfaceChart(lambda u, v: (u, v, 0), (0, 1), (0, 1), orientation=0)
