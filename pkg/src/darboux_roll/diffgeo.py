"""
Differential geometry of parametric surface charts.

Fundamental forms, Gauss/Weingarten coefficients and the curvature triple
(geodesic curvature, normal curvature, geodesic torsion) induced along the
coordinate curves or along an arbitrary tangent direction. All partial
derivatives are central finite differences of the chart map, so any
twice-differentiable chart can be plugged in; the sphere and the plane are
provided as closed-form fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateChart, NonOrthogonalChart

REGULARITY_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-8
DEFAULT_STEP_FRACTION = 1e-3

# 5-point central stencils, 4th order accurate.
_OFFSETS = np.arange(-2, 3)
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


@dataclass(frozen=True)
class SurfaceChart:
    """A regular parametrisation ``(u, v) -> R^3`` over a closed box.

    ``orientation`` picks the unit normal: +1 uses ``r_u x r_v``, -1 uses
    ``r_v x r_u``. The sign of the second fundamental form (and therefore of
    k_n and tau_g) follows it.
    """

    map: Callable[[float, float], np.ndarray]
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    orientation: int = 1
    step_fraction: float = DEFAULT_STEP_FRACTION

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        for lo, hi in (self.u_range, self.v_range):
            if not hi > lo:
                raise ValueError("chart ranges must be non-empty intervals")
        if self.step_fraction <= 0:
            raise ValueError("step_fraction must be positive")

    @property
    def steps(self) -> tuple[float, float]:
        hu = self.step_fraction * (self.u_range[1] - self.u_range[0])
        hv = self.step_fraction * (self.v_range[1] - self.v_range[0])
        return hu, hv

    def __call__(self, u, v) -> np.ndarray:
        return np.asarray(self.map(u, v), dtype=float)

    def contains(self, u, v) -> bool:
        return (self.u_range[0] <= u <= self.u_range[1]
                and self.v_range[0] <= v <= self.v_range[1])


def sphere_chart(radius=1.0, **kwargs) -> SurfaceChart:
    """Latitude/longitude chart of a sphere with inward-pointing normal.

    The inward normal makes the normal curvature of every direction equal to
    ``+1/radius``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")

    def f(u, v):
        cv = math.cos(v)
        return np.array([-radius * math.sin(u) * cv,
                         radius * math.sin(v),
                         -radius * math.cos(u) * cv])

    half = math.pi / 2
    return SurfaceChart(f, (-math.pi, math.pi), (-half, half), orientation=-1, **kwargs)


def plane_chart(extent=10.0, **kwargs) -> SurfaceChart:
    """Identity chart ``(u, v) -> (u, v, 0)`` on ``[-extent, extent]^2``."""

    def f(u, v):
        return np.array([u, v, 0.0])

    return SurfaceChart(f, (-extent, extent), (-extent, extent), **kwargs)


class FundamentalForms(NamedTuple):
    E: float
    F: float
    G: float
    L: float
    M: float
    N: float

    @property
    def metric_determinant(self) -> float:
        return self.E * self.G - self.F ** 2


class GaussWeingarten(NamedTuple):
    """Christoffel symbols (G111, G211, G112, G212, G122, G222) and the
    Weingarten coefficients (W11, W21, W12, W22); ``Gkij`` is Gamma^k_ij and
    ``Wji`` is W^j_i."""

    christoffel: tuple[float, float, float, float, float, float]
    weingarten: tuple[float, float, float, float]


class CurvatureTriple(NamedTuple):
    k_g: float
    k_n: float
    tau_g: float


class _Partials(NamedTuple):
    r_u: np.ndarray
    r_v: np.ndarray
    r_uu: np.ndarray
    r_uv: np.ndarray
    r_vv: np.ndarray
    normal: np.ndarray


def _partials(chart: SurfaceChart, u, v) -> _Partials:
    if not chart.contains(u, v):
        raise ValueError(f"({u}, {v}) lies outside the chart domain")
    hu, hv = chart.steps
    grid = np.array([[chart(u + i * hu, v + j * hv) for j in _OFFSETS] for i in _OFFSETS])
    mid = 2
    r_u = _D1 @ grid[:, mid] / hu
    r_v = _D1 @ grid[mid, :] / hv
    r_uu = _D2 @ grid[:, mid] / hu ** 2
    r_vv = _D2 @ grid[mid, :] / hv ** 2
    r_uv = np.einsum("i,j,ijk->k", _D1, _D1, grid) / (hu * hv)
    n = chart.orientation * np.cross(r_u, r_v)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        raise DegenerateChart(f"coordinate tangents are parallel at ({u}, {v})")
    return _Partials(r_u, r_v, r_uu, r_uv, r_vv, n / norm)


def _forms_from(p: _Partials) -> FundamentalForms:
    return FundamentalForms(
        E=float(p.r_u @ p.r_u), F=float(p.r_u @ p.r_v), G=float(p.r_v @ p.r_v),
        L=float(p.r_uu @ p.normal), M=float(p.r_uv @ p.normal), N=float(p.r_vv @ p.normal),
    )


def _check_regular(forms: FundamentalForms, u, v, tol=REGULARITY_TOL):
    if forms.metric_determinant <= tol:
        raise DegenerateChart(
            f"EG - F^2 = {forms.metric_determinant:.3e} <= {tol:g} at ({u}, {v})")


def fundamental_forms(chart: SurfaceChart, u, v) -> FundamentalForms:
    """First and second fundamental form coefficients at ``(u, v)``."""
    forms = _forms_from(_partials(chart, u, v))
    _check_regular(forms, u, v)
    return forms


def metric_partials(chart: SurfaceChart, u, v) -> dict[str, float]:
    """Partial derivatives E_u, E_v, F_u, F_v, G_u, G_v at ``(u, v)``."""
    p = _partials(chart, u, v)
    return {
        "E_u": float(2 * p.r_u @ p.r_uu),
        "E_v": float(2 * p.r_u @ p.r_uv),
        "F_u": float(p.r_uu @ p.r_v + p.r_u @ p.r_uv),
        "F_v": float(p.r_uv @ p.r_v + p.r_u @ p.r_vv),
        "G_u": float(2 * p.r_v @ p.r_uv),
        "G_v": float(2 * p.r_v @ p.r_vv),
    }


def gauss_weingarten(chart: SurfaceChart, u, v) -> GaussWeingarten:
    """Coefficients of the Gauss and Weingarten equations.

    ``r_uu = G111 r_u + G211 r_v + L n`` and so on; ``n_u = W11 r_u + W21 r_v``,
    ``n_v = W12 r_u + W22 r_v``. General (non-orthogonal) formulas are used.
    """
    E, F, G, L, M, N = fundamental_forms(chart, u, v)
    d = metric_partials(chart, u, v)
    E_u, E_v, F_u, F_v, G_u, G_v = (d[k] for k in ("E_u", "E_v", "F_u", "F_v", "G_u", "G_v"))
    D = E * G - F * F
    christoffel = (
        (G * E_u - 2 * F * F_u + F * E_v) / (2 * D),
        (2 * E * F_u - E * E_v - F * E_u) / (2 * D),
        (G * E_v - F * G_u) / (2 * D),
        (E * G_u - F * E_v) / (2 * D),
        (2 * G * F_v - G * G_u - F * G_v) / (2 * D),
        (E * G_v - 2 * F * F_v + F * G_u) / (2 * D),
    )
    weingarten = (
        (M * F - L * G) / D,
        (L * F - M * E) / D,
        (N * F - M * G) / D,
        (M * F - N * E) / D,
    )
    return GaussWeingarten(christoffel, weingarten)


def coordinate_curvatures(chart: SurfaceChart, u, v,
                          tol=ORTHOGONALITY_TOL) -> tuple[CurvatureTriple, CurvatureTriple]:
    """Curvature triples along the u-curve and the v-curve through ``(u, v)``.

    Valid for orthogonal charts only. The v-curve triple is expressed in the
    frame ``(e_v, -e_u, e_3)``, which flips the sign of its geodesic torsion.
    """
    p = _partials(chart, u, v)
    E, F, G, L, M, N = _forms_from(p)
    _check_regular(FundamentalForms(E, F, G, L, M, N), u, v)
    if abs(F) >= tol * math.sqrt(E * G):
        raise NonOrthogonalChart(f"|F| = {abs(F):.3e} at ({u}, {v})")
    E_v = 2 * p.r_u @ p.r_uv
    G_u = 2 * p.r_v @ p.r_uv
    sqrt_eg = math.sqrt(E * G)
    u_curve = CurvatureTriple(
        k_g=float(-E_v / (2 * E * math.sqrt(G))), k_n=L / E, tau_g=M / sqrt_eg)
    v_curve = CurvatureTriple(
        k_g=float(G_u / (2 * G * math.sqrt(E))), k_n=N / G, tau_g=-M / sqrt_eg)
    return u_curve, v_curve


def directional_curvature(u_curve: CurvatureTriple, v_curve: CurvatureTriple,
                          phi) -> CurvatureTriple:
    """Curvature triple along the direction at angle ``phi`` from e_u."""
    c, s = math.cos(phi), math.sin(phi)
    k_n = u_curve.k_n * c * c + 2 * u_curve.tau_g * c * s + v_curve.k_n * s * s
    tau_g = u_curve.tau_g * math.cos(2 * phi) + 0.5 * (v_curve.k_n - u_curve.k_n) * math.sin(2 * phi)
    k_g = u_curve.k_g * c + v_curve.k_g * s
    return CurvatureTriple(k_g, k_n, tau_g)


def sphere_curvatures(v_o, radius=1.0) -> tuple[CurvatureTriple, CurvatureTriple]:
    """Closed-form coordinate-curve triples of the sphere chart."""
    return (CurvatureTriple(math.tan(v_o) / radius, 1.0 / radius, 0.0),
            CurvatureTriple(0.0, 1.0 / radius, 0.0))


def plane_curvatures() -> tuple[CurvatureTriple, CurvatureTriple]:
    zero = CurvatureTriple(0.0, 0.0, 0.0)
    return zero, zero
