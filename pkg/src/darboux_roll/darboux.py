"""
Arc-length-domain kinematics driven by a virtual sandwiched surface.

The inputs are the relative geodesic curvature ``alpha_s``, geodesic torsion
``beta_s`` and normal curvature ``gamma_s`` of a fictitious surface between
sphere and plane. Together with the frame angles (theta, varphi) they fix
the angular velocity of the Darboux frame at the contact point; scaling by
the rolling rate ``delta = ds/dt`` recovers the body angular velocity.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .diffgeo import CurvatureTriple, directional_curvature, plane_curvatures, sphere_curvatures
from .errors import GoalTangentSingularity, ZeroBeta
from .montana import COS_TOL, BodyAngularVelocity, SphereGeometry, check_chart

GOAL_COS_TOL = 1e-9
DEFAULT_WPPS_THRESHOLD = 100.0


class VirtualSurfaceInputs(NamedTuple):
    alpha_s: float
    beta_s: float
    gamma_s: float


class RelativeCurvature(NamedTuple):
    kg_star: float
    kn_star: float
    taug_star: float


class FrameAngles(NamedTuple):
    """``theta``: sphere vs plane coordinate frames; ``varphi``: e_u^o vs e_1."""

    theta: float
    varphi: float

    @property
    def total(self) -> float:
        return self.theta + self.varphi


class DarbouxAngularVelocity(NamedTuple):
    """Components along the plane Darboux frame (e_1, e_2, e_3)."""

    e1: float
    e2: float
    e3: float


@dataclass(frozen=True)
class GoalDirection:
    g_f: float

    def __post_init__(self):
        if not -math.pi < self.g_f <= math.pi:
            raise ValueError(f"goal heading must lie in (-pi, pi], got {self.g_f}")


@dataclass(frozen=True)
class RollingRateProfile:
    """Rolling rate ``delta(t) >= 0``.

    ``constant`` returns ``delta_max`` everywhere. ``rest_to_rest`` is the
    raised cosine ``delta_max * (1 - cos(2 pi t / duration)) / 2``, zero at
    both ends, which covers arc length ``delta_max * duration / 2``.
    """

    kind: str = "constant"
    delta_max: float = 1.0
    duration: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "rest_to_rest"):
            raise ValueError(f"unknown rolling-rate profile {self.kind!r}")
        if not self.delta_max >= 0:
            raise ValueError("delta_max must be non-negative")
        if self.kind == "rest_to_rest" and not (self.duration and self.duration > 0):
            raise ValueError("rest_to_rest profile needs a positive duration")

    def __call__(self, t) -> float:
        if self.kind == "constant":
            return self.delta_max
        return 0.5 * self.delta_max * (1.0 - math.cos(2.0 * math.pi * t / self.duration))

    def arc_length(self, t) -> float:
        """Integral of delta from 0 to ``t``."""
        if self.kind == "constant":
            return self.delta_max * t
        w = 2.0 * math.pi / self.duration
        return 0.5 * self.delta_max * (t - math.sin(w * t) / w)


def relative_curvature(sphere_dir: CurvatureTriple, plane_dir: CurvatureTriple,
                       v: VirtualSurfaceInputs) -> RelativeCurvature:
    return RelativeCurvature(
        kg_star=sphere_dir.k_g - plane_dir.k_g - v.alpha_s,
        kn_star=sphere_dir.k_n - plane_dir.k_n - v.gamma_s,
        taug_star=sphere_dir.tau_g - plane_dir.tau_g - v.beta_s,
    )


def induced_relative_curvature(state, v: VirtualSurfaceInputs, angles: FrameAngles,
                               geom: SphereGeometry) -> RelativeCurvature:
    """Relative curvature of sphere (direction varphi) and plane (theta + varphi)."""
    su, sv = sphere_curvatures(state[3], geom.radius)
    return relative_curvature(directional_curvature(su, sv, angles.varphi),
                              _plane_direction(angles.total), v)


@functools.lru_cache(maxsize=64)
def _plane_direction(total) -> CurvatureTriple:
    # depends on the direction only, so integration loops hit the cache
    return directional_curvature(*plane_curvatures(), total)


def darboux_angular_velocity(rel: RelativeCurvature, delta) -> DarbouxAngularVelocity:
    if delta < 0:
        raise ValueError("rolling rate must be non-negative")
    return DarbouxAngularVelocity(-delta * rel.taug_star, delta * rel.kn_star, -delta * rel.kg_star)


def contact_velocity(omega: DarbouxAngularVelocity, radius) -> np.ndarray:
    """Linear velocity ``omega x (radius e_3)`` in the Darboux basis."""
    return np.array([radius * omega.e2, -radius * omega.e1, 0.0])


def sphere_angular_velocity(rel: RelativeCurvature, angles: FrameAngles, delta) -> BodyAngularVelocity:
    """Body angular velocity in the sphere contact frame (e_u^o, e_v^o, e_3)."""
    if delta < 0:
        raise ValueError("rolling rate must be non-negative")
    s, c = math.sin(angles.total), math.cos(angles.total)
    return BodyAngularVelocity(
        wx=delta * (-c * rel.taug_star - s * rel.kn_star),
        wy=delta * (-s * rel.taug_star + s * rel.kn_star),
        wz=-delta * rel.kg_star,
    )


def field_columns(x, total, varphi, radius, m=math):
    """Drift and the alpha, beta, gamma input columns at state ``x``.

    ``m`` supplies sin/cos/tan, so the same formulas evaluate under ``math``
    or ``mpmath``. Returns four 5-lists.
    """
    _, _, _, v_o, psi = x
    s, c = m.sin(total), m.cos(total)
    sp, cp = m.sin(psi), m.cos(psi)
    cv, tv = m.cos(v_o), m.tan(v_o)
    spt = m.sin(psi + total)
    R = radius
    drift = [s, s, s * (sp - cp) / (R * cv), s * (cp + sp) / R,
             tv * (s * (sp - cp) + m.cos(varphi)) / R]
    g_alpha = [0, 0, 0, 0, -1]
    g_beta = [R * s, -R * c, -spt / cv, -m.cos(psi + total), -tv * spt]
    g_gamma = [-R * s, -R * s, s * (cp - sp) / cv, -s * (sp + cp), tv * s * (cp - sp)]
    return drift, g_alpha, g_beta, g_gamma


def darboux_field(state, v: VirtualSurfaceInputs, angles: FrameAngles,
                  geom: SphereGeometry) -> np.ndarray:
    """Arc-length derivative (u_s', v_s', u_o', v_o', psi')."""
    _, _, _, v_o, psi = state
    cv = check_chart(v_o, COS_TOL)
    a, b, g = v
    R = geom.radius
    total = angles.theta + angles.varphi
    s, c = math.sin(total), math.cos(total)
    sp, cp = math.sin(psi), math.cos(psi)
    tv = math.tan(v_o)
    spt, cpt = math.sin(psi + total), math.cos(psi + total)
    return np.array([
        s + R * (b - g) * s,
        s - R * (b * c + g * s),
        (s * (sp - cp) / R - b * spt + g * s * (cp - sp)) / cv,
        s * (cp + sp) / R - b * cpt - g * s * (sp + cp),
        tv * ((s * (sp - cp) + math.cos(angles.varphi)) / R - b * spt + g * s * (cp - sp)) - a,
    ])


def _check_goal(g_f):
    if abs(math.cos(g_f)) < GOAL_COS_TOL:
        raise GoalTangentSingularity(f"G_f = {g_f!r} is too close to +-pi/2")


def goal_rho(v: VirtualSurfaceInputs, g_f, geom: SphereGeometry) -> float:
    """Cotangent of theta + varphi that keeps the plane heading at ``g_f``."""
    if v.beta_s == 0:
        raise ZeroBeta("beta_s must be nonzero: the heading constraint divides by it "
                       "and without it the model is not controllable")
    _check_goal(g_f)
    t = math.tan(g_f)
    return ((1.0 - t) / geom.radius + v.gamma_s * (t - 1.0) - v.beta_s * t) / v.beta_s


def varphi_branch(g_f) -> float:
    """varphi in {0, pi} as a function of the goal heading.

    Branches are tested in order; headings in [pi/4, pi] fall to 0.
    """
    q = math.pi / 4
    if -3 * q < g_f < 0 or 0 <= g_f < q:
        return math.pi
    return 0.0


def plane_heading(state, v, angles, geom) -> float:
    d = darboux_field(state, v, angles, geom)
    return math.atan2(d[1], d[0])


def goal_angles(v: VirtualSurfaceInputs, g_f, geom: SphereGeometry,
                full_circle=False) -> FrameAngles:
    """Frame angles that steer the contact point along heading ``g_f``.

    theta + varphi is the principal arccot in (0, pi), which reaches ``g_f``
    whenever ``(1 + R(beta_s - gamma_s)) cos(g_f) > 0`` and ``g_f + pi``
    otherwise. ``full_circle=True`` adds pi to theta in the latter case so
    every heading is reachable.
    """
    rho = goal_rho(v, g_f, geom)
    total = math.atan2(1.0, rho)
    if full_circle:
        forward = math.sin(total) * (1.0 + geom.radius * (v.beta_s - v.gamma_s))
        if forward * math.cos(g_f) < 0:
            total += math.pi
    varphi = varphi_branch(g_f)
    return FrameAngles(theta=total - varphi, varphi=varphi)


@dataclass(frozen=True)
class WppsReport:
    rho: float
    rho_squared: float
    threshold: float
    passes: bool

    def to_dict(self):
        return {"rho": self.rho, "rho_squared": self.rho_squared,
                "threshold": self.threshold, "passes": self.passes}


def wpps_report(v: VirtualSurfaceInputs, g_f, geom: SphereGeometry,
                threshold=DEFAULT_WPPS_THRESHOLD) -> WppsReport:
    """Check ``rho^2 > threshold``, under which theta is insensitive to the state."""
    rho = goal_rho(v, g_f, geom)
    return WppsReport(rho, rho * rho, threshold, rho * rho > threshold)
