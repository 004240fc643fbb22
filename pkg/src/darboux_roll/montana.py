"""
Time-domain contact kinematics of a sphere spin-rolling on a plane.

The five contact coordinates evolve linearly in the body angular velocity
expressed in the sphere contact frame. A constrained variant ties
``w_x = -w_y tan(G_f)`` so that the plane heading is fixed, leaving only two
inputs for the three sphere coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ChartSingularity, GoalTangentSingularity

COS_TOL = 1e-6
GOAL_COS_TOL = 1e-9


class ContactState(NamedTuple):
    """Plane coordinates (u_s, v_s), sphere latitude/longitude (u_o, v_o), spin psi."""

    u_s: float
    v_s: float
    u_o: float
    v_o: float
    psi: float

    def wrapped(self) -> "ContactState":
        """Copy with u_o and psi mapped into (-pi, pi]."""
        return self._replace(u_o=wrap_angle(self.u_o), psi=wrap_angle(self.psi))


class BodyAngularVelocity(NamedTuple):
    wx: float
    wy: float
    wz: float


@dataclass(frozen=True)
class SphereGeometry:
    radius: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


def wrap_angle(a):
    """Map an angle into (-pi, pi]."""
    w = math.remainder(a, 2 * math.pi)
    return math.pi if w == -math.pi else w


def check_chart(v_o, tol=COS_TOL):
    c = math.cos(v_o)
    if abs(c) < tol:
        raise ChartSingularity(f"|cos v_o| = {abs(c):.3e} < {tol:g} (v_o = {float(v_o)!r})")
    return c


def check_latitude(v_o, tol=COS_TOL):
    """Like :func:`check_chart`, but also rejects latitudes past the poles.

    Discrete steps can jump across v_o = +-pi/2 without |cos v_o| ever
    dropping below ``tol``; this catches the crossing.
    """
    if not abs(v_o) < 0.5 * math.pi:
        raise ChartSingularity(f"v_o = {float(v_o)!r} left the chart (-pi/2, pi/2)")
    return check_chart(v_o, tol)


def montana_matrix(state, geom: SphereGeometry) -> np.ndarray:
    """5x3 input matrix mapping (w_x, w_y, w_z) to contact-coordinate rates."""
    _, _, _, v_o, psi = state
    c = check_chart(v_o)
    R = geom.radius
    sp, cp, t = math.sin(psi), math.cos(psi), math.tan(v_o)
    return np.array([
        [0.0, R, 0.0],
        [-R, 0.0, 0.0],
        [-sp / c, -cp / c, 0.0],
        [-cp, sp, 0.0],
        [-sp * t, -cp * t, -1.0],
    ])


def montana_field(state, omega, geom: SphereGeometry) -> np.ndarray:
    """Time derivative of the contact state under body angular velocity ``omega``."""
    _, _, _, v_o, psi = state
    wx, wy, wz = omega
    c = check_chart(v_o)
    R = geom.radius
    sp, cp = math.sin(psi), math.cos(psi)
    a = sp * wx + cp * wy
    return np.array([
        R * wy,
        -R * wx,
        -a / c,
        -cp * wx + sp * wy,
        -a * math.tan(v_o) - wz,
    ])


def constrained_omega_x(wy, g_f, tol=GOAL_COS_TOL):
    if abs(math.cos(g_f)) < tol:
        raise GoalTangentSingularity(f"G_f = {g_f!r} is too close to +-pi/2")
    return -wy * math.tan(g_f)


def constrained_montana_field(state, wy, wz, g_f, geom: SphereGeometry) -> np.ndarray:
    """Montana field with ``w_x`` eliminated by the plane-heading constraint."""
    wx = constrained_omega_x(wy, g_f)
    return montana_field(state, (wx, wy, wz), geom)
