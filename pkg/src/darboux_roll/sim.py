"""
Fixed-step RK4 integration of the contact kinematics and scripted studies.

Three models are available:

``darboux-s``
    arc-length-domain field, independent variable ``s``;
``darboux-t``
    the same field scaled by the rolling rate ``delta(t)``;
``montana-t``
    time-domain Montana equations fed either with a fixed body angular
    velocity or with the angular velocity mapped from the virtual-surface
    inputs.

Time-domain models carry the arc length as a sixth state so that
arc-length-indexed input tables work in both domains.
"""

from __future__ import annotations

import bisect
import functools
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .darboux import (FrameAngles, RollingRateProfile, VirtualSurfaceInputs, darboux_field,
                      goal_angles, induced_relative_curvature, sphere_angular_velocity)
from .errors import ChartSingularity, ScenarioError, StepTooLarge, ZeroBeta
from .montana import ContactState, SphereGeometry, check_latitude, montana_field, wrap_angle

MODELS = ("darboux-s", "darboux-t", "montana-t")
MAX_STEP_CHANGE = 0.5
HEADING_SPEED_TOL = 1e-12


@dataclass(frozen=True)
class InputSchedule:
    """Piecewise-constant inputs over arc length.

    ``breaks[k]`` is the arc length where ``values[k]`` takes over; the first
    break must be 0.
    """

    breaks: tuple[float, ...] = (0.0,)
    values: tuple[VirtualSurfaceInputs, ...] = (VirtualSurfaceInputs(0.0, 0.0, 0.0),)

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(VirtualSurfaceInputs(*map(float, v))
                                                 for v in self.values))
        if len(self.breaks) != len(self.values) or not self.breaks:
            raise ValueError("breaks and values must have equal, non-zero length")
        if self.breaks[0] != 0.0 or any(b >= a for b, a in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must start at 0 and be strictly increasing")

    @classmethod
    def constant(cls, alpha_s=0.0, beta_s=0.0, gamma_s=0.0):
        return cls((0.0,), (VirtualSurfaceInputs(float(alpha_s), float(beta_s), float(gamma_s)),))

    def __call__(self, s) -> VirtualSurfaceInputs:
        if len(self.values) == 1:
            return self.values[0]
        return self.values[max(bisect.bisect_right(self.breaks, s) - 1, 0)]


@functools.lru_cache(maxsize=256)
def _goal_angles_cached(v, g_f, geom, full_circle):
    return goal_angles(v, g_f, geom, full_circle)


@dataclass(frozen=True)
class Scenario:
    model: str
    initial: ContactState = ContactState(0.0, 0.0, 0.0, 0.0, 0.0)
    inputs: InputSchedule = field(default_factory=InputSchedule)
    g_f: float | None = None
    angles: FrameAngles | None = None
    rate: RollingRateProfile = field(default_factory=RollingRateProfile)
    geom: SphereGeometry = field(default_factory=SphereGeometry)
    span: float = 1.0
    step: float = 1e-3
    drift_only: bool = False
    omega: tuple[float, float, float] | None = None
    full_circle: bool = False

    def validate(self):
        if self.model not in MODELS:
            raise ScenarioError(f"unknown model {self.model!r}; expected one of {MODELS}", ["model"])
        if not self.step > 0:
            raise ScenarioError("step must be positive", ["step"])
        if not self.span >= 0:
            raise ScenarioError("span must be non-negative", ["span"])
        if len(self.initial) != 5 or not all(math.isfinite(c) for c in self.initial):
            raise ScenarioError("initial state needs five finite coordinates", ["initial"])
        if not abs(self.initial.v_o) < 0.5 * math.pi or abs(math.cos(self.initial.v_o)) < 1e-6:
            raise ScenarioError("initial v_o is at the chart singularity", ["initial"])
        if self.model == "montana-t" and self.omega is not None:
            return
        if self.angles is None:
            if self.g_f is None:
                raise ScenarioError("either fixed angles or a goal heading g_f is required",
                                    ["angles", "g_f"])
            if any(v.beta_s == 0 for v in self.inputs.values):
                raise ZeroBeta("beta_s must be nonzero in every input segment: the heading "
                               "constraint divides by it and without it the model is not "
                               "controllable (bracket rank 4 < 5)")
        elif not self.drift_only and any(v.beta_s == 0 for v in self.inputs.values):
            raise ZeroBeta("beta_s = 0 with fixed angles requires drift_only = true")

    def angles_at(self, s) -> FrameAngles:
        if self.angles is not None:
            return self.angles
        v = self.inputs.values[0] if len(self.inputs.values) == 1 else self.inputs(s)
        return _goal_angles_cached(v, self.g_f, self.geom, self.full_circle)

    def to_dict(self):
        return {
            "model": self.model,
            "initial": list(self.initial),
            "input_breaks": list(self.inputs.breaks),
            "input_values": [list(v) for v in self.inputs.values],
            "g_f": self.g_f,
            "angles": list(self.angles) if self.angles is not None else None,
            "rate": {"kind": self.rate.kind, "delta_max": self.rate.delta_max,
                     "duration": self.rate.duration},
            "radius": self.geom.radius,
            "span": self.span,
            "step": self.step,
            "drift_only": self.drift_only,
            "omega": list(self.omega) if self.omega is not None else None,
            "full_circle": self.full_circle,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples. ``states`` has u_o and psi wrapped; ``raw`` does not."""

    s: np.ndarray
    t: np.ndarray
    states: np.ndarray
    raw: np.ndarray
    inputs: np.ndarray
    angles: np.ndarray
    delta: np.ndarray
    heading: np.ndarray
    model: str
    step: float
    scenario_hash: str
    error: str | None = None

    def __len__(self):
        return len(self.s)

    @property
    def final_state(self) -> np.ndarray:
        return self.raw[-1]

    @property
    def ok(self) -> bool:
        return self.error is None

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "s": self.s, "t": self.t,
            "u_s": self.states[:, 0], "v_s": self.states[:, 1], "u_o": self.states[:, 2],
            "v_o": self.states[:, 3], "psi": self.states[:, 4],
            "theta": self.angles[:, 0], "varphi": self.angles[:, 1], "delta": self.delta,
            "alpha_s": self.inputs[:, 0], "beta_s": self.inputs[:, 1], "gamma_s": self.inputs[:, 2],
            "heading": self.heading,
        }


def rk4_step(fun: Callable, t, y: np.ndarray, h, k1=None) -> np.ndarray:
    if k1 is None:
        k1 = fun(t, y)
    k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fun(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _grid(span, step):
    n = math.ceil(span / step - 1e-9) if span > 0 else 0
    return [min(k * step, span) for k in range(n + 1)]


OmegaMap = Callable


class _Model:
    """Right-hand side plus per-sample diagnostics for one scenario."""

    def __init__(self, sc: Scenario, omega_map: OmegaMap = sphere_angular_velocity):
        self.sc = sc
        self.omega_map = omega_map
        self.time_domain = sc.model != "darboux-s"
        self._fixed = None
        if not (sc.model == "montana-t" and sc.omega is not None) and len(sc.inputs.values) == 1:
            self._fixed = (sc.inputs.values[0], sc.angles_at(0.0))

    def controls(self, s):
        """(inputs, angles) at arc length ``s``."""
        if self._fixed is not None:
            return self._fixed
        return self.sc.inputs(s), self.sc.angles_at(s)

    def rhs(self, tau, y):
        sc = self.sc
        if sc.model == "darboux-s":
            return darboux_field(y, *self.controls(tau), sc.geom)
        s = y[5]
        delta = sc.rate(tau)
        x = y[:5]
        if sc.model == "darboux-t":
            dx = delta * darboux_field(x, *self.controls(s), sc.geom)
        else:
            dx = montana_field(x, self.omega(x, s, delta), sc.geom)
        out = np.empty(6)
        out[:5] = dx
        out[5] = delta
        return out

    def omega(self, x, s, delta):
        sc = self.sc
        if sc.omega is not None:
            return sc.omega
        v, angles = self.controls(s)
        return self.omega_map(induced_relative_curvature(x, v, angles, sc.geom), angles, delta)

    def sample(self, tau, y):
        """(s, t, inputs, angles, delta) at a recorded point."""
        sc = self.sc
        s = y[5] if self.time_domain else tau
        if sc.model == "darboux-s":
            delta = sc.rate.delta_max if sc.rate.kind == "constant" else math.nan
            t = s / delta if delta and math.isfinite(delta) and delta > 0 else math.nan
        else:
            delta, t = sc.rate(tau), tau
        if sc.model == "montana-t" and sc.omega is not None:
            inputs = (math.nan,) * 3
            angles = (math.nan,) * 2
        else:
            inputs, angles = self.controls(s)
        return s, t, inputs, angles, delta


def integrate(scenario: Scenario, omega_map: OmegaMap = sphere_angular_velocity) -> Trajectory:
    """Integrate a scenario with fixed-step RK4 and record every step.

    A chart singularity ends the run early; the partial trajectory is
    returned with ``error`` set. A step that moves any coordinate by more
    than ``MAX_STEP_CHANGE`` raises :class:`StepTooLarge`.
    """
    scenario.validate()
    model = _Model(scenario, omega_map)
    y = np.array(scenario.initial, dtype=float)
    if model.time_domain:
        y = np.append(y, 0.0)
    grid = _grid(scenario.span, scenario.step)
    rows, error = [], None

    def record(tau, y):
        d = model.rhs(tau, y)
        s, t, inputs, angles, delta = model.sample(tau, y)
        du, dv = d[0], d[1]
        heading = math.atan2(dv, du) if math.hypot(du, dv) > HEADING_SPEED_TOL else math.nan
        rows.append((s, t, y[:5].copy(), tuple(inputs), tuple(angles), delta, heading))
        return d

    try:
        k1 = record(grid[0], y)
        for tau0, tau1 in zip(grid, grid[1:]):
            y_new = rk4_step(model.rhs, tau0, y, tau1 - tau0, k1)
            check_latitude(y_new[3])
            change = float(np.max(np.abs(y_new[:5] - y[:5])))
            if not change <= MAX_STEP_CHANGE:
                partial = _assemble(rows, scenario, "StepTooLarge")
                raise StepTooLarge(f"step at {tau0:.6g} changed the state by {change:.3g} "
                                   f"> {MAX_STEP_CHANGE}", partial)
            y = y_new
            k1 = record(tau1, y)
    except ChartSingularity as exc:
        error = f"ChartSingularity: {exc}"
    return _assemble(rows, scenario, error)


def _assemble(rows, scenario, error) -> Trajectory:
    def arr(k, width=None):
        a = np.array([r[k] for r in rows], dtype=float)
        if width is not None:
            a = a.reshape(len(rows), width)
        a.setflags(write=False)
        return a

    raw = arr(2, 5)
    states = raw.copy()
    states[:, 2] = [wrap_angle(a) for a in raw[:, 2]]
    states[:, 4] = [wrap_angle(a) for a in raw[:, 4]]
    states.setflags(write=False)
    return Trajectory(
        s=arr(0), t=arr(1), states=states, raw=raw, inputs=arr(3, 3), angles=arr(4, 2),
        delta=arr(5), heading=arr(6), model=scenario.model, step=scenario.step,
        scenario_hash=scenario.digest(), error=error,
    )


def angular_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Largest componentwise difference between two raw state arrays."""
    n = min(len(a), len(b))
    if n == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(a[:n]) - np.asarray(b[:n]))))


@dataclass(frozen=True)
class EquivalenceResult:
    traj_darboux: Trajectory
    traj_montana_mapped: Trajectory
    max_gap: float


def equivalence_run(scenario: Scenario,
                    omega_map: OmegaMap = sphere_angular_velocity) -> EquivalenceResult:
    """Integrate the arc-length model and the mapped Montana model side by side.

    With a constant rolling rate ``c`` the arc-length model runs over ``s``
    and the Montana model over ``t = s / c`` with step ``step / c``, so the
    samples coincide. Otherwise both run in the time domain.
    """
    rate = scenario.rate
    if rate.kind == "constant":
        if not rate.delta_max > 0:
            raise ScenarioError("equivalence needs a positive rolling rate", ["rate"])
        c = rate.delta_max
        darb = Scenario(**{**scenario.__dict__, "model": "darboux-s"})
        mont = Scenario(**{**scenario.__dict__, "model": "montana-t", "omega": None,
                           "span": scenario.span / c, "step": scenario.step / c})
    else:
        darb = Scenario(**{**scenario.__dict__, "model": "darboux-t"})
        mont = Scenario(**{**scenario.__dict__, "model": "montana-t", "omega": None})
    td = integrate(darb)
    tm = integrate(mont, omega_map)
    return EquivalenceResult(td, tm, angular_gap(td.raw, tm.raw))


# ---------------------------------------------------------------------------
# scripted studies

FIG4_TRIPLES = ((0.1, 1.0, 0.0), (0.1, 0.5, 0.2), (0.0, 2.0, -0.3))
FIG5_ANGLES = FrameAngles(theta=3 * math.pi / 4, varphi=0.0)


def fig4_study(geom: SphereGeometry, g_f, input_triples: Sequence, span=5.0, step=1e-3,
               initial=ContactState(0.0, 0.0, 0.0, 0.0, 0.0)) -> list[Trajectory]:
    """One arc-length run per input triple, all steered toward heading ``g_f``."""
    out = []
    for triple in input_triples:
        sc = Scenario("darboux-s", initial=initial, inputs=InputSchedule.constant(*triple),
                      g_f=g_f, geom=geom, span=span, step=step)
        out.append(integrate(sc))
    return out


def fig4_report(trajectories: Sequence[Trajectory], g_f) -> dict:
    heading_err = max(
        (float(np.nanmax(np.abs([math.remainder(h - g_f, 2 * math.pi) for h in tr.heading])))
         for tr in trajectories), default=0.0)
    plane_gap = 0.0
    sphere_dist = {}
    for (i, a), (j, b) in ((p, q) for p in enumerate(trajectories)
                           for q in enumerate(trajectories) if p[0] < q[0]):
        n = min(len(a), len(b))
        sphere_dist[f"{i}-{j}"] = float(np.max(np.abs(a.raw[:n, 2:] - b.raw[:n, 2:])))
    for tr in trajectories:
        # straight-line deviation of the plane path from the goal ray
        d = tr.raw[:, :2] - tr.raw[0, :2]
        plane_gap = max(plane_gap, float(np.max(np.abs(-d[:, 0] * math.sin(g_f)
                                                       + d[:, 1] * math.cos(g_f)))))
    return {"g_f": g_f, "max_heading_error": heading_err, "max_path_offset": plane_gap,
            "sphere_sup_distance": sphere_dist}


def fig5_study(geom: SphereGeometry = SphereGeometry(), span=20.0, step=1e-3,
               initial=ContactState(0.0, 0.0, 0.0, 0.0, 0.0)):
    """Drift-only run at theta + varphi = 3 pi / 4 and its periodicity report."""
    sc = Scenario("darboux-s", initial=initial, angles=FIG5_ANGLES, geom=geom, span=span,
                  step=step, drift_only=True)
    traj = integrate(sc)
    return traj, periodicity_report(traj)


def crossings(x: np.ndarray, y: np.ndarray, level: float, direction: int = 0) -> np.ndarray:
    """Linearly interpolated abscissae where ``y`` crosses ``level``."""
    z = np.asarray(y) - level
    idx = np.nonzero((z[:-1] < 0) & (z[1:] >= 0) if direction > 0 else
                     (z[:-1] > 0) & (z[1:] <= 0) if direction < 0 else
                     np.signbit(z[:-1]) != np.signbit(z[1:]))[0]
    return x[idx] - z[idx] * (x[idx + 1] - x[idx]) / (z[idx + 1] - z[idx])


def _period_stats(x, y):
    level = 0.5 * (np.max(y) + np.min(y)) if len(y) else 0.0
    up = crossings(x, y, level, +1)
    periods = np.diff(up)
    half = np.diff(crossings(x, y, level))
    stats = {"level": float(level), "n_periods": int(len(periods))}
    if len(periods):
        mean = float(np.mean(periods))
        stats.update(period=mean, period_spread=float(np.ptp(periods) / mean))
    if len(half):
        stats.update(half_spacing_spread=float(np.ptp(half) / np.mean(half)))
    return stats


def autocorrelation_peak(x, y, min_lag_fraction=0.05):
    """Lag (in units of ``x``) of the highest autocorrelation peak off zero lag."""
    y = np.asarray(y) - np.mean(y)
    n = len(y)
    if n < 4 or not np.any(y):
        return math.nan
    ac = np.correlate(y, y, mode="full")[n - 1:] / np.arange(n, 0, -1)
    lo = max(1, int(min_lag_fraction * n))
    hi = n // 2
    if hi <= lo:
        return math.nan
    k = lo + int(np.argmax(ac[lo:hi]))
    return float(x[k] - x[0])


def periodicity_report(traj: Trajectory) -> dict:
    """Period of psi(s) and of the u_o rate from same-direction level crossings."""
    if len(traj) < 3:
        return {"samples": len(traj)}
    x = traj.s
    psi = traj.raw[:, 4]
    du_o = np.gradient(traj.raw[:, 2], x)
    finite = traj.heading[np.isfinite(traj.heading)]
    return {
        "samples": len(traj),
        "psi": _period_stats(x, psi),
        "u_o_rate": _period_stats(x, du_o),
        "psi_autocorrelation_lag": autocorrelation_peak(x, psi),
        "heading_mean": float(np.mean(finite)) if len(finite) else math.nan,
        "heading_max_deviation": float(np.max(np.abs(finite - math.pi / 4))) if len(finite) else math.nan,
    }
