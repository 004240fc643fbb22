"""
Lie-bracket controllability checks for the arc-length-domain model.

Vector fields are evaluated with either ``math`` (float64) or ``mpmath``
(extended precision). Brackets are built from central-difference
directional derivatives, so nesting them three deep stays far below the
rank tolerance when the extended-precision backend is used.

Bracket convention: ``[a, b](x) = Da(x) b(x) - Db(x) a(x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import mpmath
import numpy as np

from .darboux import FrameAngles, field_columns
from .montana import SphereGeometry, check_chart

RANK_TOL = 1e-9
DEFAULT_H = 1e-6
DEFAULT_DPS = 40
SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class VectorField5:
    """A vector field on the 5-dimensional contact state space.

    ``fn(x, m)`` returns a 5-list; ``m`` is the math backend (``math`` or
    ``mpmath``). The frame angles and geometry are frozen into ``fn``.
    """

    fn: Callable
    name: str = "field"

    def __call__(self, x, m=math):
        return self.fn(x, m)

    def at(self, state, dps=None) -> np.ndarray:
        """Evaluate at ``state``; ``dps`` selects mpmath with that many digits."""
        if dps is None:
            return np.array(self.fn([float(c) for c in state], math), dtype=float)
        with mpmath.workdps(dps):
            vals = self.fn([mpmath.mpf(float(c)) for c in state], mpmath)
            return np.array([float(v) for v in vals])


class ModelFields(NamedTuple):
    """Drift ``f``; inputs ``g1`` (gamma_s), ``g2`` (beta_s), ``g3`` (alpha_s)."""

    f: VectorField5
    g1: VectorField5
    g2: VectorField5
    g3: VectorField5


def model_fields(angles: FrameAngles, geom: SphereGeometry) -> ModelFields:
    total, varphi, R = angles.total, angles.varphi, geom.radius

    def column(k):
        def fn(x, m):
            if m is math:
                check_chart(x[3])
            return field_columns(x, total, varphi, R, m)[k]
        return fn

    return ModelFields(
        f=VectorField5(column(0), "f"),
        g1=VectorField5(column(3), "g1"),
        g2=VectorField5(column(2), "g2"),
        g3=VectorField5(column(1), "g3"),
    )


def _directional(a, x, w, h, m):
    """Central-difference estimate of Da(x) w."""
    xp = [xi + h * wi for xi, wi in zip(x, w)]
    xm = [xi - h * wi for xi, wi in zip(x, w)]
    ap, am = a(xp, m), a(xm, m)
    return [(p - q) / (2 * h) for p, q in zip(ap, am)]


def bracket(a: VectorField5, b: VectorField5, h=DEFAULT_H) -> VectorField5:
    """Lazy vector field ``[a, b]``; nest freely."""

    def fn(x, m):
        step = m.mpf(h) if m is mpmath else h
        da_b = _directional(a, x, b(x, m), step, m)
        db_a = _directional(b, x, a(x, m), step, m)
        return [p - q for p, q in zip(da_b, db_a)]

    return VectorField5(fn, f"[{a.name},{b.name}]")


def lie_bracket(a: VectorField5, b: VectorField5, at, h=DEFAULT_H, dps=DEFAULT_DPS) -> np.ndarray:
    """Evaluate ``[a, b]`` at a state; ``dps=None`` stays in float64."""
    check_chart(at[3])
    return bracket(a, b, h).at(at, dps=dps)


def jacobian(a: VectorField5, x, h=DEFAULT_H) -> np.ndarray:
    """Float64 central-difference Jacobian of ``a`` at ``x``."""
    x = [float(c) for c in x]
    J = np.empty((5, 5))
    for j in range(5):
        e = [0.0] * 5
        e[j] = 1.0
        J[:, j] = _directional(a, x, e, h, math)
    return J


def bracket_word(word, fields: ModelFields, h=DEFAULT_H) -> VectorField5:
    """Build a nested bracket from a word such as ``("f", ("f", "g3"))``."""
    if isinstance(word, str):
        return getattr(fields, word)
    left, right = word
    return bracket(bracket_word(left, fields, h), bracket_word(right, fields, h), h)


def word_name(word) -> str:
    if isinstance(word, str):
        return word
    return f"[{word_name(word[0])},{word_name(word[1])}]"


def closed_form_brackets(state, angles: FrameAngles, geom: SphereGeometry):
    """The two published bracket columns, labelled [f,g3] and [f,[f,g3]].

    Note: the second column coincides with ``[[f,g3],g3]``, not with
    ``[f,[f,g3]]``; see ``tests/test_controllability.py``.
    """
    _, _, _, v_o, psi = state
    c_v = check_chart(v_o)
    R = geom.radius
    s = math.sin(angles.total)
    sp, cp, tv = math.sin(psi), math.cos(psi), math.tan(v_o)
    f_g3 = np.array([0.0, 0.0, -s * (cp + sp) / (R * c_v), -s * (cp - sp) / R,
                     -tv * s * (cp + sp) / R])
    f_f_g3 = np.array([0.0, 0.0, s * (cp - sp) / (R * c_v), -s * (cp + sp) / R,
                       tv * s * (cp - sp) / R])
    return f_g3, f_f_g3


def closed_form_determinant(v_o, angles: FrameAngles, geom: SphereGeometry) -> float:
    """det[g1, g2, g3, [f,g3], [f,[f,g3]]] in closed form."""
    c_v = check_chart(v_o)
    t = angles.total
    return (-2.0 * math.sin(v_o) / c_v ** 2 * math.cos(angles.varphi) * math.sin(t) ** 3
            * (math.sin(t) + math.cos(t)) / geom.radius)


def numerical_rank(M, tol=RANK_TOL):
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    return int(np.sum(sv / sv[0] > tol)), sv


LARC_WORDS = ("g1", "g2", "g3", ("f", "g3"), ("f", ("f", "g3")))

# Bracket list for the model with beta_s removed, as published (duplicates kept).
REFERENCE_FILTRATION_NO_BETA = (
    "g1", "g3", ("g1", "g3"), ("f", "g3"), ("f", "g1"),
    ("f", ("g1", "g3")), ("f", ("f", "g3")), ("f", ("f", "g1")),
    ("g1", ("g1", "g3")), ("g1", ("f", "g3")), ("g1", ("f", "g1")),
    ("g3", ("g1", "g3")), ("g3", ("f", "g3")), ("g3", ("f", "g1")),
    ("f", ("f", ("g1", "g3"))), ("f", ("f", ("f", "g3"))), ("f", ("f", ("f", "g1"))),
    ("f", ("g1", ("g1", "g3"))), ("f", ("g1", ("f", "g3"))), ("f", ("g1", ("f", "g1"))),
    ("f", ("g3", ("g1", "g3"))), ("f", ("g3", ("f", "g3"))),
    ("f", ("g3", ("f", "g1"))), ("f", ("g3", ("f", "g1"))),
)


@dataclass(frozen=True)
class BracketReport:
    state: tuple
    angles: FrameAngles
    columns: tuple[str, ...]
    matrix: np.ndarray
    rank: int
    singular_values: np.ndarray
    det_numeric: float | None = None
    det_closed: float | None = None
    singular_factors: tuple[str, ...] = field(default_factory=tuple)

    @property
    def condition(self) -> float:
        sv = self.singular_values
        return float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf

    def to_dict(self):
        return {
            "state": [float(c) for c in self.state],
            "theta": self.angles.theta,
            "varphi": self.angles.varphi,
            "columns": list(self.columns),
            "rank": self.rank,
            "singular_values": [float(v) for v in self.singular_values],
            "condition": self.condition,
            "det_numeric": self.det_numeric,
            "det_closed": self.det_closed,
            "singular_factors": list(self.singular_factors),
        }


def span_report(words, state, angles, geom, h=DEFAULT_H, dps=DEFAULT_DPS) -> BracketReport:
    """Evaluate the fields named by ``words`` at ``state`` and measure their span."""
    check_chart(state[3])
    fields = model_fields(angles, geom)
    cols = [bracket_word(w, fields, h).at(state, dps=dps) for w in words]
    M = np.column_stack(cols)
    rank, sv = numerical_rank(M)
    det = float(np.linalg.det(M)) if M.shape == (5, 5) else None
    return BracketReport(tuple(state), angles, tuple(word_name(w) for w in words), M, rank, sv, det)


def controllability_matrix(state, angles: FrameAngles, geom: SphereGeometry,
                           h=DEFAULT_H, dps=DEFAULT_DPS) -> BracketReport:
    """Span of {g1, g2, g3, [f,g3], [f,[f,g3]]} with numeric and closed-form det."""
    rep = span_report(LARC_WORDS, state, angles, geom, h, dps)
    det_closed = closed_form_determinant(state[3], angles, geom)
    return BracketReport(rep.state, angles, rep.columns, rep.matrix, rep.rank,
                         rep.singular_values, rep.det_numeric, det_closed,
                         tuple(determinant_zero_factors(state[3], angles)))


def bracket_words(generators, depth):
    """All words [X,[Y,[...]]] over ``generators`` with up to ``depth`` brackets."""
    words = list(generators)
    level = [(a, b) for a, b in itertools.combinations(generators, 2)]
    for d in range(1, depth + 1):
        words.extend(level)
        if d < depth:
            level = [(g, w) for g in generators for w in level]
    return words


def rank_without_beta(state, angles: FrameAngles, geom: SphereGeometry, bracket_depth=3,
                      include_beta=False, h=DEFAULT_H, dps=DEFAULT_DPS) -> int:
    """Rank of the bracket filtration generated by f, g1, g3 (and g2 if asked)."""
    if bracket_depth < 1:
        raise ValueError("bracket_depth must be at least 1")
    gens = ("f", "g1", "g2", "g3") if include_beta else ("f", "g1", "g3")
    return span_report(bracket_words(gens, bracket_depth), state, angles, geom, h, dps).rank


def drift_divergence(state, angles: FrameAngles, geom: SphereGeometry, delta=1.0, h=DEFAULT_H):
    """Divergence of the time-domain drift ``delta f``: closed form and numeric."""
    _, _, _, v_o, psi = state
    check_chart(v_o)
    # sin + cos written as sqrt(2) sin(psi + pi/4) so psi = -pi/4 gives an exact zero
    closed = (delta * math.sin(angles.total) * math.sqrt(2.0) * math.sin(psi + math.pi / 4)
              * math.tan(v_o) / geom.radius)
    J = jacobian(model_fields(angles, geom).f, state, h)
    return {"closed_form": closed, "numeric": float(delta * np.trace(J))}


def determinant_zero_factors(v_o, angles: FrameAngles, tol=SINGULAR_TOL):
    t = angles.total
    factors = []
    if abs(math.sin(t)) < tol:
        factors.append("sin(theta+varphi)")
    if abs(math.sin(t) + math.cos(t)) < tol:
        factors.append("sin(theta+varphi)+cos(theta+varphi)")
    if abs(math.cos(angles.varphi)) < tol:
        factors.append("cos(varphi)")
    if abs(math.sin(v_o)) < tol:
        factors.append("sin(v_o)")
    return factors


def _near_multiple(x, period, tol):
    return abs(math.remainder(x, period)) < tol


def singularity_map(totals, v_os, varphi=0.0, radius=1.0, tol=SINGULAR_TOL, chart_tol=1e-6):
    """Classify grid cells (theta+varphi, v_o) by which determinant factor vanishes.

    ``listed`` flags the published singular set (theta+varphi a multiple of
    pi/2, varphi an odd multiple of pi/2, v_o at the poles); ``det_zero``
    flags actual zeros of the closed-form determinant. ``disagree`` marks
    cells where the two differ.
    """
    geom = SphereGeometry(radius)
    cells = []
    for i, t in enumerate(totals):
        for j, v in enumerate(v_os):
            angles = FrameAngles(theta=t - varphi, varphi=varphi)
            listed = (_near_multiple(t, math.pi / 2, tol)
                      or _near_multiple(varphi - math.pi / 2, math.pi, tol))
            cell = {"i": i, "j": j, "theta_plus_varphi": float(t), "v_o": float(v)}
            if abs(math.cos(v)) < chart_tol:
                cell.update(det_closed=None, factors=["chart:cos(v_o)"], chart_singular=True,
                            det_zero=True, listed=True, disagree=False)
            else:
                det = closed_form_determinant(v, angles, geom)
                factors = determinant_zero_factors(v, angles, tol)
                cell.update(det_closed=det, factors=factors, chart_singular=False,
                            det_zero=bool(factors), listed=listed,
                            disagree=bool(factors) != listed)
            cells.append(cell)
    return cells
