"""Spin-rolling of a sphere on a plane driven by virtual-surface curvature inputs."""

from .controllability import (closed_form_determinant, controllability_matrix, drift_divergence,
                              lie_bracket, model_fields, rank_without_beta)
from .darboux import (FrameAngles, RollingRateProfile, VirtualSurfaceInputs, darboux_field,
                      goal_angles, sphere_angular_velocity)
from .diffgeo import SurfaceChart, fundamental_forms, plane_chart, sphere_chart
from .errors import (ChartSingularity, DarbouxRollError, GoalTangentSingularity, ScenarioError,
                     StepTooLarge, ZeroBeta)
from .montana import ContactState, SphereGeometry, montana_field
from .sim import InputSchedule, Scenario, Trajectory, equivalence_run, integrate

__version__ = "0.1.0"

__all__ = [
    "ChartSingularity", "ContactState", "DarbouxRollError", "FrameAngles", "GoalTangentSingularity",
    "InputSchedule", "RollingRateProfile", "Scenario", "ScenarioError", "SphereGeometry",
    "StepTooLarge", "SurfaceChart", "Trajectory", "VirtualSurfaceInputs", "ZeroBeta",
    "closed_form_determinant", "controllability_matrix", "darboux_field", "drift_divergence",
    "equivalence_run", "fundamental_forms", "goal_angles", "integrate", "lie_bracket",
    "model_fields", "montana_field", "plane_chart", "rank_without_beta", "sphere_angular_velocity",
    "sphere_chart",
]
