"""Exception hierarchy shared by every module of the package."""


class DarbouxRollError(ValueError):
    """Base class for all errors raised by darboux_roll."""


class DegenerateChart(DarbouxRollError):
    """The first fundamental form is (numerically) singular: EG - F^2 <= tol."""


class NonOrthogonalChart(DarbouxRollError):
    """Coordinate-curve formulas need F == 0 at the evaluation point."""


class ChartSingularity(DarbouxRollError):
    """The sphere chart degenerates near v_o = +-pi/2 (cos v_o -> 0)."""


class GoalTangentSingularity(DarbouxRollError):
    """tan(G_f) is unbounded because G_f is too close to +-pi/2."""


class ZeroBeta(DarbouxRollError):
    """The geodesic-torsion input beta_s is zero.

    Without beta_s the accessibility algebra only spans four of the five
    directions, and the goal-angle constraint divides by beta_s.
    """


class StepTooLarge(DarbouxRollError):
    """An integration step changed the state by more than the allowed amount."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ScenarioError(DarbouxRollError):
    """A scenario document failed validation."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)
