"""Exception hierarchy shared by the solver modules."""


class BarogalerkinError(Exception):
    """Base class for all solver errors."""


class ConfigError(BarogalerkinError, ValueError):
    """Invalid parameters or configuration file."""


class InsufficientResolution(BarogalerkinError, ValueError):
    """Quadrature grid too coarse for the requested truncation."""


class InvalidInitialData(BarogalerkinError, ValueError):
    """Initial data violates the admissibility assumptions."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid initial data: {msg}")


class SolverError(BarogalerkinError):
    """Base class for failures raised while integrating in time."""


class VacuumApproach(SolverError):
    """Specific volume dropped below the vacuum-detection floor."""

    def __init__(self, xi_value, xi_floor, t=None):
        self.xi_value = float(xi_value)
        self.xi_floor = float(xi_floor)
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(
            f"specific volume {self.xi_value:.3e} below floor {self.xi_floor:.1e}{where}"
        )


class StiffnessFailure(SolverError):
    """Boundary ODE sub-stepping could not meet its tolerance."""


class StepSizeUnderflow(SolverError):
    """Adaptive step size fell below the minimum admissible value."""


class NonMonotoneMap(SolverError):
    """Eulerian position map r(x) failed to be strictly increasing."""


class MonitorViolation(BarogalerkinError):
    """A hard runtime monitor failed.

    Attributes
    ----------
    name : str
        Name of the violated invariant.
    magnitude : float
        Measured violation (residual or margin).
    t : float
        Time at which the violation was observed.
    """

    def __init__(self, name, magnitude, t, trajectory=None):
        self.name = name
        self.magnitude = float(magnitude)
        self.t = float(t)
        self.trajectory = trajectory
        super().__init__(f"monitor '{name}' violated at t={t:.6g} (magnitude {magnitude:.3e})")
