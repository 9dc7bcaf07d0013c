"""Exception hierarchy shared across the package."""


class CornerFlowError(Exception):
    """Base class for all package errors."""


class EosDomainError(CornerFlowError):
    """Specific volume outside the validity range of the pressure law."""


class ConvexityError(CornerFlowError):
    """p'(tau) >= 0 or p''(tau) <= 0 where the construction needs strict signs."""


class SingularEosError(CornerFlowError):
    """2 p' + tau p'' vanished; kappa(tau) has a pole here."""


class HypothesisError(CornerFlowError):
    """An admissibility hypothesis (m > 0 or the angle window) fails."""


class ResolutionError(CornerFlowError):
    """Sampling too coarse to isolate features (adjacent extrema)."""


class ParameterError(CornerFlowError):
    """Constructor or config parameter outside its allowed range."""


class SubsonicError(CornerFlowError):
    """Inflow is not pseudo-supersonic (u0 <= c0)."""


class RangeError(CornerFlowError):
    """Query point outside a wave fan or solved region."""


class MonotonicityError(CornerFlowError):
    """A map that must be strictly monotone is not, on the queried bracket."""


class VacuumEndError(CornerFlowError):
    """A curve reached the vacuum end before the requested parameter."""

    def __init__(self, message, tau_star=None):
        super().__init__(message)
        self.tau_star = tau_star


class SignConditionError(CornerFlowError):
    """Boundary-data sign conditions violated (EOS/parameters out of regime)."""


class HyperbolicityError(CornerFlowError):
    """q <= c at a node iterate; pseudo-Mach number dropped to/below 1."""


class ConvergenceError(CornerFlowError):
    """Fixed-point node solve did not converge within max_iter."""


class PhiPathError(CornerFlowError):
    """Potential integrated along the two characteristic paths disagrees."""


class DegenerateGeometryError(CornerFlowError):
    """Characteristic directions nearly parallel; node position ill-posed."""


class HullError(CornerFlowError):
    """Probe lattice does not fit inside the solved grid hull."""


class FieldDegeneracyError(CornerFlowError):
    """sin 2*delta vanished on the synthetic probe set."""


class ConfigError(CornerFlowError):
    """Scenario configuration failed to parse or validate."""
