"""Exception hierarchy shared by every module."""


class RoughTransportError(Exception):
    """Base class for all library errors."""


class ParseError(RoughTransportError, ValueError):
    """An expression or scenario file could not be parsed."""


class OutsideDomain(RoughTransportError, ValueError):
    """A point lies outside the domain where an object is defined."""


class PrescribedMissing(RoughTransportError):
    """An on-curve representative was requested but none was prescribed."""


class QuadratureFailure(RoughTransportError):
    """Adaptive quadrature exhausted its panel budget."""


class NotApplicable(RoughTransportError):
    """The hypotheses of a solution concept do not hold."""


class StepFailure(RoughTransportError):
    """An ODE integrator could not meet its tolerance."""


class ForwardUniquenessViolated(RoughTransportError):
    """The characteristic system is not forward unique."""


class NotAutonomous(RoughTransportError):
    """A time-independent coefficient was required."""


class ConditionViolated(RoughTransportError):
    """A numbered structural condition failed.

    :param condition: short identifier such as ``"v"``.
    """

    def __init__(self, condition, message=""):
        self.condition = condition
        super().__init__(f"condition ({condition}) violated: {message}")


class ProductUndefined(RoughTransportError):
    """A distributional product is not defined for the given inputs."""


class NotSolutionPair(ProductUndefined):
    """The second factor is not the solution generated by the coefficient."""


class NoConvergence(RoughTransportError):
    """A regularized family failed its Cauchy test along the ladder."""


class BoundsViolated(RoughTransportError, ValueError):
    """Sampled coefficient values leave the declared bounds."""


class TailBoundFailure(RoughTransportError):
    """A truncated integral cannot be certified inside the window."""


class NotDifferentiable(RoughTransportError):
    """A jump curve crosses a window where a derivative is needed."""


class MissingMetadata(RoughTransportError):
    """A verdict needs a regularity declaration that is absent."""


class AssertionFailure(RoughTransportError):
    """At least one scenario assertion failed."""
