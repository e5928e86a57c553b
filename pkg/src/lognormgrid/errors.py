"""Exception hierarchy shared by all lognormgrid modules."""


class LognormGridError(Exception):
    """Base class for every error raised by this package."""


class InvalidParamsError(LognormGridError):
    """A physical parameter is non-positive, non-finite, or malformed."""


class UnknownNodeError(LognormGridError):
    """A node id does not exist in the graph."""


class EmptyGraphError(LognormGridError):
    """The operation needs at least one node."""


class DisconnectedError(LognormGridError):
    """The graph splits into more than one component."""

    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        super().__init__(
            f"graph has {len(self.components)} components: {self.components}"
        )


class BadAssignmentError(LognormGridError):
    """A role assignment does not cover the graph's nodes."""


class SingularScalingError(LognormGridError):
    """A capacitance or inductance is vanishingly small relative to its peers."""


class SingularSystemError(LognormGridError):
    """The closed-loop matrix cannot be solved for an equilibrium."""

    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")


class NonFiniteMatrixError(LognormGridError):
    """A matrix argument contains NaN or Inf entries."""


class EigenConvergenceError(LognormGridError):
    """An eigenvalue iteration failed to converge."""

    def __init__(self, message, iterations=0):
        self.iterations = iterations
        super().__init__(f"{message} (after {iterations} iterations)")


class CrossCheckError(LognormGridError):
    """Two independent computations of the same quantity disagree."""


class DegenerateNormError(LognormGridError):
    """Every trajectory sample had a vanishing deviation norm."""


class ScenarioError(LognormGridError):
    """A scenario document is malformed or references missing objects."""
