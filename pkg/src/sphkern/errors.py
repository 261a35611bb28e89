"""Exception hierarchy shared by all modules.

Every numerical failure derives from :class:`NumericalError` so that the
command-line front end can map it to a single exit code.
"""


class SphkernError(Exception):
    """Base class for library errors."""


class NumericalError(SphkernError, ArithmeticError):
    """A computation could not deliver a result at the requested accuracy."""


class PoleError(NumericalError, ValueError):
    """Argument at a pole of a meromorphic function."""


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of the function."""


class DivergenceError(NumericalError):
    """A series fails its convergence preconditions."""


class NonConvergenceError(NumericalError):
    """A convergent series or refinement did not meet tolerance within budget."""


class QuadratureError(NonConvergenceError):
    """Panel refinement failed to stabilise."""


class KernelParameterError(SphkernError, ValueError):
    """Kernel parameters violate a family invariant."""


class DimensionMismatchError(SphkernError, ValueError):
    """Objects living on spheres of different dimension were combined."""
