"""Exception hierarchy shared by every module of the package."""


class RenewalError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RenewalError, ValueError):
    """Invalid distribution or risk-model parameters."""


class PoleEvaluation(RenewalError):
    """The moment generating function was evaluated at (or next to) a pole."""


class OutOfDomain(RenewalError):
    """The family has no analytic extension at the requested point."""


class BoundaryZero(RenewalError):
    """A zero of g - 1 sits on the contour, even after nudging."""


class QuadratureDivergence(RenewalError):
    """Adaptive contour quadrature exceeded its node budget."""


class MultiplicityUnresolved(RenewalError):
    """A tiny box still holds several zeros that Newton cannot merge."""


class NegativeLoading(RenewalError):
    """The safety loading is not positive, so ruin is certain."""


class NoFiniteRoot(RenewalError):
    """The Lundberg equation has no root below the overflow guard."""


class NotSimple(RenewalError):
    """A closed-form residue was requested at a multiple root."""


class DegenerateFactor(RenewalError):
    """The extra factor of an integrand vanishes or blows up at the root."""


class NoConvergence(RenewalError):
    """Trapezoidal residue quadrature did not settle within the node budget."""


class PoleTooClose(RenewalError):
    """Two singularities are too close to isolate one of them on a circle."""


class MassAtZeroOne(RenewalError):
    """The inter-renewal law puts (almost) all of its mass at zero."""


class DegenerateDirection(RenewalError):
    """Two candidate exponents of the bivariate expansion coincide."""
