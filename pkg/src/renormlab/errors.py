"""Domain-error hierarchy.

Everything that can go wrong for dynamical reasons (as opposed to caller
bugs) derives from RenormError, so the CLI can map the whole family to
exit code 1.
"""


class RenormError(Exception):
    """Base class for domain errors."""


class EscapeError(RenormError):
    """An orbit left the escape region at working precision."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoSignChangeError(RenormError):
    """Bisection was asked for a root the bracket does not contain."""


class BisectionBudgetError(RenormError):
    """Bisection exceeded its iteration cap without converging."""


class NoFixedPointError(RenormError):
    """No fixed point of the requested kind on the real trace."""


class NotRenormalizableError(RenormError):
    """detect() could not certify the requested period."""


class DegenerateNormalizationError(RenormError):
    """The z^d coefficient of a pre-renormalization vanished."""


class InadmissibleWordError(RenormError):
    """An itinerary fails kneading admissibility."""


class AmbiguousItineraryError(RenormError):
    """More than one orbit point fell inside the zero tolerance."""


class ItineraryMismatchError(RenormError):
    """A located root realizes a different itinerary than requested."""


class WindowCollapseError(RenormError):
    """A tuning window shrank below the depth tolerance."""


class CombinatoricsDivergenceError(RenormError):
    """Two cascades that must share combinatorics stopped agreeing."""


class NestScopeError(RenormError):
    """Principal-nest machinery was given a period-2 (doubling) map."""


class NestError(RenormError):
    """Nest construction failed (no return, nesting violation)."""


class PullbackError(RenormError):
    """A transition map was requested without the pullback relation."""
