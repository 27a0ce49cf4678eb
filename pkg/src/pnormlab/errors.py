"""Exception types shared across the package.

The CLI maps these onto its exit-code contract, so the hierarchy matters:
``NumericsError`` subclasses signal that a computation went numerically
wrong (exit 3), ``DegenerateNormingSet`` signals a continuum of norming
directions (exit 4), ``InvalidInput`` a semantically bad input (exit 5)
and ``MaxStepsExceeded`` an exhausted iteration budget (exit 6).
"""


class PNormLabError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteInput(PNormLabError):
    """A vector or matrix contains NaN or infinite entries."""


class ExponentOutOfRange(PNormLabError):
    """The exponent p is outside the range required by an operation."""


class DimensionTooLarge(PNormLabError):
    """A brute-force oracle was asked for more dimensions than it supports."""


class ZeroVector(PNormLabError):
    """A nonzero vector was required."""


class OperatorNotUnitNorm(PNormLabError):
    """An operation requiring a pre-normalized operator detected ||S|| != 1."""


class CountTooSmall(PNormLabError):
    """A combinatorial family needs at least two sets."""


class PreconditionViolated(PNormLabError):
    """A documented precondition of an operation does not hold."""


class ParamInvariantViolated(PNormLabError):
    """Modification parameters violate their invariants."""


class EmptyNormingSet(PNormLabError):
    """An operation requires at least one norming direction."""


class FullSpan(PNormLabError):
    """The norming directions already span the whole source space."""


class TruncationTooSmall(PNormLabError):
    """A truncated representation is too small to be meaningful."""


class NotPSD(PNormLabError):
    """A matrix expected to be symmetric positive semidefinite is not."""


class InvalidInput(PNormLabError):
    """An input file or operator violates a semantic requirement."""


class NumericsError(PNormLabError):
    """Base class for numerical failures."""


class MonotoneAscentError(NumericsError):
    """The power iteration lost monotonicity beyond tolerance."""


class BisectionFailure(NumericsError):
    """A bracketing or bisection procedure failed to locate its target."""


class AlphaCollapse(NumericsError):
    """The tail coefficient underflowed during a build (eps too small)."""


class DegenerateDelta(NumericsError):
    """The maximal modification strength collapsed to zero at p = 3."""


class EtaSearchExhausted(NumericsError):
    """The gate-selection sweep failed to shrink the column error."""


class DegenerateNormingSet(PNormLabError):
    """More norming clusters than the cap: the set is a continuum."""

    def __init__(self, message, clusters=None):
        super().__init__(message)
        self.clusters = clusters


class PostconditionFailed(NumericsError):
    """A paper-mandated postcondition of the modification step failed.

    ``code`` is one of "a" (old member persistence), "b" (new independent
    direction), "c" (mirror symmetry), "d" (span dimension jump).
    """

    def __init__(self, code, message, record=None, details=None):
        super().__init__(f"postcondition ({code}): {message}")
        self.code = code
        self.record = record
        self.details = details or {}


class MaxStepsExceeded(PNormLabError):
    """The construction loop hit its hard step bound."""
