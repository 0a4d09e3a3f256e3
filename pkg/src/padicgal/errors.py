"""Domain errors shared across the package.

Every error corresponds to a contract violation or a precision obstruction;
none of them is recoverable by retrying with the same inputs.
"""


class PadicgalError(Exception):
    """Base class for all domain errors."""


class NotInvertible(PadicgalError):
    """Matrix or ring element has determinant/leading unit divisible by p."""


class PrecisionInsufficient(PadicgalError):
    """An elementary divisor hit the working-precision cap and the caller
    asked for certified (exact) rank data."""


class TraceNonzero(PadicgalError):
    """Additive Hilbert-90 obstruction: the relative trace of the target is
    nonzero, so sigma(b) - b = c has no solution."""


class ExponentOverflow(PadicgalError):
    """A valuation exponent left the configured integer budget."""


class MalformedSystem(PadicgalError):
    """Semilinear system violates its shape constraints (singular B, or a
    forbidden low-degree term in f)."""


class NotAUnit(PadicgalError):
    """Twisted-unit equation got a right-hand side with nonzero valuation."""


class ConstantTermNonzero(PadicgalError):
    """Series composition needs inner components without constant term."""


class LinearPartSingular(PadicgalError):
    """Series reversion needs an invertible linear part."""


class IntegralityViolation(PadicgalError):
    """A formal-group coefficient kept a denominator after reduction."""


class PrecisionBudgetExceeded(PadicgalError):
    """The denominator budget cannot certify integrality at the requested
    precision."""


class NotFixedPoint(PadicgalError):
    """embed_point output failed the twisted-Frobenius fixedness residual."""


class IncompatibleAction(PadicgalError):
    """Group element and induced element disagree on field data."""


class IncompatibleTower(PadicgalError):
    """Transition map got descriptors that do not form a tower."""


class NotInvariant(PadicgalError):
    """invariants_in_image precheck failed: input not Galois-fixed."""


class ModelTooLarge(PadicgalError):
    """Finite enumeration model exceeds the configured cardinality bound."""
