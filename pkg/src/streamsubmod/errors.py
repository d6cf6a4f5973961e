"""Exception types shared across the package."""


class StreamSubmodError(Exception):
    """Base class for all package-specific errors."""


class ZeroProbabilityObservation(StreamSubmodError):
    """Conditioning on observations no support realization is consistent with."""


class StateSpaceTooLarge(StreamSubmodError):
    """Partial-realization enumeration exceeded the configured cap."""


class TooManyOrders(StreamSubmodError):
    """Exhaustive arrival-order search requested beyond the configured cap."""


class NonUniformCost(StreamSubmodError):
    """A uniform-cost-only operation was invoked on a nonuniform instance."""


class UnknownRealization(StreamSubmodError):
    """Table utility lookup for a realization outside the prior support."""


class InvalidAlphaBeta(StreamSubmodError):
    """Estimation bounds outside alpha in [0, 1] or beta in [1, 2]."""


class ProbabilityNotNormalized(StreamSubmodError):
    """Prior probabilities do not sum to one within tolerance."""


class SchemaError(StreamSubmodError):
    """Malformed instance or policy JSON; the message names the offending field."""


class CapExceeded(StreamSubmodError):
    """Instance generation would exceed a configured size cap."""
