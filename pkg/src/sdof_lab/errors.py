"""Exception hierarchy shared by every sdof_lab module."""


class SdofLabError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SdofLabError, ValueError):
    """Malformed argument: non-finite entries, shape mismatch, bad ranges."""


class WrongRegimeError(InvalidInputError):
    """An operation was called for an (N, K) pair outside its regime."""


class InfeasibleDesignError(SdofLabError):
    """A precoder construction cannot satisfy its dimension inequality."""


class SingularChannelError(SdofLabError):
    """A channel matrix that must be invertible (or full rank) is not."""


class DegenerateDistributionError(SdofLabError):
    """Channel resampling did not produce a valid draw within the bound."""


class PowerTooLowError(SdofLabError):
    """The power is too small for a PAM constellation with Q >= 1."""


class DeskScaleLimitError(SdofLabError):
    """A brute-force search would exceed the hypothesis budget."""


class NumericalConditioningError(SdofLabError):
    """A covariance matrix is not positive definite even after jitter."""


class DesignVerificationError(SdofLabError):
    """A freshly synthesized design failed its own certification."""
