class CrisisNetError(Exception):
    """Base class for all errors raised by crisisnet."""


class ConfigError(CrisisNetError, ValueError):
    """Invalid configuration or input file (fatal, reported as a validation error)."""


class ContractError(CrisisNetError, ValueError):
    """An argument violates a documented precondition."""


class UnseenTransitionError(CrisisNetError, KeyError):
    """A bigram transition with zero count was requested; no smoothing is applied."""

    def __str__(self):
        return Exception.__str__(self)


class DivergenceError(CrisisNetError, ValueError):
    """The attenuated path series does not converge (a * spectral_radius >= 1)."""


class NumericalError(CrisisNetError, ArithmeticError):
    """A linear system could not be solved reliably."""


class LdaStateError(CrisisNetError, RuntimeError):
    """Gibbs sampler counts are inconsistent."""
