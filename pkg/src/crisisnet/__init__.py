"""Crisis-communication analytics for archived geotagged tweets."""

from crisisnet.errors import (
    ConfigError,
    ContractError,
    CrisisNetError,
    DivergenceError,
    LdaStateError,
    NumericalError,
    UnseenTransitionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "CrisisNetError",
    "DivergenceError",
    "LdaStateError",
    "NumericalError",
    "UnseenTransitionError",
]
