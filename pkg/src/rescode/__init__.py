"""Bounds and simulations for encoding classical messages into quantum resources.

Modules: ``qcore`` (states, channels, I/O), ``entropy`` (one-shot and
asymptotic divergences), ``twirl`` (group twirls), ``schurweyl`` (symmetric
group combinatorics and the collective twirl), ``bounds`` and ``codesim``.
"""

from .errors import (
    BracketError,
    ClosureError,
    InvalidChannelError,
    InvalidStateError,
    MonotonicityError,
    RescodeError,
    SizeGuardError,
    SupportError,
)
from .qcore import QuantumChannel, partial_trace, tensor_product
from .entropy import (
    collision_relative_entropy,
    hypothesis_testing_relative_entropy,
    info_spectrum_relative_entropy,
    relative_entropy,
    relative_entropy_variance,
)
from .twirl import FiniteUnitaryGroup, TwirlChannel
from .bounds import asymptotic_rate, sandwich_bounds, upper_bound_log_messages
from .codesim import Codebook, build_pgm, monte_carlo_achievability

__all__ = [
    "BracketError", "ClosureError", "InvalidChannelError", "InvalidStateError", "MonotonicityError",
    "RescodeError", "SizeGuardError", "SupportError",
    "QuantumChannel", "partial_trace", "tensor_product",
    "collision_relative_entropy", "hypothesis_testing_relative_entropy", "info_spectrum_relative_entropy",
    "relative_entropy", "relative_entropy_variance",
    "FiniteUnitaryGroup", "TwirlChannel",
    "asymptotic_rate", "sandwich_bounds", "upper_bound_log_messages",
    "Codebook", "build_pgm", "monte_carlo_achievability",
]

__version__ = "0.1.0"
