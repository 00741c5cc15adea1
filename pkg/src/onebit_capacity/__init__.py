"""Asymptotic capacity of 1-bit quantized MIMO fading channels.

Coherent (receiver knows the channel) and non-coherent (block fading with
coherence time ``T``) channels, in the regime of many receive antennas.
All capacities are reported in bits per channel use unless stated
otherwise.
"""

__version__ = "0.1.0"

from .exceptions import DomainError, QuadratureError, RegimeWarning, UnsupportedError
from .results import CapacityEstimate, MCEstimate

__all__ = [
    "CapacityEstimate",
    "DomainError",
    "MCEstimate",
    "QuadratureError",
    "RegimeWarning",
    "UnsupportedError",
    "__version__",
]
