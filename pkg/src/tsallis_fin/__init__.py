"""Feature imitating networks for temperature-scaled Tsallis entropy."""
from .entropy import (TsallisParams, normalize_input, shannon_entropy, softmax_temperature,
                      tsallis_entropy, tsallis_gradients)

__version__ = "0.1.0"

__all__ = [
    "TsallisParams", "normalize_input", "shannon_entropy", "softmax_temperature",
    "tsallis_entropy", "tsallis_gradients",
]
