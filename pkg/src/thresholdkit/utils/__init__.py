"""
Utilities for the thresholdkit package.
"""

from .text import tokenize
from .validators import is_strictly_ascending, is_valid_subset_key

__all__ = ["is_strictly_ascending", "is_valid_subset_key", "tokenize"]
