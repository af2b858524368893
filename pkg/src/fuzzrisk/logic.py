"""Zadeh operators: AND is min, OR is max, NOT is the complement.

They work elementwise on numpy arrays as well as on plain floats.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fuzzy_and", "fuzzy_or", "fuzzy_not", "OPERATORS"]


def fuzzy_and(a, b):
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(min(a, b))
    return np.minimum(a, b)


def fuzzy_or(a, b):
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(max(a, b))
    return np.maximum(a, b)


def fuzzy_not(a):
    if np.ndim(a) == 0:
        return 1.0 - float(a)
    return 1.0 - np.asarray(a, dtype=float)


# names accepted in InferenceConfig; min/max/complement are the only choices
OPERATORS = {"min": fuzzy_and, "max": fuzzy_or}
