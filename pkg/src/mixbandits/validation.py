"""Input validation helpers shared across the package."""

import numbers

import numpy as np


def as_context_vector(x, dim=None):
    """Coerce ``x`` to a finite 1-D float64 context vector.

    Raises ValueError on non-finite entries or, when ``dim`` is given, on a
    dimension mismatch.
    """
    out = np.ascontiguousarray(x, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"context must be a 1-D vector, got shape {out.shape}")
    if dim is not None and out.shape[0] != dim:
        raise ValueError(
            f"context has dimension {out.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(out)):
        raise ValueError("context contains non-finite entries")
    return out


def as_reward(y):
    """Coerce ``y`` to a finite float reward."""
    val = float(y)
    if not np.isfinite(val):
        raise ValueError("reward must be finite")
    return val


def check_positive(value, name):
    """Require a strictly positive real scalar."""
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive scalar, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    """Require a strictly positive integer."""
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def as_rng(rng):
    """Accept a Generator, a seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
