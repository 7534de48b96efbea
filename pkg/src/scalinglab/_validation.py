"""Input validation and random-state helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np

__all__ = ["ValidationError", "check_int", "check_random_state", "spawn"]


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def check_int(value, name: str, minimum: int | None = None, maximum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValidationError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_random_state(seed) -> np.random.Generator:
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValidationError(f"cannot build a random generator from {seed!r}")


def spawn(rng: np.random.Generator, k: int) -> list[np.random.Generator]:
    """Independent child generators derived deterministically from ``rng``."""
    return [np.random.default_rng(s) for s in rng.bit_generator.seed_seq.spawn(k)]
