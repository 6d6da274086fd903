"""
Value validators for solver settings.

Each factory returns a callable that accepts a value and either returns True
or raises ValueError with a short message; SolverConfig prefixes the message
with the setting name.
"""

import math
from collections.abc import Callable
from pathlib import Path
from typing import Any

# A validator takes a value of Any type and returns a bool or raises ValueError
type Validator = Callable[[Any], bool]


# ============================================================================
# COMBINATORS
# ============================================================================


def all_of(*validators: Validator) -> Validator:
    """
    Combine validators; all must pass.

    Examples:
        >>> check = all_of(finite(), greater_than(1.0))
        >>> check(2.0)
        True
    """

    def validator(value: Any) -> bool:
        for v in validators:
            v(value)
        return True

    return validator


def optional(inner: Validator) -> Validator:
    """Accept None, otherwise delegate to inner."""

    def validator(value: Any) -> bool:
        return True if value is None else inner(value)

    return validator


# ============================================================================
# CHOICE
# ============================================================================


def one_of(*allowed_values: Any) -> Validator:
    """Value must be one of the allowed values."""

    def validator(value: Any) -> bool:
        if value not in allowed_values:
            raise ValueError(f"must be one of {allowed_values}, got {value!r}")
        return True

    return validator


# ============================================================================
# NUMERIC
# ============================================================================


def finite() -> Validator:
    """Reject NaN and infinities."""

    def validator(value: Any) -> bool:
        if not math.isfinite(value):
            raise ValueError(f"must be finite, got {value!r}")
        return True

    return validator


def range(min_val: int | float | None = None, max_val: int | float | None = None) -> Validator:
    """
    Value within [min_val, max_val]; either bound may be omitted.

    Examples:
        >>> range(min_val=3)(2)
        Traceback (most recent call last):
        ...
        ValueError: must be >= 3
    """

    def validator(value: Any) -> bool:
        if min_val is not None and value < min_val:
            raise ValueError(f"must be >= {min_val}")
        if max_val is not None and value > max_val:
            raise ValueError(f"must be <= {max_val}")
        return True

    return validator


def between(min_val: int | float, max_val: int | float, inclusive: bool = True) -> Validator:
    """Value between min_val and max_val, boundaries included unless inclusive=False."""

    def validator(value: Any) -> bool:
        if inclusive:
            if not (min_val <= value <= max_val):
                raise ValueError(f"must be between {min_val} and {max_val} (inclusive)")
        elif not (min_val < value < max_val):
            raise ValueError(f"must be between {min_val} and {max_val} (exclusive)")
        return True

    return validator


def greater_than(bound: int | float) -> Validator:
    """Strict lower bound, e.g. the outer radius r_b > 1."""

    def validator(value: Any) -> bool:
        if not value > bound:
            raise ValueError(f"must be > {bound}")
        return True

    return validator


def positive() -> Validator:
    """Value must be > 0."""

    def validator(value: Any) -> bool:
        if value <= 0:
            raise ValueError("must be positive (> 0)")
        return True

    return validator


def non_negative() -> Validator:
    """Value must be >= 0."""

    def validator(value: Any) -> bool:
        if value < 0:
            raise ValueError("must be non-negative (>= 0)")
        return True

    return validator


# ============================================================================
# COLLECTIONS AND PATHS
# ============================================================================


def non_empty() -> Validator:
    """String or collection must not be empty."""

    def validator(value: Any) -> bool:
        if len(value) == 0:
            raise ValueError("must not be empty")
        return True

    return validator


def finite_items() -> Validator:
    """Every item of a sequence must be a finite number."""

    def validator(value: Any) -> bool:
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ValueError(f"items must be numbers, got {item!r}")
            if not math.isfinite(item):
                raise ValueError(f"items must be finite, got {item!r}")
        return True

    return validator


def file_extension(*extensions: str) -> Validator:
    """Path must end with one of the extensions (case-insensitive)."""
    normalized = tuple(e.lower() if e.startswith(".") else f".{e.lower()}" for e in extensions)

    def validator(value: Any) -> bool:
        suffix = Path(value).suffix.lower()
        if suffix not in normalized:
            raise ValueError(f"must have extension {normalized}, got {suffix!r}")
        return True

    return validator
