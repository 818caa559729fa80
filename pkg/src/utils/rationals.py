"""Exact rational helpers and canonical JSON encoding.

Every measure in the workbench is a ``fractions.Fraction``. Interchange
formats carry them as ``"p/q"`` strings so that no value ever passes
through a float.
"""
import hashlib
import json
import re
from fractions import Fraction
from typing import Any, Union

from .exceptions import ValidationError

_RATIONAL_PATTERN = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def format_rational(value: Union[Fraction, int]) -> str:
    """Render an exact rational as ``"p/q"`` (the denominator is always present)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` into a Fraction.

    Args:
        text: The string to parse. Integers and Fractions pass through.

    Returns:
        The exact value.

    Raises:
        ValidationError: If the input is a float, a decimal string or malformed.
    """
    if isinstance(text, bool):
        raise ValidationError(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValidationError(f"rationals must be given as 'p/q' strings, got {type(text).__name__}")
    match = _RATIONAL_PATTERN.match(text)
    if not match:
        raise ValidationError(f"malformed rational '{text}' (expected 'p/q')")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) is not None else 1
    if denominator == 0:
        raise ValidationError(f"zero denominator in '{text}'")
    return Fraction(numerator, denominator)


def to_canonical(value: Any) -> Any:
    """Recursively convert Fractions to ``"p/q"`` strings and tuples to lists."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, dict):
        return {str(key): to_canonical(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_canonical(item) for item in value]
    if hasattr(value, "item") and callable(value.item):
        # numpy scalars
        return value.item()
    return value


def canonical_json(value: Any) -> str:
    """Serialize with sorted keys, "p/q" rationals and a trailing LF."""
    return json.dumps(to_canonical(value), sort_keys=True, indent=2) + "\n"


def content_hash(value: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form."""
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()
