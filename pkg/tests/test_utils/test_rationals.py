"""Tests for exact rational parsing and canonical JSON."""
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.utils.exceptions import ValidationError
from src.utils.rationals import canonical_json, content_hash, format_rational, parse_rational, to_canonical


@given(st.fractions())
def test_format_then_parse_is_exact(value):
    assert parse_rational(format_rational(value)) == value


def test_format_always_has_denominator():
    assert format_rational(Fraction(3)) == "3/1"
    assert format_rational(Fraction(-2, 4)) == "-1/2"


@pytest.mark.parametrize("text,expected", [
    ("1/2", Fraction(1, 2)),
    (" 3 / 6 ", Fraction(1, 2)),
    ("-7", Fraction(-7)),
    (5, Fraction(5)),
    (Fraction(2, 3), Fraction(2, 3)),
])
def test_parse_rational_accepts(text, expected):
    assert parse_rational(text) == expected


@pytest.mark.parametrize("text", ["0.5", "1/0", "a/b", "1/2/3", "", 0.5, True, None])
def test_parse_rational_rejects(text):
    with pytest.raises(ValidationError):
        parse_rational(text)


def test_to_canonical_converts_nested_values():
    value = {"a": (Fraction(1, 3), [Fraction(2)]), 1: np.int64(4), "flag": True}
    assert to_canonical(value) == {"a": ["1/3", ["2/1"]], "1": 4, "flag": True}


def test_canonical_json_is_sorted_and_lf_terminated():
    text = canonical_json({"b": Fraction(1, 2), "a": 1})
    assert text.endswith("\n")
    assert "\r" not in text
    assert list(json.loads(text)) == ["a", "b"]
    assert json.loads(text)["b"] == "1/2"


def test_content_hash_ignores_key_order():
    first = {"x": Fraction(1, 4), "y": [1, 2]}
    second = {"y": [1, 2], "x": Fraction(2, 8)}
    assert content_hash(first) == content_hash(second)
    assert len(content_hash(first)) == 64
    assert content_hash(first) != content_hash({"x": Fraction(1, 4), "y": [2, 1]})
