"""Rule-based answer consistency: pinned pairs plus symmetry/reflexivity."""

from __future__ import annotations

import random

import pytest

from spatialsynth.consistency import answers_consistent, extract_numbers


@pytest.mark.parametrize(
    "a,b,want",
    [
        ("5.00 meters", "The distance is 5 meters.", True),
        ("5.00 meters", "7.00 meters", False),
        ("the column", "Column", True),
        ("column", "The column is the tallest", True),
        ("the lamp", "the rug", False),
        ("6.00 cubic meters", "6.1 cubic meters", True),   # within 5%
        ("6.00 cubic meters", "6.5 cubic meters", False),  # beyond 5%
        ("6.00 cubic meters", "6.00 meters", False),       # incompatible units
        ("There are 3 objects of the chair category in the video.", "3", True),
        ("yes, above", "no numbers here at all", False),
        ("", "anything", False),
    ],
)
def test_pinned_pairs(a, b, want):
    assert answers_consistent(a, b) is want
    assert answers_consistent(b, a) is want  # symmetry


def test_reflexive_on_nonempty():
    rng = random.Random(1)
    samples = [
        "The distance between the a and the b is 4.21 meters.",
        "the red chair",
        "Yes, the lamp_1 is above the table_1.",
        "At that moment, the visible objects are chair: chair_1.",
    ]
    for s in samples:
        assert answers_consistent(s, s)
    assert not answers_consistent("", "")


def test_identifier_digits_are_not_numbers():
    assert extract_numbers("the chair_3 is left of the shelf_12") == []
    # so these compare by token sets, not by the embedded digits
    assert answers_consistent("chair_3", "the chair_3")
    assert not answers_consistent("chair_3", "chair_12")


def test_numeric_count_mismatch_is_inconsistent():
    assert not answers_consistent("3 meters and 4 meters", "3 meters")
