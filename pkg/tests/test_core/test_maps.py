"""Tests for the named grid permutations."""
from fractions import Fraction

import numpy as np
import pytest

from src.core.maps import (MAP_FACTORIES, bit_reversal, bit_rotation, build_named_map, cyclic_shift,
                           digit_set, odometer, random_permutation, random_transpositions, scrambler,
                           transposition_perturbation)
from src.core.measure_core import GridMap, GridSpace, correlation
from src.utils.exceptions import ValidationError


def test_bit_reversal_is_an_involution(space16):
    reversal = bit_reversal(space16)
    assert reversal.forward[1] == 8
    assert reversal.forward[3] == 12
    assert reversal.compose(reversal) == GridMap.identity(space16)


def test_scrambler_is_reversal_after_increment(space16):
    transformation = scrambler(space16)
    assert transformation.forward[0] == 8
    assert transformation.forward[15] == 0


def test_odometer_levels_are_dyadic_intervals(space16):
    """Under the odometer each dyadic interval of length N/8 is mapped onto the next one."""
    transformation = odometer(space16)
    assert transformation.cycle_type() == (16,)
    width = 2
    for start in range(0, 14, width):
        image = transformation(space16.interval(start, start + width))
        assert image.cells.min() % width == 0
        assert image.cells.max() - image.cells.min() == width - 1


def test_bit_rotation_digit_sets_are_independent(space16):
    rotation = bit_rotation(space16)
    zero = digit_set(space16, 0)
    assert zero.measure == Fraction(1, 2)
    assert rotation(zero) == digit_set(space16, 1)
    for n in (1, 2, 3):
        assert correlation(rotation, n, zero, zero) == Fraction(1, 4)


def test_transposition_perturbation_changes_two_images(space16):
    shift = cyclic_shift(space16)
    perturbed = transposition_perturbation(shift, [(0, 5)])
    assert perturbed.forward[0] == 6
    assert perturbed.forward[5] == 1
    assert np.count_nonzero(perturbed.forward != shift.forward) == 2
    with pytest.raises(ValidationError):
        transposition_perturbation(shift, [(0, 16)])


def test_random_maps_are_seeded(space1024):
    assert random_permutation(space1024, 11) == random_permutation(space1024, 11)
    assert random_permutation(space1024, 11) != random_permutation(space1024, 12)
    pairs = random_transpositions(space1024, 3, 5, 2)
    assert pairs == random_transpositions(space1024, 3, 5, 2)
    assert all(first != second for first, second in pairs)


@pytest.mark.parametrize("kind", sorted(MAP_FACTORIES) + ["random"])
def test_build_named_map(kind):
    space = GridSpace(64)
    assert build_named_map(kind, space, seed=3).space == space


def test_unknown_map_kind(space16):
    with pytest.raises(ValidationError):
        build_named_map("baker", space16)
