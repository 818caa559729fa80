"""Named permutations of a GridSpace used as desk-scale transformations."""
import logging
from typing import Iterable, List, Tuple

import numpy as np

from .measure_core import CellSet, GridMap, GridSpace
from ..utils.exceptions import ValidationError
from ..utils.random_streams import make_generator

logger = logging.getLogger(__name__)
logger.propagate = True


def _bit_reverse(values: np.ndarray, bits: int) -> np.ndarray:
    result = np.zeros_like(values)
    for bit in range(bits):
        result |= ((values >> bit) & 1) << (bits - 1 - bit)
    return result


def identity(space: GridSpace) -> GridMap:
    return GridMap.identity(space)


def cyclic_shift(space: GridSpace, step: int = 1) -> GridMap:
    """i -> i + step (mod N); a single N-cycle for odd step."""
    cells = np.arange(space.resolution, dtype=np.int64)
    return GridMap(space, np.mod(cells + step, space.resolution), check=False)


def bit_reversal(space: GridSpace) -> GridMap:
    cells = np.arange(space.resolution, dtype=np.int64)
    return GridMap(space, _bit_reverse(cells, space.log2), check=False)


def scrambler(space: GridSpace) -> GridMap:
    """Bit reversal composed with increment: i -> rev(i + 1 mod N)."""
    return bit_reversal(space).compose(cyclic_shift(space, 1))


def odometer(space: GridSpace) -> GridMap:
    """
    Dyadic adding machine: add one to the bit-reversed index.

    For every m, the dyadic intervals of length N / 2^m are the levels of a
    tower of height 2^m over ``[0, N / 2^m)``.
    """
    cells = np.arange(space.resolution, dtype=np.int64)
    reversed_cells = _bit_reverse(cells, space.log2)
    advanced = np.mod(reversed_cells + 1, space.resolution)
    return GridMap(space, _bit_reverse(advanced, space.log2), check=False)


def bit_rotation(space: GridSpace) -> GridMap:
    """
    Cyclic shift of the binary register: bit i of the image is bit i-1 of the
    argument (indices mod log2 N).

    The digit sets {i : bit c of i is 0} are exactly independent and the map
    carries the digit set at c onto the digit set at c + 1, so this is a
    finite Bernoulli shift.
    """
    bits = space.log2
    cells = np.arange(space.resolution, dtype=np.int64)
    rotated = ((cells << 1) | (cells >> (bits - 1))) & (space.resolution - 1)
    return GridMap(space, rotated, check=False)


def digit_set(space: GridSpace, bit: int, value: int = 0) -> CellSet:
    """Cells whose ``bit``-th binary digit equals ``value``."""
    cells = np.arange(space.resolution, dtype=np.int64)
    return CellSet.from_mask(space, ((cells >> bit) & 1) == value)


def random_permutation(space: GridSpace, seed: int, stream: int = 0) -> GridMap:
    generator = make_generator(seed, stream)
    return GridMap(space, generator.permutation(space.resolution), check=False)


def transposition_perturbation(transformation: GridMap, pairs: Iterable[Tuple[int, int]]) -> GridMap:
    """V = P ∘ τ where τ swaps each listed pair of cells (applied in order)."""
    swap = np.arange(transformation.space.resolution, dtype=np.int64)
    for first, second in pairs:
        if not (0 <= first < swap.size and 0 <= second < swap.size):
            raise ValidationError(f"transposition ({first}, {second}) out of range")
        swap[[first, second]] = swap[[second, first]]
    return GridMap(transformation.space, transformation.forward[swap], check=False)


def random_transpositions(space: GridSpace, count: int, seed: int, stream: int = 0) -> List[Tuple[int, int]]:
    generator = make_generator(seed, stream)
    pairs = []
    for _ in range(count):
        first, second = generator.choice(space.resolution, size=2, replace=False)
        pairs.append((int(first), int(second)))
    return pairs


MAP_FACTORIES = {
    "identity": identity,
    "cyclic_shift": cyclic_shift,
    "scrambler": scrambler,
    "odometer": odometer,
    "bit_rotation": bit_rotation,
}


def build_named_map(kind: str, space: GridSpace, seed: int = 0) -> GridMap:
    """Construct one of the named maps; ``"random"`` uses ``seed``."""
    if kind == "random":
        return random_permutation(space, seed)
    try:
        factory = MAP_FACTORIES[kind]
    except KeyError:
        msg = f"unknown map kind '{kind}'"
        logger.error(msg)
        raise ValidationError(msg)
    return factory(space)
