"""
Exact finite measure space used as the desk-scale stand-in for a standard
probability space.

The space is a grid of N equal cells (N a power of two). Measurable sets are
sorted cell index arrays, transformations are cell permutations, and every
measure is an exact ``Fraction``. Powers of a permutation are evaluated
through its cycle decomposition, which is computed once at construction.
"""
import logging
from fractions import Fraction
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..utils.exceptions import IncompatibleSpacesError, ValidationError

# Configure module logger
logger = logging.getLogger(__name__)
logger.propagate = True  # Ensure logs propagate to parent loggers


class GridSpace:
    """A probability space of ``resolution`` cells of measure 1/N each."""

    def __init__(self, resolution: int):
        """
        Initialize the GridSpace.

        Args:
            resolution: Number of cells N; must be a power of two, N >= 2.

        Raises:
            ValidationError: If N is not a power of two or is smaller than 2.
        """
        if isinstance(resolution, bool) or not isinstance(resolution, (int, np.integer)):
            raise ValidationError(f"resolution must be an integer, got {resolution!r}")
        resolution = int(resolution)
        if resolution < 2 or resolution & (resolution - 1):
            msg = f"resolution {resolution} is not a power of two >= 2"
            logger.error(msg)
            raise ValidationError(msg)
        self.resolution = resolution
        self.cell_measure = Fraction(1, resolution)

    @classmethod
    def from_log2(cls, resolution_log2: int) -> "GridSpace":
        return cls(1 << resolution_log2)

    @property
    def log2(self) -> int:
        return self.resolution.bit_length() - 1

    def full(self) -> "CellSet":
        return CellSet(self, np.arange(self.resolution, dtype=np.int64))

    def empty(self) -> "CellSet":
        return CellSet(self, np.empty(0, dtype=np.int64))

    def interval(self, start: int, stop: int) -> "CellSet":
        """Cells ``start <= i < stop``."""
        return CellSet(self, np.arange(start, stop, dtype=np.int64))

    def measure_of_count(self, count: int) -> Fraction:
        return Fraction(int(count), self.resolution)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GridSpace) and other.resolution == self.resolution

    def __hash__(self) -> int:
        return hash(("GridSpace", self.resolution))

    def __repr__(self) -> str:
        return f"GridSpace(resolution={self.resolution})"

    def to_dict(self) -> Dict[str, Any]:
        return {"resolution": self.resolution}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpace":
        return cls(int(data["resolution"]))


def require_same_space(first: Any, second: Any, operation: str) -> None:
    """Raise IncompatibleSpacesError unless both operands share a GridSpace."""
    if first.space != second.space:
        msg = (f"{operation}: operands live on {first.space!r} and {second.space!r}")
        logger.error(msg)
        raise IncompatibleSpacesError(msg)


class CellSet:
    """
    A measurable subset of a GridSpace stored as a strictly increasing
    array of cell indices, with a cached boolean mask for fast set algebra.
    """

    __slots__ = ("space", "_cells", "_mask")

    def __init__(self, space: GridSpace, cells: Iterable[int]):
        """
        Initialize the CellSet.

        Args:
            space: The grid the cells belong to.
            cells: Cell indices; duplicates are merged and the result sorted.

        Raises:
            ValidationError: If any index is outside ``[0, N)``.
        """
        array = np.unique(np.asarray(list(cells) if not isinstance(cells, np.ndarray) else cells,
                                     dtype=np.int64))
        if array.size and (array[0] < 0 or array[-1] >= space.resolution):
            msg = f"cell indices must lie in [0, {space.resolution})"
            logger.error(msg)
            raise ValidationError(msg)
        array.flags.writeable = False
        self.space = space
        self._cells = array
        self._mask: Optional[np.ndarray] = None

    @classmethod
    def from_mask(cls, space: GridSpace, mask: np.ndarray) -> "CellSet":
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (space.resolution,):
            raise ValidationError(f"mask shape {mask.shape} does not match resolution {space.resolution}")
        instance = cls(space, np.flatnonzero(mask))
        frozen = mask.copy()
        frozen.flags.writeable = False
        instance._mask = frozen
        return instance

    @property
    def cells(self) -> np.ndarray:
        return self._cells

    @property
    def mask(self) -> np.ndarray:
        if self._mask is None:
            mask = np.zeros(self.space.resolution, dtype=bool)
            mask[self._cells] = True
            mask.flags.writeable = False
            self._mask = mask
        return self._mask

    @property
    def measure(self) -> Fraction:
        return Fraction(int(self._cells.size), self.space.resolution)

    def __len__(self) -> int:
        return int(self._cells.size)

    def __iter__(self):
        return iter(self._cells.tolist())

    def __contains__(self, cell: int) -> bool:
        return 0 <= cell < self.space.resolution and bool(self.mask[cell])

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, CellSet) and other.space == self.space
                and np.array_equal(other._cells, self._cells))

    def __hash__(self) -> int:
        return hash((self.space, self._cells.tobytes()))

    def __repr__(self) -> str:
        preview = self._cells[:8].tolist()
        suffix = ", ..." if self._cells.size > 8 else ""
        return f"CellSet(N={self.space.resolution}, cells={preview}{suffix})"

    # set algebra -----------------------------------------------------------

    def union(self, other: "CellSet") -> "CellSet":
        require_same_space(self, other, "union")
        return CellSet.from_mask(self.space, self.mask | other.mask)

    def intersection(self, other: "CellSet") -> "CellSet":
        require_same_space(self, other, "intersection")
        return CellSet.from_mask(self.space, self.mask & other.mask)

    def difference(self, other: "CellSet") -> "CellSet":
        require_same_space(self, other, "difference")
        return CellSet.from_mask(self.space, self.mask & ~other.mask)

    def symmetric_difference(self, other: "CellSet") -> "CellSet":
        require_same_space(self, other, "symmetric difference")
        return CellSet.from_mask(self.space, self.mask ^ other.mask)

    def complement(self) -> "CellSet":
        return CellSet.from_mask(self.space, ~self.mask)

    def issubset(self, other: "CellSet") -> bool:
        require_same_space(self, other, "subset test")
        return not bool(np.any(self.mask & ~other.mask))

    def intersection_measure(self, other: "CellSet") -> Fraction:
        require_same_space(self, other, "intersection")
        return self.space.measure_of_count(np.count_nonzero(self.mask & other.mask))

    def symmetric_difference_measure(self, other: "CellSet") -> Fraction:
        require_same_space(self, other, "symmetric difference")
        return self.space.measure_of_count(np.count_nonzero(self.mask ^ other.mask))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference
    __invert__ = complement

    def to_dict(self) -> Dict[str, Any]:
        return {"resolution": self.space.resolution, "cells": self._cells.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], space: Optional[GridSpace] = None) -> "CellSet":
        space = space or GridSpace(int(data["resolution"]))
        if space.resolution != int(data.get("resolution", space.resolution)):
            raise IncompatibleSpacesError(
                f"serialized set has resolution {data['resolution']}, expected {space.resolution}")
        return cls(space, data["cells"])


def _decompose_cycles(forward: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Cycle decomposition of a permutation array.

    Returns:
        (order, start, length, position): ``order`` lists every cell cycle by
        cycle; for each cell, ``start`` is the offset of its cycle in
        ``order``, ``length`` the cycle length and ``position`` its offset
        inside the cycle.
    """
    size = forward.size
    successor = forward.tolist()
    visited = bytearray(size)
    order = np.empty(size, dtype=np.int64)
    start = np.empty(size, dtype=np.int64)
    length = np.empty(size, dtype=np.int64)
    position = np.empty(size, dtype=np.int64)
    offset = 0
    for seed in range(size):
        if visited[seed]:
            continue
        cycle = []
        cell = seed
        while not visited[cell]:
            visited[cell] = 1
            cycle.append(cell)
            cell = successor[cell]
        members = np.asarray(cycle, dtype=np.int64)
        span = members.size
        order[offset:offset + span] = members
        start[members] = offset
        length[members] = span
        position[members] = np.arange(span, dtype=np.int64)
        offset += span
    for array in (order, start, length, position):
        array.flags.writeable = False
    return order, start, length, position


class GridMap:
    """
    An invertible measure-preserving transformation of a GridSpace, stored as
    the permutation ``forward[i] = image of cell i``.
    """

    def __init__(self, space: GridSpace, forward: Iterable[int], check: bool = True):
        """
        Initialize the GridMap.

        Args:
            space: The grid the permutation acts on.
            forward: Image of every cell.
            check: Verify that ``forward`` is a bijection of ``range(N)``.

        Raises:
            ValidationError: If ``forward`` is not a permutation of the cells.
        """
        array = np.array(forward, dtype=np.int64)
        if check:
            if array.shape != (space.resolution,):
                msg = f"permutation length {array.size} does not match resolution {space.resolution}"
                logger.error(msg)
                raise ValidationError(msg)
            seen = np.zeros(space.resolution, dtype=bool)
            in_range = (array >= 0) & (array < space.resolution)
            if not np.all(in_range):
                raise ValidationError("permutation entries out of range")
            seen[array] = True
            if not np.all(seen):
                msg = "forward array is not a bijection"
                logger.error(msg)
                raise ValidationError(msg)
        array.flags.writeable = False
        self.space = space
        self.forward = array
        inverse = np.empty_like(array)
        inverse[array] = np.arange(space.resolution, dtype=np.int64)
        inverse.flags.writeable = False
        self._inverse = inverse
        self._order, self._start, self._length, self._position = _decompose_cycles(array)

    @classmethod
    def identity(cls, space: GridSpace) -> "GridMap":
        return cls(space, np.arange(space.resolution, dtype=np.int64), check=False)

    @property
    def backward(self) -> np.ndarray:
        return self._inverse

    def power_of_cells(self, n: int, cells: np.ndarray) -> np.ndarray:
        """Images of the given cells under the n-th power (any integer n)."""
        cells = np.asarray(cells, dtype=np.int64)
        lengths = self._length[cells]
        shifted = np.mod(self._position[cells] + int(n), lengths)
        return self._order[self._start[cells] + shifted]

    def apply_power(self, n: int, subset: CellSet) -> CellSet:
        require_same_space(self, subset, "apply_power")
        if n == 0:
            return subset
        return CellSet(self.space, self.power_of_cells(n, subset.cells))

    def __call__(self, subset: CellSet) -> CellSet:
        return self.apply_power(1, subset)

    def power(self, n: int) -> "GridMap":
        images = self.power_of_cells(n, np.arange(self.space.resolution, dtype=np.int64))
        return GridMap(self.space, images, check=False)

    def inverse(self) -> "GridMap":
        return GridMap(self.space, self._inverse, check=False)

    def compose(self, other: "GridMap") -> "GridMap":
        """The map ``x -> self(other(x))``."""
        require_same_space(self, other, "compose")
        return GridMap(self.space, self.forward[other.forward], check=False)

    def cycle_lengths(self) -> np.ndarray:
        """Length of every cycle, in order of first appearance."""
        firsts = self._order[np.flatnonzero(self._position[self._order] == 0)]
        return self._length[firsts]

    def cycle_type(self) -> Tuple[int, ...]:
        return tuple(sorted(self.cycle_lengths().tolist()))

    def shortest_cycle(self) -> int:
        return int(self._length.min())

    def fixed_fraction(self, n: int) -> Fraction:
        """Measure of the cells fixed by the n-th power."""
        fixed = np.count_nonzero(np.mod(n, self._length) == 0)
        return self.space.measure_of_count(fixed)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, GridMap) and other.space == self.space
                and np.array_equal(other.forward, self.forward))

    def __hash__(self) -> int:
        return hash((self.space, self.forward.tobytes()))

    def __repr__(self) -> str:
        return f"GridMap(N={self.space.resolution}, cycles={len(self.cycle_lengths())})"

    def to_dict(self) -> Dict[str, Any]:
        return {"resolution": self.space.resolution, "forward": self.forward.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridMap":
        return cls(GridSpace(int(data["resolution"])), data["forward"])


def measure(subset: CellSet) -> Fraction:
    return subset.measure


def apply_power(transformation: GridMap, n: int, subset: CellSet) -> CellSet:
    """P^n(A), computed through the cycle decomposition in O(|A|)."""
    return transformation.apply_power(n, subset)


def correlation(transformation: GridMap, n: int, first: CellSet, second: CellSet) -> Fraction:
    """Exact value of mu(P^n A ∩ B)."""
    require_same_space(transformation, first, "correlation")
    require_same_space(first, second, "correlation")
    if n == 0:
        return first.intersection_measure(second)
    images = transformation.power_of_cells(n, first.cells)
    count = np.count_nonzero(second.mask[images])
    return transformation.space.measure_of_count(count)


def intersect_all(space: GridSpace, subsets: Iterable[Union[CellSet, np.ndarray]]) -> np.ndarray:
    """Boolean mask of the intersection of several sets (the full space if none)."""
    mask = np.ones(space.resolution, dtype=bool)
    for subset in subsets:
        mask &= subset.mask if isinstance(subset, CellSet) else subset
    return mask
