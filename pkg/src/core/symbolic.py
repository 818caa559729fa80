"""
Cylinder calculus for the Bernoulli shift on {0,1}^Z with the fair-coin
product measure.

Shift convention: under T^m every constraint at coordinate i moves to
coordinate i + m, so T^i D_b = {x : x_i = b} and the atom of pattern
(b_-k, ..., b_k) is {x : x_-k = b_-k, ..., x_k = b_k}.

Nothing on this side is discretized; every measure is an exact power of 1/2
or a finite sum of them.
"""
import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .measure_core import CellSet, GridSpace
from ..utils.exceptions import ValidationError

logger = logging.getLogger(__name__)
logger.propagate = True


class Cylinder:
    """A finite set of coordinate constraints; contradictory merges give the empty cylinder."""

    __slots__ = ("_items", "is_empty")

    def __init__(self, constraints: Optional[Mapping[int, int]] = None, empty: bool = False):
        self.is_empty = bool(empty)
        if self.is_empty:
            self._items: Tuple[Tuple[int, int], ...] = ()
            return
        items = []
        for coordinate, symbol in (constraints or {}).items():
            if symbol not in (0, 1):
                raise ValidationError(f"symbol at coordinate {coordinate} must be 0 or 1, got {symbol!r}")
            items.append((int(coordinate), int(symbol)))
        self._items = tuple(sorted(items))

    @classmethod
    def empty(cls) -> "Cylinder":
        return cls(empty=True)

    @property
    def constraints(self) -> Dict[int, int]:
        return dict(self._items)

    @property
    def coordinates(self) -> Tuple[int, ...]:
        return tuple(coordinate for coordinate, _ in self._items)

    @property
    def measure(self) -> Fraction:
        if self.is_empty:
            return Fraction(0)
        return Fraction(1, 2 ** len(self._items))

    @property
    def radius(self) -> int:
        """Smallest k with every constrained coordinate in [-k, k]."""
        return max((abs(coordinate) for coordinate, _ in self._items), default=0)

    def shift(self, m: int) -> "Cylinder":
        if self.is_empty or m == 0:
            return self
        return Cylinder({coordinate + m: symbol for coordinate, symbol in self._items})

    def merge(self, other: "Cylinder") -> "Cylinder":
        if self.is_empty or other.is_empty:
            return Cylinder.empty()
        merged = dict(self._items)
        for coordinate, symbol in other._items:
            if merged.get(coordinate, symbol) != symbol:
                return Cylinder.empty()
            merged[coordinate] = symbol
        return Cylinder(merged)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Cylinder) and other.is_empty == self.is_empty
                and other._items == self._items)

    def __hash__(self) -> int:
        return hash((self.is_empty, self._items))

    def __repr__(self) -> str:
        if self.is_empty:
            return "Cylinder(empty)"
        return f"Cylinder({dict(self._items)})"

    def to_dict(self) -> Dict[str, int]:
        if self.is_empty:
            return {"empty": 1}
        return {str(coordinate): symbol for coordinate, symbol in self._items}

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> "Cylinder":
        if "empty" in data:
            return cls.empty()
        try:
            return cls({int(coordinate): int(symbol) for coordinate, symbol in data.items()})
        except (TypeError, ValueError) as e:
            raise ValidationError(f"malformed cylinder {data!r}: {e}")


def shift_cylinder(cylinder: Cylinder, m: int) -> Cylinder:
    return cylinder.shift(m)


def merge_measure(first: Cylinder, second: Cylinder) -> Fraction:
    """mu(C1 ∩ C2): zero on a contradiction, else 2^-(distinct constrained coordinates)."""
    return first.merge(second).measure


def atom_pattern(index: int, k: int) -> Tuple[int, ...]:
    """Pattern (b_-k, ..., b_k) of the atom at ``index`` in lexicographic order."""
    width = 2 * k + 1
    if not 0 <= index < 2 ** width:
        raise ValidationError(f"atom index {index} out of range for rank {k}")
    return tuple((index >> (width - 1 - position)) & 1 for position in range(width))


def atom_index(pattern: Sequence[int]) -> int:
    index = 0
    for symbol in pattern:
        index = (index << 1) | int(symbol)
    return index


def atom(pattern: Sequence[int]) -> Cylinder:
    k = (len(pattern) - 1) // 2
    if len(pattern) != 2 * k + 1:
        raise ValidationError("atom patterns have odd length 2k+1")
    return Cylinder({coordinate: symbol for coordinate, symbol in zip(range(-k, k + 1), pattern)})


def atoms(k: int) -> List[Cylinder]:
    """All 2^(2k+1) atoms of rank k, in lexicographic order of (b_-k, ..., b_k)."""
    if k < 0:
        raise ValidationError(f"rank must be nonnegative, got {k}")
    return [atom(pattern) for pattern in itertools.product((0, 1), repeat=2 * k + 1)]


class CylinderUnion:
    """A finite union of pairwise disjoint cylinders."""

    def __init__(self, pieces: Iterable[Cylinder] = ()):
        kept = [piece for piece in pieces if not piece.is_empty]
        for first, second in itertools.combinations(kept, 2):
            if merge_measure(first, second) != 0:
                raise ValidationError(f"pieces {first!r} and {second!r} overlap")
        self.pieces: Tuple[Cylinder, ...] = tuple(kept)

    @classmethod
    def from_atoms(cls, k: int, indices: Iterable[int]) -> "CylinderUnion":
        return cls(atom(atom_pattern(index, k)) for index in sorted(set(indices)))

    @classmethod
    def of(cls, cylinder: Cylinder) -> "CylinderUnion":
        return cls([cylinder])

    @property
    def measure(self) -> Fraction:
        return sum((piece.measure for piece in self.pieces), Fraction(0))

    @property
    def rank(self) -> int:
        return max((piece.radius for piece in self.pieces), default=0)

    def intersection_measure(self, other: "CylinderUnion") -> Fraction:
        return sum((merge_measure(mine, theirs) for mine in self.pieces for theirs in other.pieces),
                   Fraction(0))

    def symmetric_difference_measure(self, other: "CylinderUnion") -> Fraction:
        return self.measure + other.measure - 2 * self.intersection_measure(other)

    def shift(self, m: int) -> "CylinderUnion":
        union = CylinderUnion()
        union.pieces = tuple(piece.shift(m) for piece in self.pieces)
        return union

    def atom_indices(self, k: int) -> List[int]:
        """
        Indices of the rank-k atoms whose union is this set.

        Raises:
            ValidationError: If some piece constrains a coordinate outside [-k, k].
        """
        indices = set()
        window = list(range(-k, k + 1))
        for piece in self.pieces:
            fixed = piece.constraints
            if any(abs(coordinate) > k for coordinate in fixed):
                raise ValidationError(f"{piece!r} is not measurable at rank {k}")
            free = [coordinate for coordinate in window if coordinate not in fixed]
            for values in itertools.product((0, 1), repeat=len(free)):
                assignment = dict(fixed)
                assignment.update(zip(free, values))
                indices.add(atom_index(assignment[coordinate] for coordinate in window))
        return sorted(indices)

    def __repr__(self) -> str:
        return f"CylinderUnion({list(self.pieces)!r})"

    def to_dict(self) -> List[Dict[str, int]]:
        return [piece.to_dict() for piece in self.pieces]

    @classmethod
    def from_dict(cls, data: Sequence[Mapping[str, int]]) -> "CylinderUnion":
        return cls(Cylinder.from_dict(item) for item in data)


class BernoulliShift:
    """The right shift on {0,1}^Z with symbol probabilities (1/2, 1/2)."""

    probabilities = (Fraction(1, 2), Fraction(1, 2))

    def measure(self, subset: CylinderUnion) -> Fraction:
        return subset.measure

    def correlation(self, m: int, first: CylinderUnion, second: CylinderUnion) -> Fraction:
        """Exact mu(T^m A ∩ B)."""
        return first.shift(m).intersection_measure(second)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BernoulliShift)

    def __hash__(self) -> int:
        return hash("BernoulliShift")

    def __repr__(self) -> str:
        return "BernoulliShift(1/2, 1/2)"


def best_cylinder_approximation(subset: CylinderUnion, k: int) -> Tuple[CylinderUnion, Fraction]:
    """
    Majority-rule approximation of ``subset`` by a union of rank-k atoms.

    An atom a is kept iff mu(A ∩ a) > mu(a)/2; half-ties are excluded. The
    result minimizes mu(A △ Ã) over rank-k measurable sets.

    Returns:
        (Ã, mu(A △ Ã))
    """
    kept = []
    error = Fraction(0)
    for index, candidate in enumerate(atoms(k)):
        overlap = sum((merge_measure(piece, candidate) for piece in subset.pieces), Fraction(0))
        if overlap > candidate.measure / 2:
            kept.append(index)
            error += candidate.measure - overlap
        else:
            error += overlap
    approximation = CylinderUnion.from_atoms(k, kept)
    logger.debug(f"Rank-{k} approximation keeps {len(kept)} atoms, error {error}")
    return approximation, error


class AtomGrid:
    """
    Realization of the rank-``fine_rank`` atom algebra on a GridSpace.

    Rank-``block_rank`` atoms are consecutive equal blocks in canonical atom
    order. Inside each block, the finer atoms sharing its middle coordinates
    occupy equal sub-blocks ordered lexicographically by their outer
    coordinates (b_-K, ..., b_-k-1, b_k+1, ..., b_K).
    """

    def __init__(self, space: GridSpace, block_rank: int, fine_rank: Optional[int] = None):
        fine_rank = block_rank if fine_rank is None else fine_rank
        if block_rank < 0 or fine_rank < block_rank:
            raise ValidationError(f"need 0 <= block rank {block_rank} <= fine rank {fine_rank}")
        if space.resolution < 2 ** (2 * fine_rank + 1):
            msg = (f"resolution {space.resolution} cannot realize the "
                   f"{2 ** (2 * fine_rank + 1)} atoms of rank {fine_rank}")
            logger.error(msg)
            raise ValidationError(msg)
        self.space = space
        self.block_rank = block_rank
        self.fine_rank = fine_rank
        self.block_size = space.resolution // 2 ** (2 * block_rank + 1)
        self.fine_size = space.resolution // 2 ** (2 * fine_rank + 1)

    def block(self, index: int) -> CellSet:
        start = index * self.block_size
        return self.space.interval(start, start + self.block_size)

    def blocks(self) -> List[CellSet]:
        return [self.block(index) for index in range(2 ** (2 * self.block_rank + 1))]

    def fine_offset(self, fine_index: int) -> int:
        """First cell of the sub-block realizing the rank-``fine_rank`` atom ``fine_index``."""
        k, outer = self.block_rank, self.fine_rank - self.block_rank
        pattern = atom_pattern(fine_index, self.fine_rank)
        middle = pattern[outer:outer + 2 * k + 1]
        edges = pattern[:outer] + pattern[outer + 2 * k + 1:]
        return atom_index(middle) * self.block_size + atom_index(edges) * self.fine_size

    def realize(self, subset: CylinderUnion) -> CellSet:
        mask = np.zeros(self.space.resolution, dtype=bool)
        for fine_index in subset.atom_indices(self.fine_rank):
            offset = self.fine_offset(fine_index)
            mask[offset:offset + self.fine_size] = True
        return CellSet.from_mask(self.space, mask)

    def bridge(self, sets: Sequence[CylinderUnion]) -> List[CellSet]:
        return [self.realize(subset) for subset in sets]
