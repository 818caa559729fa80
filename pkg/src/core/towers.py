"""
Rokhlin towers on the grid: greedy construction, level-union approximation,
rank-one membership R(j, k), the openness certificate for R(j, k) under
small perturbations, and the windowed partial-rigidity diagnostic.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .measure_core import CellSet, GridMap, correlation, require_same_space
from .topology import NeighborhoodSpec, neighborhood_contains
from ..utils.exceptions import CertificateViolationError, ValidationError

logger = logging.getLogger(__name__)
logger.propagate = True


@dataclass(frozen=True)
class Tower:
    """Levels E, PE, ..., P^(n-1)E and the remainder D partitioning the grid."""
    transformation: GridMap
    base: CellSet
    height: int
    levels: Tuple[CellSet, ...]
    remainder: CellSet

    @classmethod
    def from_base(cls, transformation: GridMap, base: CellSet, height: int) -> "Tower":
        """
        Stack ``height`` images of ``base``.

        Raises:
            ValidationError: If the images are not pairwise disjoint.
        """
        require_same_space(transformation, base, "Tower.from_base")
        if height < 1:
            raise ValidationError(f"tower height must be >= 1, got {height}")
        levels = tuple(transformation.apply_power(i, base) for i in range(height))
        covered = np.zeros(transformation.space.resolution, dtype=bool)
        for level in levels:
            if np.any(covered[level.cells]):
                msg = f"images of the base overlap below height {height}"
                logger.error(msg)
                raise ValidationError(msg)
            covered[level.cells] = True
        return cls(transformation, base, height, levels, CellSet.from_mask(transformation.space, ~covered))

    @property
    def is_degenerate(self) -> bool:
        return len(self.base) == 0

    @property
    def level_measure(self) -> Fraction:
        return self.base.measure

    def level_union(self, indices: Sequence[int]) -> CellSet:
        mask = np.zeros(self.transformation.space.resolution, dtype=bool)
        for index in indices:
            mask[self.levels[index].cells] = True
        return CellSet.from_mask(self.transformation.space, mask)

    def to_dict(self) -> Dict:
        return {
            "height": self.height,
            "base": self.base.to_dict(),
            "level_measure": self.level_measure,
            "remainder_measure": self.remainder.measure,
        }


def build_tower(transformation: GridMap, height: int) -> Tower:
    """
    Greedy base search: scanning cells upward, x joins the base when
    x, Px, ..., P^(n-1)x are distinct and still unclaimed.

    A height above the shortest cycle may leave the base empty; that tower is
    valid and degenerate.
    """
    if height < 1:
        raise ValidationError(f"tower height must be >= 1, got {height}")
    forward = transformation.forward.tolist()
    claimed = [False] * len(forward)
    base = []
    for start in range(len(forward)):
        if claimed[start]:
            continue
        path = [start]
        cell = start
        for _ in range(height - 1):
            cell = forward[cell]
            if claimed[cell] or cell == start:
                break
            path.append(cell)
        if len(path) < height:
            continue
        for cell in path:
            claimed[cell] = True
        base.append(start)

    tower = Tower.from_base(transformation, CellSet(transformation.space, base), height)
    if tower.is_degenerate:
        logger.warning(f"No tower of height {height}: base is empty, remainder is the whole grid")
    else:
        logger.debug(f"Tower of height {height}: base {len(base)} cells, remainder {tower.remainder.measure}")
    return tower


def approximation_accuracy(tower: Tower, subset: CellSet) -> Tuple[CellSet, Fraction]:
    """
    Best level union B for ``subset`` by majority: a level L is kept iff
    mu(A ∩ L) > mu(L)/2.

    Returns:
        (B, mu(A △ B))
    """
    require_same_space(tower.base, subset, "approximation_accuracy")
    kept = [index for index, level in enumerate(tower.levels)
            if len(level) and 2 * np.count_nonzero(subset.mask[level.cells]) > len(level)]
    union = tower.level_union(kept)
    return union, subset.symmetric_difference_measure(union)


@dataclass(frozen=True)
class RankOneResult:
    tower: Tower
    accuracy: Fraction
    accuracies: Tuple[Fraction, ...]
    k: int
    verdict: bool

    def to_dict(self) -> Dict:
        return {
            "tower": self.tower.to_dict(),
            "accuracy_a": self.accuracy,
            "accuracies": list(self.accuracies),
            "k": self.k,
            "verdict": self.verdict,
        }


def rank_one_membership(transformation: GridMap, sets: Sequence[CellSet], k: int,
                        height_budget: Sequence[int]) -> RankOneResult:
    """
    Search the height budget for a tower approximating every set with
    accuracy below 1/k.

    A true verdict is a certificate; a false one only means no tower in the
    budget was good enough.
    """
    if not height_budget:
        raise ValidationError("height budget must not be empty")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not sets:
        raise ValidationError("rank-one membership needs at least one set")

    best = None
    for height in height_budget:
        tower = build_tower(transformation, height)
        accuracies = tuple(approximation_accuracy(tower, subset)[1] for subset in sets)
        worst = max(accuracies)
        if best is None or worst < best.accuracy:
            best = RankOneResult(tower, worst, accuracies, k, worst < Fraction(1, k))
    logger.info(f"R({len(sets)}, {k}): best height {best.tower.height}, a = {best.accuracy}, verdict {best.verdict}")
    return best


@dataclass(frozen=True)
class ProfileEntry:
    j: int
    k: int
    height: int
    accuracy: Fraction
    verdict: bool

    def to_dict(self) -> Dict:
        return {"j": self.j, "k": self.k, "height": self.height, "accuracy_a": self.accuracy,
                "verdict": self.verdict}


def rank_one_profile(transformation: GridMap, sets: Sequence[CellSet], ks: Sequence[int],
                     heights: Sequence[int]) -> List[ProfileEntry]:
    """R(j, k) for every prefix A_1..A_j of ``sets`` and every k in ``ks``."""
    entries = []
    for j in range(1, len(sets) + 1):
        for k in ks:
            result = rank_one_membership(transformation, sets[:j], k, heights)
            entries.append(ProfileEntry(j, k, result.tower.height, result.accuracy, result.verdict))
    return entries


def shrink_base(transformation: GridMap, base: CellSet, height: int) -> CellSet:
    """
    Ẽ = E minus (VE ∪ ... ∪ V^(n-1)E); Ẽ, VẼ, ..., V^(n-1)Ẽ are then disjoint.

    Raises:
        CertificateViolationError: If the images of Ẽ overlap.
    """
    require_same_space(transformation, base, "shrink_base")
    if height < 2:
        raise ValidationError(f"height must be >= 2, got {height}")
    mask = base.mask.copy()
    for i in range(1, height):
        mask[transformation.power_of_cells(i, base.cells)] = False
    shrunk = CellSet.from_mask(base.space, mask)

    covered = np.zeros(base.space.resolution, dtype=bool)
    for i in range(height):
        image = transformation.power_of_cells(i, shrunk.cells)
        if np.any(covered[image]):
            msg = f"images of the shrunk base overlap at power {i}"
            logger.critical(msg)
            raise CertificateViolationError(msg)
        covered[image] = True
    return shrunk


@dataclass(frozen=True)
class ChainLink:
    name: str
    value: Fraction
    bound: Fraction
    holds: bool

    def to_dict(self) -> Dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "holds": self.holds}


def _link(name: str, value: Fraction, bound: Fraction, strict: bool = False) -> ChainLink:
    return ChainLink(name, value, bound, value < bound if strict else value <= bound)


@dataclass(frozen=True)
class OpennessCertificate:
    j: int
    k: int
    height: int
    accuracy_a: Fraction
    b: Fraction
    neighborhood_b: Fraction
    b_eff: Fraction
    base_measure: Fraction
    shrunk_base: CellSet
    chain: Tuple[ChainLink, ...]
    perturbed_accuracy: Fraction
    passed: bool

    @property
    def within_b(self) -> bool:
        return self.b_eff <= self.b

    @property
    def chain_holds(self) -> bool:
        return all(link.holds for link in self.chain)

    def to_dict(self) -> Dict:
        return {
            "j": self.j,
            "k": self.k,
            "height": self.height,
            "accuracy_a": self.accuracy_a,
            "b": self.b,
            "neighborhood_b": self.neighborhood_b,
            "b_eff": self.b_eff,
            "within_b": self.within_b,
            "base_measure": self.base_measure,
            "shrunk_base_measure": self.shrunk_base.measure,
            "chain": [link.to_dict() for link in self.chain],
            "chain_holds": self.chain_holds,
            "perturbed_accuracy": self.perturbed_accuracy,
            "pass": self.passed,
        }


def openness_certificate(transformation: GridMap, tower: Tower, k: int, sets: Sequence[CellSet],
                         perturbed: GridMap, window: int = 1) -> OpennessCertificate:
    """
    Check that the tower property R(j, k) of S survives the perturbation V.

    With a the tower's accuracy and b = (1/n^2)(1/k - a), the shrunk base Ẽ
    carries a V-tower whose level unions approximate the sets within
    a + n(n-1)·b_eff, where b_eff = max(mu(E \\ Ẽ)/(n-2), max_i mu(V^i E △ S^i E)).
    Every link of that chain is evaluated exactly. The base_erosion link holds
    by definition of b_eff and is recorded for completeness only; the other
    links are genuine checks. ``neighborhood_b`` is the measured deviation of
    V from S on the level collection over |m| <= window, reported alongside
    b_eff but not used in the chain.

    Raises:
        ValidationError: If a >= 1/k, n < 3 or the tower is not a tower of S.
        CertificateViolationError: If b_eff <= b and the final accuracy is not below 1/k.
    """
    require_same_space(transformation, perturbed, "openness_certificate")
    if tower.transformation != transformation:
        raise ValidationError("the tower must be built for the unperturbed map")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    height = tower.height
    if height < 3:
        raise ValidationError(f"openness needs tower height >= 3, got {height}")
    if not sets:
        raise ValidationError("openness needs at least one set")

    threshold = Fraction(1, k)
    approximations = [approximation_accuracy(tower, subset) for subset in sets]
    accuracy = max(error for _, error in approximations)
    if accuracy >= threshold:
        msg = f"tower accuracy {accuracy} is not below 1/k = {threshold}"
        logger.error(msg)
        raise ValidationError(msg)
    b = (threshold - accuracy) / height ** 2

    neighborhood = NeighborhoodSpec(transformation, list(tower.levels), b, window)
    neighborhood_b = neighborhood_contains(neighborhood, perturbed).max_deviation

    shrunk = shrink_base(perturbed, tower.base, height)
    erosion = tower.base.measure - shrunk.measure
    drift = max(perturbed.apply_power(i, tower.base).symmetric_difference_measure(tower.levels[i])
                for i in range(1, height))
    b_eff = max(erosion / (height - 2), drift)

    perturbed_tower = Tower.from_base(perturbed, shrunk, height)
    level_gap = max(perturbed_tower.levels[i].symmetric_difference_measure(tower.levels[i])
                    for i in range(height))
    union_gap = Fraction(0)
    transported = Fraction(0)
    for subset, (union, _) in zip(sets, approximations):
        indices = [i for i, level in enumerate(tower.levels) if len(level) and level.issubset(union)]
        moved = perturbed_tower.level_union(indices)
        union_gap = max(union_gap, moved.symmetric_difference_measure(union))
        transported = max(transported, subset.symmetric_difference_measure(moved))

    chain = (
        _link("base_erosion", erosion, (height - 2) * b_eff),
        _link("level_difference", level_gap, (height - 1) * b_eff),
        _link("union_difference", union_gap, height * (height - 1) * b_eff),
        _link("final_accuracy", transported, threshold, strict=True),
    )
    perturbed_accuracy = max(approximation_accuracy(perturbed_tower, subset)[1] for subset in sets)
    passed = perturbed_accuracy < threshold

    if b_eff <= b and not all(link.holds for link in chain):
        msg = f"perturbation within b = {b} (b_eff = {b_eff}) but the chain broke: {chain}"
        logger.critical(msg)
        raise CertificateViolationError(msg)
    logger.info(f"Openness: a = {accuracy}, b = {b}, b_eff = {b_eff}, perturbed accuracy {perturbed_accuracy}")
    return OpennessCertificate(len(sets), k, height, accuracy, b, neighborhood_b, b_eff, tower.base.measure,
                               shrunk, chain, perturbed_accuracy, passed)


def partial_rigidity_estimate(transformation: GridMap, subset: CellSet, window: int) -> Fraction:
    """
    max over 1 <= i <= W of mu(A ∩ P^i A) / mu(A).

    A windowed surrogate for the limsup in the rigidity coefficient; it is a
    diagnostic, not a decision procedure.
    """
    if subset.measure == 0:
        raise ValidationError("partial rigidity needs a set of positive measure")
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    return max(correlation(transformation, i, subset, subset) for i in range(1, window + 1)) / subset.measure


def partial_rigidity_coefficient(transformation: GridMap, sets: Sequence[CellSet], window: int) -> Fraction:
    """Smallest windowed estimate over the test sets."""
    if not sets:
        raise ValidationError("partial rigidity needs at least one set")
    return min(partial_rigidity_estimate(transformation, subset, window) for subset in sets)
