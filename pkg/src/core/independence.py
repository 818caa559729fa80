"""
Collectionwise almost-independence of set families.

Deviations are exact: for every admissible intersection the measure is
counted on the grid and compared with the product of the member measures.
The half-measure search draws uniformly random N/2-subsets of cells (the
grid is the castle) and keeps the candidate whose orbit family deviates
least.
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Hashable, Optional, Sequence, Tuple

import numpy as np

from .measure_core import CellSet, GridMap, GridSpace, intersect_all, require_same_space
from ..utils.exceptions import CertificateViolationError, ScanBudgetError, ValidationError
from ..utils.random_streams import make_generator

logger = logging.getLogger(__name__)
logger.propagate = True

DEFAULT_SCAN_BUDGET = 2_000_000


class SetFamily:
    """Indexed sets E_m on one grid; indices must be distinct, sets may coincide."""

    def __init__(self, members: Sequence[CellSet], indices: Optional[Sequence[Hashable]] = None):
        if not members:
            raise ValidationError("a set family needs at least one member")
        for member in members:
            require_same_space(members[0], member, "set family")
        indices = list(range(len(members))) if indices is None else list(indices)
        if len(indices) != len(members) or len(set(indices)) != len(indices):
            raise ValidationError("family indices must be distinct, one per member")
        self.space: GridSpace = members[0].space
        self.members: Tuple[CellSet, ...] = tuple(members)
        self.indices: Tuple[Hashable, ...] = tuple(indices)
        self.masks = np.stack([member.mask for member in members])
        self.measures: Tuple[Fraction, ...] = tuple(member.measure for member in members)

    @classmethod
    def orbit(cls, transformation: GridMap, seed_set: CellSet, window: int) -> "SetFamily":
        """{S^m A : |m| <= window}, indexed by m."""
        powers = list(range(-window, window + 1))
        return cls([transformation.apply_power(m, seed_set) for m in powers], powers)

    def subfamily(self, positions: Sequence[int]) -> "SetFamily":
        return SetFamily([self.members[p] for p in positions], [self.indices[p] for p in positions])

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class IndependenceReport:
    """Worst deviation found by a scan, with the intersection attaining it."""
    deviation: Fraction
    witness: Tuple[Hashable, ...]
    complements: Tuple[bool, ...]
    cardinality_bound: int
    well: bool

    def verify(self, family: SetFamily) -> Fraction:
        """Recompute the deviation of the witness intersection on ``family``."""
        if not self.witness:
            return Fraction(0)
        positions = [family.indices.index(index) for index in self.witness]
        return _pattern_deviation(family, positions, self.complements)

    def to_dict(self) -> Dict:
        return {
            "deviation": self.deviation,
            "witness": [str(index) for index in self.witness],
            "complements": list(self.complements),
            "cardinality_bound": self.cardinality_bound,
            "well": self.well,
        }


def _pattern_deviation(family: SetFamily, positions: Sequence[int], complements: Sequence[bool]) -> Fraction:
    masks, product = [], Fraction(1)
    for position, complemented in zip(positions, complements):
        if complemented:
            masks.append(~family.masks[position])
            product *= 1 - family.measures[position]
        else:
            masks.append(family.masks[position])
            product *= family.measures[position]
    count = np.count_nonzero(intersect_all(family.space, masks))
    return abs(family.space.measure_of_count(count) - product)


def scan_size(members: int, cardinality: int, well: bool) -> int:
    """Number of intersections a scan evaluates."""
    return sum(comb(members, size) * (2 ** size if well else 1)
               for size in range(2, min(cardinality, members) + 1))


def _scan(family: SetFamily, cardinality: int, well: bool, scan_budget: int) -> IndependenceReport:
    if cardinality < 1:
        raise ValidationError(f"cardinality bound must be >= 1, got {cardinality}")
    needed = scan_size(len(family), cardinality, well)
    if needed > scan_budget:
        msg = (f"{needed} intersections exceed the budget of {scan_budget}; "
               f"lower the cardinality bound c={cardinality}")
        logger.error(msg)
        raise ScanBudgetError(msg)

    worst = Fraction(-1)
    witness: Tuple[int, ...] = ()
    flags: Tuple[bool, ...] = ()
    resolution = family.space.resolution
    for size in range(2, min(cardinality, len(family)) + 1):
        for positions in itertools.combinations(range(len(family)), size):
            if well:
                # every cell lands in exactly one plain/complement pattern
                codes = np.zeros(resolution, dtype=np.int64)
                for bit, position in enumerate(positions):
                    codes |= family.masks[position].astype(np.int64) << bit
                counts = np.bincount(codes, minlength=2 ** size)
                full = 2 ** size - 1
                for complement_mask in range(2 ** size):
                    pattern = tuple(bool((complement_mask >> bit) & 1) for bit in range(size))
                    product = Fraction(1)
                    for position, complemented in zip(positions, pattern):
                        measure = family.measures[position]
                        product *= (1 - measure) if complemented else measure
                    count = int(counts[full ^ complement_mask])
                    deviation = abs(Fraction(count, resolution) - product)
                    if deviation > worst:
                        worst, witness, flags = deviation, positions, pattern
            else:
                pattern = (False,) * size
                deviation = _pattern_deviation(family, positions, pattern)
                if deviation > worst:
                    worst, witness, flags = deviation, positions, pattern
    if worst < 0:
        worst = Fraction(0)
    return IndependenceReport(worst, tuple(family.indices[p] for p in witness), flags, cardinality, well)


def delta_deviation(family: SetFamily, cardinality: int,
                    scan_budget: int = DEFAULT_SCAN_BUDGET) -> IndependenceReport:
    """Max over intersections of 2..c distinct members of |mu(∩E) - ∏mu(E)|."""
    return _scan(family, cardinality, False, scan_budget)


def well_deviation(family: SetFamily, cardinality: int,
                   scan_budget: int = DEFAULT_SCAN_BUDGET) -> IndependenceReport:
    """As ``delta_deviation`` but with every plain/complement pattern of the members."""
    return _scan(family, cardinality, True, scan_budget)


def inclusion_exclusion_factor(cardinality: int) -> int:
    """
    Largest number of plain intersections of length >= 2 that one
    plain/complement intersection of length <= c expands into, and at least c.
    """
    return max(cardinality, 2 ** cardinality - cardinality - 1)


@dataclass(frozen=True)
class LemmaAudit:
    delta: Fraction
    worst_well: Fraction
    worst_subcollection: Tuple[Hashable, ...]
    cardinality_bound: int
    stated_factor: int
    proven_factor: int
    stated_bound_held: bool
    ratio: Optional[Fraction]
    subcollections_checked: int

    def to_dict(self) -> Dict:
        return {
            "delta": self.delta,
            "worst_well": self.worst_well,
            "worst_subcollection": [str(index) for index in self.worst_subcollection],
            "cardinality_bound": self.cardinality_bound,
            "stated_factor": self.stated_factor,
            "proven_factor": self.proven_factor,
            "stated_bound_held": self.stated_bound_held,
            "ratio": self.ratio,
            "subcollections_checked": self.subcollections_checked,
        }


def lemma_cdelta_check(family: SetFamily, cardinality: int,
                       scan_budget: int = DEFAULT_SCAN_BUDGET) -> LemmaAudit:
    """
    Audit that every subcollection of cardinality c is well λ·δ-independent,
    where δ is the delta deviation of the family up to c.

    The stated factor is c; the factor asserted is the inclusion-exclusion
    factor, which equals c for c <= 2 and exceeds it beyond.

    Raises:
        CertificateViolationError: If some subcollection exceeds λ·δ.
    """
    delta = delta_deviation(family, cardinality, scan_budget).deviation
    size = min(cardinality, len(family))
    proven = inclusion_exclusion_factor(cardinality)
    worst = Fraction(-1)
    worst_indices: Tuple[Hashable, ...] = ()
    checked = 0
    for positions in itertools.combinations(range(len(family)), size):
        sub = family.subfamily(positions)
        well = well_deviation(sub, cardinality, scan_budget).deviation
        checked += 1
        if well > worst:
            worst, worst_indices = well, sub.indices
    worst = max(worst, Fraction(0))
    if worst > proven * delta:
        msg = f"well deviation {worst} exceeds {proven} * {delta} on subcollection {worst_indices}"
        logger.critical(msg)
        raise CertificateViolationError(msg)
    ratio = worst / delta if delta else None
    return LemmaAudit(delta, worst, tuple(worst_indices), cardinality, cardinality, proven,
                      worst <= cardinality * delta, ratio, checked)


@dataclass(frozen=True)
class HalfMeasureSearch:
    subset: CellSet
    report: IndependenceReport
    success: bool
    target: Fraction
    window: int
    trials_run: int
    best_trial: int

    def to_dict(self) -> Dict:
        return {
            "success": self.success,
            "target": self.target,
            "window": self.window,
            "trials_run": self.trials_run,
            "best_trial": self.best_trial,
            "achieved": self.report.to_dict(),
            "subset": self.subset.to_dict(),
        }


def find_half_measure_independent_set(transformation: GridMap, window: int, delta: Fraction, seed: int,
                                      trials: int, cardinality: Optional[int] = None,
                                      scan_budget: int = DEFAULT_SCAN_BUDGET) -> HalfMeasureSearch:
    """
    Random-union search for A with mu(A) = 1/2 whose images {S^m A : |m| <= M}
    are well almost-independent.

    Trial t draws from the Philox stream (seed, t). The search stops at the
    first trial whose well deviation is below ``delta``; otherwise the best
    candidate is returned with ``success=False``.

    Raises:
        ValidationError: If N is odd or the window/trial counts are invalid.
    """
    resolution = transformation.space.resolution
    if resolution % 2:
        raise ValidationError("half measure unattainable on an odd grid")
    if window < 1 or trials < 1:
        raise ValidationError(f"window and trials must be >= 1, got {window} and {trials}")
    delta = Fraction(delta)
    cardinality = 2 * window + 1 if cardinality is None else cardinality

    best: Optional[Tuple[CellSet, IndependenceReport, int]] = None
    trials_run = 0
    for trial in range(trials):
        generator = make_generator(seed, trial)
        cells = generator.choice(resolution, size=resolution // 2, replace=False)
        candidate = CellSet(transformation.space, cells)
        report = well_deviation(SetFamily.orbit(transformation, candidate, window), cardinality, scan_budget)
        trials_run += 1
        logger.debug(f"Trial {trial}: well deviation {report.deviation}")
        if best is None or report.deviation < best[1].deviation:
            best = (candidate, report, trial)
        if report.deviation < delta:
            break

    subset, report, best_trial = best
    success = report.deviation < delta
    if success:
        logger.info(f"Half-measure set found at trial {best_trial}: deviation {report.deviation} < {delta}")
    else:
        logger.warning(f"No trial reached {delta}; best deviation {report.deviation} from trial {best_trial}")
    return HalfMeasureSearch(subset, report, success, delta, window, trials_run, best_trial)
