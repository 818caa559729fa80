"""
Metrics d, a and the window-truncated tau on grid transformations, the
neighborhood base U(T, q, eps), and the two refinement steps that shrink a
neighborhood of the Bernoulli shift to one defined by rank-k atoms.

Every quantifier over n in Z is truncated to |n| <= W and W is stamped into
every report.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .measure_core import CellSet, GridMap, GridSpace, correlation, require_same_space
from .symbolic import AtomGrid, BernoulliShift, CylinderUnion, atoms, best_cylinder_approximation
from ..utils.exceptions import CertificateViolationError, PrecisionUnattainableError, ValidationError

logger = logging.getLogger(__name__)
logger.propagate = True

Center = Union[GridMap, BernoulliShift]
Witness = Tuple[int, int, int]


class Basis:
    """Finite truncation of a generating collection {A_i}; A_i carries weight 2^-i (1-indexed)."""

    def __init__(self, sets: Sequence[CellSet]):
        if not sets:
            raise ValidationError("a basis needs at least one set")
        space = sets[0].space
        for subset in sets:
            require_same_space(sets[0], subset, "basis")
        self.space = space
        self.sets: Tuple[CellSet, ...] = tuple(sets)

    def weight(self, position: int) -> Fraction:
        """Weight of the set at 0-based ``position``."""
        return Fraction(1, 2 ** (position + 1))

    @property
    def tail_bound(self) -> Fraction:
        """Bound on the weights of the truncated tail of the collection."""
        return Fraction(1, 2 ** len(self.sets))

    def __len__(self) -> int:
        return len(self.sets)

    def to_dict(self) -> Dict:
        return {"resolution": self.space.resolution, "sets": [subset.cells.tolist() for subset in self.sets]}

    @classmethod
    def from_dict(cls, data: Dict) -> "Basis":
        space = GridSpace(int(data["resolution"]))
        return cls([CellSet(space, cells) for cells in data["sets"]])


def dyadic_basis(space: GridSpace, depth: Optional[int] = None) -> Basis:
    """Dyadic intervals of the grid, coarsest first: halves, then quarters, ..."""
    depth = min(space.log2, 3) if depth is None else depth
    if not 1 <= depth <= space.log2:
        raise ValidationError(f"depth must lie in [1, {space.log2}]")
    sets = []
    for level in range(1, depth + 1):
        width = space.resolution >> level
        sets.extend(space.interval(start, start + width) for start in range(0, space.resolution, width))
    return Basis(sets)


def metric_d(first: GridMap, second: GridMap, basis: Basis) -> Fraction:
    """Sum of 2^-i (mu(P A_i △ R A_i) + mu(P^-1 A_i △ R^-1 A_i))."""
    require_same_space(first, second, "metric_d")
    require_same_space(first, basis.sets[0], "metric_d")
    total = Fraction(0)
    for position, subset in enumerate(basis.sets):
        forward_gap = first.apply_power(1, subset).symmetric_difference_measure(second.apply_power(1, subset))
        backward_gap = first.apply_power(-1, subset).symmetric_difference_measure(second.apply_power(-1, subset))
        total += basis.weight(position) * (forward_gap + backward_gap)
    return total


def _power_gap(first: GridMap, second: GridMap, basis: Basis, n: int) -> Fraction:
    """a(P^n, R^n) evaluated with correlations of the n-th powers."""
    if n == 0:
        return Fraction(0)
    total = Fraction(0)
    for i, source in enumerate(basis.sets):
        first_image = first.power_of_cells(n, source.cells)
        second_image = second.power_of_cells(n, source.cells)
        for j, target in enumerate(basis.sets):
            gap = np.count_nonzero(target.mask[first_image]) - np.count_nonzero(target.mask[second_image])
            total += basis.weight(i) * basis.weight(j) * first.space.measure_of_count(abs(int(gap)))
    return total


def metric_a(first: GridMap, second: GridMap, basis: Basis) -> Fraction:
    """Sum of 2^-(i+j) |mu(P A_i ∩ A_j) - mu(R A_i ∩ A_j)|."""
    require_same_space(first, second, "metric_a")
    require_same_space(first, basis.sets[0], "metric_a")
    return _power_gap(first, second, basis, 1)


def metric_tau(first: GridMap, second: GridMap, basis: Basis, window: int) -> Fraction:
    """d(P, R) + max over |n| <= W of a(P^n, R^n)."""
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    require_same_space(first, second, "metric_tau")
    require_same_space(first, basis.sets[0], "metric_tau")
    leash = max(_power_gap(first, second, basis, n) for n in range(-window, window + 1))
    return metric_d(first, second, basis) + leash


class NeighborhoodSpec:
    """U(center, q, eps) with the quantifier over powers truncated to |n| <= window."""

    def __init__(self, center: Center, sets: Sequence[Union[CellSet, CylinderUnion]],
                 epsilon: Fraction, window: int):
        epsilon = Fraction(epsilon)
        if epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {epsilon}")
        if window < 1:
            raise ValidationError(f"window must be >= 1, got {window}")
        if not sets:
            raise ValidationError("a neighborhood needs a nonempty collection q")
        symbolic_center = isinstance(center, BernoulliShift)
        for subset in sets:
            if isinstance(subset, CylinderUnion) != symbolic_center:
                raise ValidationError("q must use the same representation as the center")
        self.center = center
        self.sets = tuple(sets)
        self.epsilon = epsilon
        self.window = window

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.center, BernoulliShift)

    @cached_property
    def center_values(self) -> Dict[Witness, Fraction]:
        """mu(T^n A ∩ B) for every |n| <= W and ordered pair of q-indices."""
        values = {}
        for n in range(-self.window, self.window + 1):
            for i, source in enumerate(self.sets):
                for j, target in enumerate(self.sets):
                    if self.is_symbolic:
                        values[(n, i, j)] = self.center.correlation(n, source, target)
                    else:
                        values[(n, i, j)] = correlation(self.center, n, source, target)
        return values

    def to_dict(self) -> Dict:
        return {
            "center": "bernoulli" if self.is_symbolic else self.center.to_dict(),
            "sets": [subset.to_dict() for subset in self.sets],
            "epsilon": self.epsilon,
            "window": self.window,
        }


@dataclass(frozen=True)
class MembershipReport:
    contained: bool
    max_deviation: Fraction
    witness: Witness
    epsilon: Fraction
    window: int

    def to_dict(self) -> Dict:
        return {
            "contained": self.contained,
            "max_deviation": self.max_deviation,
            "witness": {"n": self.witness[0], "a": self.witness[1], "b": self.witness[2]},
            "epsilon": self.epsilon,
            "window": self.window,
        }


def neighborhood_contains(spec: NeighborhoodSpec, candidate: Center,
                          bridge: Optional[Sequence[CellSet]] = None) -> MembershipReport:
    """
    Test candidate ∈ U(center, q, eps) over |n| <= W.

    Args:
        spec: The neighborhood.
        candidate: A GridMap (or the Bernoulli shift itself for symbolic centers).
        bridge: For a symbolic center and a GridMap candidate, the CellSet
            realizing each member of q on the candidate's grid.

    Returns:
        MembershipReport with the worst deviation and its witness (n, A, B);
        ties go to the smallest (n, A-index, B-index).

    Raises:
        ValidationError: If the representations differ and no bridge is given.
    """
    if isinstance(candidate, BernoulliShift):
        if not spec.is_symbolic:
            raise ValidationError("a symbolic candidate can only be compared with a symbolic center")
        return MembershipReport(Fraction(0) < spec.epsilon, Fraction(0), (-spec.window, 0, 0),
                                spec.epsilon, spec.window)

    if spec.is_symbolic:
        if bridge is None:
            msg = "a bridge is required to compare a symbolic center with a GridMap"
            logger.error(msg)
            raise ValidationError(msg)
        if len(bridge) != len(spec.sets):
            raise ValidationError(f"bridge has {len(bridge)} sets, q has {len(spec.sets)}")
        realized = list(bridge)
    else:
        realized = list(bridge) if bridge is not None else list(spec.sets)
    for subset in realized:
        require_same_space(candidate, subset, "neighborhood_contains")

    worst = Fraction(-1)
    witness: Witness = (-spec.window, 0, 0)
    center_values = spec.center_values
    for n in range(-spec.window, spec.window + 1):
        for i, source in enumerate(realized):
            image = candidate.power_of_cells(n, source.cells)
            for j, target in enumerate(realized):
                value = candidate.space.measure_of_count(np.count_nonzero(target.mask[image]))
                deviation = abs(center_values[(n, i, j)] - value)
                if deviation > worst:
                    worst, witness = deviation, (n, i, j)
    return MembershipReport(worst < spec.epsilon, worst, witness, spec.epsilon, spec.window)


@dataclass(frozen=True)
class RefinementResult:
    """Output of the first refinement: q̃ with per-set ranks and achieved precisions."""
    approximations: Tuple[CylinderUnion, ...]
    ranks: Tuple[int, ...]
    k: int
    precisions: Tuple[Fraction, ...]

    def to_dict(self) -> Dict:
        return {
            "approximations": [subset.to_dict() for subset in self.approximations],
            "ranks": list(self.ranks),
            "k": self.k,
            "precisions": list(self.precisions),
        }


def refine_step_one(sets: Sequence[CylinderUnion], epsilon: Fraction, max_rank: int) -> RefinementResult:
    """
    Approximate every A_j by a rank-k_j set with mu(Ã_j △ A_j) < eps/5,
    using the smallest such k_j <= K.

    Raises:
        PrecisionUnattainableError: If some A_j misses eps/5 at every rank <= K.
    """
    target = Fraction(epsilon) / 5
    approximations, ranks, precisions = [], [], []
    for position, subset in enumerate(sets):
        for rank in range(max_rank + 1):
            approximation, error = best_cylinder_approximation(subset, rank)
            if error < target:
                break
        else:
            msg = f"set {position} has majority-rule error >= {target} at every rank <= {max_rank}"
            logger.error(msg)
            raise PrecisionUnattainableError(msg)
        approximations.append(approximation)
        ranks.append(rank)
        precisions.append(error)
    k = max(ranks, default=0)
    logger.info(f"First refinement: ranks {ranks}, k = {k}")
    return RefinementResult(tuple(approximations), tuple(ranks), k, tuple(precisions))


def fine_radius(k: int, epsilon: Fraction) -> Fraction:
    """eps / (5 * 2^(4k+2))."""
    return Fraction(epsilon) / (5 * 2 ** (4 * k + 2))


def refine_step_two(k: int, epsilon: Fraction, window: int = 1) -> NeighborhoodSpec:
    """Neighborhood of the Bernoulli shift over all rank-k atoms with radius eps/(5*2^(4k+2))."""
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")
    return NeighborhoodSpec(BernoulliShift(), [CylinderUnion.of(piece) for piece in atoms(k)],
                            fine_radius(k, epsilon), window)


@dataclass
class Refinement:
    """The chain U(T, q̂, eps2) ⊂ U(T, q̃, eps/5) ⊂ U(T, q, eps)."""
    coarse: NeighborhoodSpec
    middle: NeighborhoodSpec
    fine: NeighborhoodSpec
    step_one: RefinementResult
    rank_floor: int = 0

    @property
    def k(self) -> int:
        return max(self.step_one.k, self.rank_floor)

    def grid(self, space: GridSpace) -> AtomGrid:
        """Grid realization fine enough for every set in the chain."""
        finest = max([self.k] + [subset.rank for subset in self.coarse.sets])
        return AtomGrid(space, self.k, finest)


def build_refinement(sets: Sequence[CylinderUnion], epsilon: Fraction, max_rank: int, window: int,
                     rank_floor: int = 0) -> Refinement:
    """Both refinements; q̂ uses rank max(k_j, rank_floor)."""
    epsilon = Fraction(epsilon)
    step_one = refine_step_one(sets, epsilon, max_rank)
    k = max(step_one.k, rank_floor)
    coarse = NeighborhoodSpec(BernoulliShift(), sets, epsilon, window)
    middle = NeighborhoodSpec(BernoulliShift(), step_one.approximations, epsilon / 5, window)
    fine = refine_step_two(k, epsilon, window)
    return Refinement(coarse, middle, fine, step_one, rank_floor)


@dataclass(frozen=True)
class ContainmentAudit:
    level: str
    fine: MembershipReport
    coarse: MembershipReport
    implication_holds: bool = field(default=True)

    def to_dict(self) -> Dict:
        return {
            "level": self.level,
            "fine": self.fine.to_dict(),
            "coarse": self.coarse.to_dict(),
            "implication_holds": self.implication_holds,
        }


def containment_audit(level: str, fine: NeighborhoodSpec, coarse: NeighborhoodSpec, candidate: GridMap,
                      fine_bridge: Optional[Sequence[CellSet]] = None,
                      coarse_bridge: Optional[Sequence[CellSet]] = None) -> ContainmentAudit:
    """
    Check fine-membership => coarse-membership for one candidate.

    Raises:
        CertificateViolationError: If the candidate is in the fine neighborhood
            but not in the coarse one.
    """
    fine_report = neighborhood_contains(fine, candidate, fine_bridge)
    coarse_report = neighborhood_contains(coarse, candidate, coarse_bridge)
    holds = coarse_report.contained or not fine_report.contained
    if not holds:
        msg = (f"{level}: candidate inside the fine neighborhood (deviation {fine_report.max_deviation}) "
               f"but outside the coarse one (deviation {coarse_report.max_deviation})")
        logger.critical(msg)
        raise CertificateViolationError(msg)
    logger.debug(f"Containment audit {level}: fine={fine_report.contained}, coarse={coarse_report.contained}")
    return ContainmentAudit(level, fine_report, coarse_report, holds)


def audit_refinement(refinement: Refinement, candidate: GridMap) -> List[ContainmentAudit]:
    """Both containment audits (q̂ -> q̃ and q̃ -> q) with bridges from the atom grid."""
    grid = refinement.grid(candidate.space)
    fine_bridge = grid.bridge(refinement.fine.sets)
    middle_bridge = grid.bridge(refinement.middle.sets)
    coarse_bridge = grid.bridge(refinement.coarse.sets)
    return [
        containment_audit("q_hat->q_tilde", refinement.fine, refinement.middle, candidate,
                          fine_bridge, middle_bridge),
        containment_audit("q_tilde->q", refinement.middle, refinement.coarse, candidate,
                          middle_bridge, coarse_bridge),
    ]
