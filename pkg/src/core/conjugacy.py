"""
Conjugating a desk-scale map S into a neighborhood of the Bernoulli shift.

The X-grid realizes the rank-k atoms of the generating partition as equal
consecutive blocks; the Y-grid carries S and the partition generated by a
half-measure set A. Q sends each block onto the matching η-atom up to a small
gap, and V = Q⁻¹SQ is certified against T atom by atom with exact arithmetic.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .independence import DEFAULT_SCAN_BUDGET, HalfMeasureSearch, find_half_measure_independent_set
from .measure_core import CellSet, GridMap, require_same_space
from .symbolic import AtomGrid, BernoulliShift, CylinderUnion, atoms
from .topology import (ContainmentAudit, MembershipReport, Refinement, audit_refinement,
                       build_refinement, neighborhood_contains)
from ..utils.exceptions import GapUnattainableError, ValidationError

logger = logging.getLogger(__name__)
logger.propagate = True


@dataclass(frozen=True)
class BudgetLedger:
    """Exact error budget splitting eps over the two refinements and the Q construction."""
    epsilon: Fraction
    k: int
    eps1: Fraction
    eps2: Fraction
    gap_bound: Fraction
    delta: Fraction

    @classmethod
    def from_epsilon(cls, epsilon: Fraction, k: int) -> "BudgetLedger":
        epsilon = Fraction(epsilon)
        if epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {epsilon}")
        if k < 0:
            raise ValidationError(f"k must be nonnegative, got {k}")
        eps2 = epsilon / (5 * 2 ** (4 * k + 2))
        gap_bound = eps2 / 3
        return cls(epsilon, k, epsilon / 5, eps2, gap_bound, gap_bound / (4 * k + 2))

    @property
    def well_target(self) -> Fraction:
        """Well-deviation needed from the S-image family: (4k+2)·delta."""
        return (4 * self.k + 2) * self.delta

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon,
            "k": self.k,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "gap_bound": self.gap_bound,
            "delta": self.delta,
        }


def build_eta_atoms(transformation: GridMap, half_set: CellSet, k: int) -> Tuple[List[CellSet], Fraction]:
    """
    Atoms of ⋁_{|i|<=k} S^i{A, A^c} in the canonical pattern order.

    The atom for (b_-k, ..., b_k) is ⋂ S^i(F_{b_i}) with F_0 = A and F_1 = A^c.

    Returns:
        (atoms, max |mu(atom) - 2^-(2k+1)|)

    Raises:
        ValidationError: If mu(A) != 1/2.
    """
    require_same_space(transformation, half_set, "build_eta_atoms")
    if half_set.measure != Fraction(1, 2):
        msg = f"the generating set must have measure 1/2, got {half_set.measure}"
        logger.error(msg)
        raise ValidationError(msg)
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")

    width = 2 * k + 1
    codes = np.zeros(transformation.space.resolution, dtype=np.int64)
    for position, i in enumerate(range(-k, k + 1)):
        outside = ~transformation.apply_power(i, half_set).mask
        codes |= outside.astype(np.int64) << (width - 1 - position)

    uniform = Fraction(1, 2 ** width)
    eta_atoms = [CellSet(transformation.space, np.flatnonzero(codes == index)) for index in range(2 ** width)]
    deviation = max(abs(piece.measure - uniform) for piece in eta_atoms)
    logger.debug(f"Built {len(eta_atoms)} eta atoms at rank {k}, max measure deviation {deviation}")
    return eta_atoms, deviation


def build_Q(xi_blocks: Sequence[CellSet], eta_atoms: Sequence[CellSet],
            g_target: Optional[Fraction]) -> Tuple[GridMap, Fraction]:
    """
    Cell bijection X -> Y sending every ξ block onto its η atom up to the gap.

    Within each pair the first min(|ξ_t|, |η_t|) cells are matched in order.
    Leftover ξ cells and leftover η cells are then paired greedily, both taken
    by ascending atom index and ascending cell.

    Args:
        xi_blocks: Rank-k atom blocks on the X-grid, each of N / 2^(2k+1) cells.
        eta_atoms: The η partition on the Y-grid, same order.
        g_target: Gap the result must stay below, or None to accept any gap.

    Returns:
        (Q, max_t mu(Q(ξ_t) △ η_t))

    Raises:
        IncompatibleSpacesError: If the grids differ in resolution.
        ValidationError: If the blocks or atoms are malformed.
        GapUnattainableError: If the achieved gap is not below ``g_target``.
    """
    if len(xi_blocks) != len(eta_atoms) or not xi_blocks:
        raise ValidationError(f"{len(xi_blocks)} xi blocks cannot pair with {len(eta_atoms)} eta atoms")
    space = xi_blocks[0].space
    require_same_space(xi_blocks[0], eta_atoms[0], "build_Q")
    block_size = space.resolution // len(xi_blocks)
    if any(len(block) != block_size for block in xi_blocks):
        raise ValidationError(f"xi blocks must all have {block_size} cells")
    if sum(len(piece) for piece in eta_atoms) != space.resolution:
        raise ValidationError("eta atoms do not partition the grid")

    forward = np.full(space.resolution, -1, dtype=np.int64)
    leftover_x, leftover_y = [], []
    for source, target in zip(xi_blocks, eta_atoms):
        require_same_space(source, target, "build_Q")
        matched = min(len(source), len(target))
        forward[source.cells[:matched]] = target.cells[:matched]
        leftover_x.append(source.cells[matched:])
        leftover_y.append(target.cells[matched:])
    forward[np.concatenate(leftover_x)] = np.concatenate(leftover_y)

    conjugator = GridMap(space, forward)
    gap = max(conjugator(source).symmetric_difference_measure(target)
              for source, target in zip(xi_blocks, eta_atoms))
    if g_target is not None and gap >= g_target:
        msg = f"achieved gap {gap} is not below {g_target}; improve delta or raise N"
        logger.error(msg)
        raise GapUnattainableError(msg)
    logger.info(f"Built Q with gap {gap}")
    return conjugator, gap


def conjugate(conjugator: GridMap, transformation: GridMap) -> GridMap:
    """V = Q⁻¹ ∘ S ∘ Q."""
    require_same_space(conjugator, transformation, "conjugate")
    return conjugator.inverse().compose(transformation).compose(conjugator)


@dataclass(frozen=True)
class DeviationRow:
    u: int
    v: int
    m: int
    t_side: Fraction
    v_side: Fraction
    deviation: Fraction

    def to_dict(self) -> Dict:
        return {"u": self.u, "v": self.v, "m": self.m, "t_side": self.t_side,
                "v_side": self.v_side, "deviation": self.deviation}


@dataclass(frozen=True)
class ConjugacyCertificate:
    ledger: BudgetLedger
    window: int
    achieved_delta: Fraction
    achieved_gap: Fraction
    deviations: Tuple[DeviationRow, ...]
    bound: Fraction
    max_deviation: Fraction
    within_bound: bool
    hypotheses_hold: bool
    passed: bool

    def csv_rows(self) -> List[Dict]:
        return [row.to_dict() for row in self.deviations]

    def to_dict(self) -> Dict:
        return {
            "ledger": self.ledger.to_dict(),
            "window": self.window,
            "achieved_delta": self.achieved_delta,
            "achieved_gap": self.achieved_gap,
            "bound": self.bound,
            "max_deviation": self.max_deviation,
            "within_bound": self.within_bound,
            "hypotheses_hold": self.hypotheses_hold,
            "pass": self.passed,
            "deviations": self.csv_rows(),
        }


def verify_certificate(shift: BernoulliShift, conjugated: GridMap, k: int, window: int, ledger: BudgetLedger,
                       achieved_delta: Fraction, achieved_gap: Fraction,
                       grid: Optional[AtomGrid] = None) -> ConjugacyCertificate:
    """
    Fill the (u, v, m) table |mu(V^m B_u ∩ B_v) - mu(T^m B_u ∩ B_v)| for all
    rank-k atoms and |m| <= W.

    The T side is exact cylinder arithmetic; the V side counts cells of the
    grid blocks. Every entry must stay within achieved_delta + 2·achieved_gap;
    the certificate passes iff additionally the largest entry is below eps2.
    A failed check is returned in the certificate, never raised.
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    grid = AtomGrid(conjugated.space, k) if grid is None else grid
    if grid.block_rank != k:
        raise ValidationError(f"grid blocks realize rank {grid.block_rank}, not {k}")
    symbolic_atoms = [CylinderUnion.of(piece) for piece in atoms(k)]
    count = len(symbolic_atoms)
    achieved_delta, achieved_gap = Fraction(achieved_delta), Fraction(achieved_gap)
    bound = achieved_delta + 2 * achieved_gap

    rows = []
    for m in range(-window, window + 1):
        for u, source in enumerate(symbolic_atoms):
            images = conjugated.power_of_cells(m, grid.block(u).cells)
            counts = np.bincount(images // grid.block_size, minlength=count)
            for v, target in enumerate(symbolic_atoms):
                t_side = shift.correlation(m, source, target)
                v_side = conjugated.space.measure_of_count(int(counts[v]))
                rows.append(DeviationRow(u, v, m, t_side, v_side, abs(v_side - t_side)))

    max_deviation = max(row.deviation for row in rows)
    within_bound = max_deviation <= bound
    hypotheses_hold = achieved_delta < ledger.well_target and achieved_gap < ledger.gap_bound
    passed = within_bound and max_deviation < ledger.eps2
    if not within_bound:
        logger.critical(f"Deviation {max_deviation} exceeds the decomposition bound {bound}")
    if hypotheses_hold and max_deviation >= ledger.eps2:
        logger.critical(f"Budget hypotheses hold but deviation {max_deviation} >= eps2 {ledger.eps2}")
    logger.info(f"Certificate: max deviation {max_deviation}, bound {bound}, eps2 {ledger.eps2}, pass={passed}")
    return ConjugacyCertificate(ledger, window, achieved_delta, achieved_gap, tuple(rows), bound,
                                max_deviation, within_bound, hypotheses_hold, passed)


@dataclass
class TheoremOneRun:
    """Every artifact of one conjugacy run, ending with the verdict for U(T, q, eps)."""
    refinement: Refinement
    ledger: BudgetLedger
    independence_window: int
    search: HalfMeasureSearch
    eta_deviation: Fraction
    conjugator: GridMap
    conjugated: GridMap
    certificate: ConjugacyCertificate
    audits: List[ContainmentAudit]
    membership: MembershipReport
    notes: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return self.membership.contained

    def to_dict(self) -> Dict:
        return {
            "refinement": self.refinement.step_one.to_dict(),
            "coarse_neighborhood": self.refinement.coarse.to_dict(),
            "ledger": self.ledger.to_dict(),
            "independence_window": self.independence_window,
            "independence": self.search.to_dict(),
            "eta_deviation": self.eta_deviation,
            "certificate": self.certificate.to_dict(),
            "audits": [audit.to_dict() for audit in self.audits],
            "membership": self.membership.to_dict(),
            "notes": list(self.notes),
            "verdict": self.verdict,
        }


def theorem_one_demo(transformation: GridMap, sets: Sequence[CylinderUnion], epsilon: Fraction, window: int,
                     max_rank: int, seed: int, trials: int, independence_window: Optional[int] = None,
                     scan_budget: int = DEFAULT_SCAN_BUDGET, rank_floor: int = 0) -> TheoremOneRun:
    """
    Build V = Q⁻¹SQ and decide V ∈ U(T, q, eps) over |n| <= W.

    Runs both refinements, the seeded half-measure search with the ledger's
    well target, the η atoms, Q, the certificate, both containment audits and
    finally a direct membership check against (q, eps). A failed search is not
    fatal: Q is built without a gap target and the certificate is stated
    against the achieved constants.

    Raises:
        ValidationError: If the independence window is smaller than k + W.
    """
    epsilon = Fraction(epsilon)
    refinement = build_refinement(sets, epsilon, max_rank, window, rank_floor)
    k = refinement.k
    ledger = BudgetLedger.from_epsilon(epsilon, k)
    independence_window = k + window if independence_window is None else independence_window
    if independence_window < k + window:
        msg = f"independence window {independence_window} is smaller than k + W = {k + window}"
        logger.error(msg)
        raise ValidationError(msg)

    notes = []
    cardinality = min(4 * k + 2, 2 * independence_window + 1)
    search = find_half_measure_independent_set(transformation, independence_window, ledger.well_target,
                                               seed, trials, cardinality, scan_budget)
    if not search.success:
        notes.append(f"independence search missed {ledger.well_target}; "
                     f"certificate uses achieved delta {search.report.deviation}")

    eta_atoms, eta_deviation = build_eta_atoms(transformation, search.subset, k)
    grid = refinement.grid(transformation.space)
    conjugator, gap = build_Q(grid.blocks(), eta_atoms, ledger.gap_bound if search.success else None)
    conjugated = conjugate(conjugator, transformation)

    certificate = verify_certificate(BernoulliShift(), conjugated, k, window, ledger,
                                     search.report.deviation, gap, grid)
    audits = audit_refinement(refinement, conjugated)
    membership = neighborhood_contains(refinement.coarse, conjugated, grid.bridge(refinement.coarse.sets))
    logger.info(f"Theorem one run: certificate pass={certificate.passed}, membership={membership.contained}")
    return TheoremOneRun(refinement, ledger, independence_window, search, eta_deviation, conjugator,
                         conjugated, certificate, audits, membership, notes)
