"""Deterministic implication checks and the singular sub-square packing count."""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DomainError
from .geometry import DiagonalKind, DistantRule, classify_diagonal, pairwise_dist_inf, subsquares_in
from .models import InteractionSpec, PotentialSample, Statistics
from .msa import MassVariant, Verdict, anchor_site, classify_resonant, classify_tunneling, mass_degrade
from .msa import singular_or_resonant
from .operators import build_h1, build_h2_ni, build_operator
from .spectral import eig_sym
from .value_objects import DiagonalStrip, Segment, SubSquare

logger = logging.getLogger(__name__)

CONCLUSION_SLACK = 1e-9
NODE_BUDGET = 200_000
EXACT_SEARCH_LIMIT = 1024


class PackingMode(Enum):
    DIAGONAL_PAIRWISE_DISTANT = "diagonal_pairwise_distant"
    OFF_DIAGONAL_DISJOINT = "off_diagonal_disjoint"
    ALL_DISJOINT = "all_disjoint"


@dataclass(frozen=True)
class ImplicationRecord:
    variant: str
    E: float
    m: float
    m_prime: float
    hypotheses: dict[str, bool]
    conclusion: Verdict | None = None
    witnesses: dict = field(default_factory=dict)

    @property
    def hypotheses_hold(self) -> bool:
        return all(self.hypotheses.values())

    @property
    def holds(self) -> bool:
        if not self.hypotheses_hold:
            return True
        return self.conclusion.witness <= self.conclusion.threshold * (1 + CONCLUSION_SLACK)


@dataclass(frozen=True)
class PackingCount:
    count: int
    greedy: int
    exact: bool
    singular: int
    candidates: int
    sites: list = field(default_factory=list)


def _log_record(record: ImplicationRecord) -> ImplicationRecord:
    if not record.hypotheses_hold:
        return record
    if record.holds:
        logger.info(
            "Implication %s satisfied at E=%.6g: |G|=%.3e <= %.3e",
            record.variant,
            record.E,
            record.conclusion.witness,
            record.conclusion.threshold,
        )
    else:
        logger.error(
            "Implication %s counterexample at E=%.6g: |G|=%.3e > %.3e, witnesses %s",
            record.variant,
            record.E,
            record.conclusion.witness,
            record.conclusion.threshold,
            record.witnesses,
        )
    return record


def check_implication_nr_nt_ns(
    volume: Segment | SubSquare,
    V: PotentialSample,
    E: float,
    m: float,
    beta: float,
    variant: MassVariant,
    g: float,
    d: int = 0,
) -> ImplicationRecord:
    """Non-resonance plus non-tunneling must give non-singularity with the degraded mass."""
    if variant is MassVariant.SEGMENT:
        if not isinstance(volume, Segment):
            raise DomainError("The segment implication needs a Segment")
        if m < 2:
            raise DomainError(f"The segment implication needs m >= 2, got {m}")
        L = volume.radius
        sd = eig_sym(build_h1(volume, V, g))
        nr, nt = classify_resonant(sd, E, L, beta), classify_tunneling(sd, volume, m)
        hypotheses = {"non_resonant": not nr.flag, "non_tunneling": not nt.flag}
        witnesses = {"spectral_dist": nr.witness, "tunneling_sum": nt.witness}
        center = volume.center
    else:
        if not isinstance(volume, SubSquare) or not volume.is_square:
            raise DomainError("The product implication needs a square")
        if classify_diagonal(volume, DiagonalStrip(d)) is DiagonalKind.DIAGONAL:
            raise DomainError(f"The product implication needs an off-diagonal square, got {volume}")
        L = volume.radius
        sd = eig_sym(build_h2_ni(volume.hseg, volume.vseg, V, g))
        nr = classify_resonant(sd, E, L, beta)
        nt_h = classify_tunneling(eig_sym(build_h1(volume.hseg, V, g)), volume.hseg, m)
        nt_v = classify_tunneling(eig_sym(build_h1(volume.vseg, V, g)), volume.vseg, m)
        hypotheses = {
            "non_resonant": not nr.flag,
            "horizontal_non_tunneling": not nt_h.flag,
            "vertical_non_tunneling": not nt_v.flag,
        }
        witnesses = {"spectral_dist": nr.witness, "tunneling_sum": max(nt_h.witness, nt_v.witness)}
        center = volume.center

    m_prime = mass_degrade(m, L, beta, variant)
    record = ImplicationRecord(variant=variant.value, E=E, m=m, m_prime=m_prime, hypotheses=hypotheses)
    if record.hypotheses_hold:
        conclusion = singular_or_resonant(sd, center, volume, E, m_prime, L)
        witnesses |= {"green_max": conclusion.witness, "boundary_site": conclusion.site}
        record = ImplicationRecord(variant.value, E, m, m_prime, hypotheses, conclusion, witnesses)
    return _log_record(record)


def _far(distances: np.ndarray, mode: PackingMode, L: int, rule: DistantRule, d: int) -> np.ndarray:
    if mode is not PackingMode.DIAGONAL_PAIRWISE_DISTANT:
        return distances >= 1
    if rule is DistantRule.STRICT_8L:
        return distances > 8 * L
    return distances >= 6 * L + 2 * d


def _compatible_pairs(squares: list[SubSquare], mode: PackingMode, L: int, rule: DistantRule, d: int) -> np.ndarray:
    n = len(squares)
    compatible = np.zeros((n, n), dtype=bool)
    if n < 2:
        return compatible
    first, second = np.triu_indices(n, k=1)
    far = _far(pairwise_dist_inf([squares[i] for i in first], [squares[j] for j in second]), mode, L, rule, d)
    compatible[first, second] = far
    compatible[second, first] = far
    return compatible


def _greedy_packing(squares: list[SubSquare], mode: PackingMode, L: int, rule: DistantRule, d: int) -> list[int]:
    """Lexicographic greedy packing; distances only against the squares already chosen."""
    chosen: list[int] = []
    for i, sq in enumerate(squares):
        others = [squares[j] for j in chosen]
        if all(_far(pairwise_dist_inf([sq] * len(others), others), mode, L, rule, d)):
            chosen.append(i)
    return chosen


def _colour_bound(candidates: int, masks: list[int]) -> int:
    """Greedy colouring of the candidates into mutually incompatible classes; a packing takes one per class."""
    colours, remaining = 0, candidates
    while remaining:
        colours += 1
        available = remaining
        while available:
            top = 1 << (available.bit_length() - 1)
            remaining &= ~top
            available &= ~top & ~masks[top.bit_length() - 1]
    return colours


def _maximum_packing(compatible: np.ndarray, lower: int, budget: int) -> tuple[int, bool]:
    """Branch and bound over pairwise compatible subsets; bitsets are Python ints."""
    n = compatible.shape[0]
    masks = [sum(1 << int(j) for j in np.nonzero(compatible[i])[0]) for i in range(n)]
    best, nodes = lower, 0
    stack = [(0, (1 << n) - 1)]
    while stack:
        if nodes >= budget:
            return best, False
        nodes += 1
        size, candidates = stack.pop()
        if candidates == 0:
            best = max(best, size)
            continue
        if size + _colour_bound(candidates, masks) <= best:
            continue
        top = candidates.bit_length() - 1
        stack.append((size, candidates & ~(1 << top)))
        stack.append((size + 1, candidates & masks[top]))
    return best, True


def singular_profile(
    sq: SubSquare,
    V: PotentialSample,
    energies: np.ndarray,
    m: float,
    g: float,
    inter: InteractionSpec,
    stat: Statistics,
) -> np.ndarray:
    """(E, m)-singularity of one sub-square at every energy of the grid."""
    sd = eig_sym(build_operator(sq, V, g, inter, stat))
    center = anchor_site(sd.basis, sq.center)
    return np.array([singular_or_resonant(sd, center, sq, float(E), m, sq.radius).flag for E in energies])


def packing_candidates(sq_big: SubSquare, L_small: int, mode: PackingMode, d: int) -> list[SubSquare]:
    if L_small < 1 or 2 * L_small + 1 > sq_big.hseg.size:
        raise DomainError(f"Sub-square radius {L_small} does not fit into {sq_big}")
    strip = DiagonalStrip(d)
    candidates = subsquares_in(sq_big, L_small)
    if mode is PackingMode.DIAGONAL_PAIRWISE_DISTANT:
        return [sq for sq in candidates if classify_diagonal(sq, strip) is DiagonalKind.DIAGONAL]
    if mode is PackingMode.OFF_DIAGONAL_DISJOINT:
        return [sq for sq in candidates if classify_diagonal(sq, strip) is DiagonalKind.OFF_DIAGONAL]
    return candidates


def packing_counts(
    sq_big: SubSquare,
    V: PotentialSample,
    energies: np.ndarray,
    m: float,
    L_small: int,
    g: float,
    inter: InteractionSpec = InteractionSpec(),
    stat: Statistics = Statistics.FERMIONIC,
    mode: PackingMode = PackingMode.DIAGONAL_PAIRWISE_DISTANT,
    rule: DistantRule = DistantRule.STRICT_8L,
    node_budget: int = NODE_BUDGET,
) -> list[PackingCount]:
    """Largest number of compatible (E, m)-singular sub-squares of radius L_small, per energy."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    candidates = packing_candidates(sq_big, L_small, mode, inter.d)
    flags = np.zeros((len(candidates), energies.shape[0]), dtype=bool)
    for i, sq in enumerate(candidates):
        flags[i] = singular_profile(sq, V, energies, m, g, inter, stat)

    counts = []
    for column in flags.T:
        singular = [sq for sq, flag in zip(candidates, column) if flag]
        greedy = _greedy_packing(singular, mode, L_small, rule, inter.d)
        if len(singular) > EXACT_SEARCH_LIMIT:
            count, exact = len(greedy), False
            logger.warning(
                "Packing in %s has %s singular sub-squares, above %s; greedy count %s is a lower bound",
                sq_big,
                len(singular),
                EXACT_SEARCH_LIMIT,
                count,
            )
        else:
            compatible = _compatible_pairs(singular, mode, L_small, rule, inter.d)
            count, exact = _maximum_packing(compatible, len(greedy), node_budget)
            if not exact:
                logger.warning(
                    "Packing search in %s stopped after %s nodes; count %s is a lower bound", sq_big, node_budget, count
                )
        counts.append(
            PackingCount(
                count=count,
                greedy=len(greedy),
                exact=exact,
                singular=len(singular),
                candidates=len(candidates),
                sites=[singular[i].center for i in greedy],
            )
        )
    return counts


def count_singular_subsquares(
    sq_big: SubSquare,
    V: PotentialSample,
    E: float,
    m: float,
    L_small: int,
    g: float,
    inter: InteractionSpec = InteractionSpec(),
    stat: Statistics = Statistics.FERMIONIC,
    mode: PackingMode = PackingMode.DIAGONAL_PAIRWISE_DISTANT,
    rule: DistantRule = DistantRule.STRICT_8L,
    node_budget: int = NODE_BUDGET,
) -> PackingCount:
    return packing_counts(sq_big, V, np.array([E]), m, L_small, g, inter, stat, mode, rule, node_budget)[0]


def check_subsquare_implication(
    sq_big: SubSquare,
    V: PotentialSample,
    E: float,
    m_small: float,
    m_big: float,
    L_small: int,
    K: int,
    beta: float,
    g: float,
    inter: InteractionSpec = InteractionSpec(),
    stat: Statistics = Statistics.FERMIONIC,
) -> ImplicationRecord:
    """A non-resonant square with at most K disjoint singular sub-squares should be non-singular."""
    if not sq_big.is_square:
        raise DomainError("window not centered")
    L = sq_big.radius
    sd = eig_sym(build_operator(sq_big, V, g, inter, stat))
    nr = classify_resonant(sd, E, L, beta)
    packing = count_singular_subsquares(
        sq_big, V, E, m_small, L_small, g, inter, stat, mode=PackingMode.ALL_DISJOINT
    )
    hypotheses = {"non_resonant": not nr.flag, "few_singular": packing.count <= K}
    witnesses = {"spectral_dist": nr.witness, "singular_count": packing.count, "count_exact": packing.exact}
    conclusion = None
    if all(hypotheses.values()):
        center = anchor_site(sd.basis, sq_big.center)
        conclusion = singular_or_resonant(sd, center, sq_big, E, m_big, L)
        witnesses |= {"green_max": conclusion.witness, "boundary_site": conclusion.site}
    record = ImplicationRecord("subsquare", E, m_small, m_big, hypotheses, conclusion, witnesses)
    return _log_record(record)
