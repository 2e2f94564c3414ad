import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DomainError
from .value_objects import DiagonalStrip, Segment, SubSquare

logger = logging.getLogger(__name__)

Volume = Segment | SubSquare

_NO_DISTANCE = np.iinfo(np.int64).max
_NEIGHBOR_STEPS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)


class DiagonalKind(Enum):
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "off_diagonal"


class ProjectionCase(Enum):
    ONE_PROJECTION_FREE = "case_A_one_projection_free"
    ALL_DISJOINT = "case_B_all_disjoint"
    NONE = "none"


class DistantRule(Enum):
    STRICT_8L = "8L"
    PROOF_6L_2D = "6L+2d"


class OracleRule(Enum):
    DIAGONAL_5L = "diagonal_5L"
    DISTANT_8L = "distant_8L"


def project(sq: SubSquare, axis: int) -> Segment:
    if axis == 1:
        return sq.horizontal
    if axis == 2:
        return sq.vertical
    raise DomainError(f"Projection axis must be 1 or 2, got {axis}")


def covering_segment(*volumes: Volume) -> Segment:
    segments: list[Segment] = []
    for volume in volumes:
        if isinstance(volume, Segment):
            segments.append(volume)
        else:
            segments.extend((volume.horizontal, volume.vertical))
    if not segments:
        raise DomainError("No volumes to cover")
    hull = segments[0]
    for segment in segments[1:]:
        hull = hull.hull(segment)
    return hull


def lookup_sites(sites: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Row index of every target in the lexicographically sorted `sites`, or -1."""
    if sites.shape[0] == 0:
        return np.full(targets.shape[0], -1, dtype=np.int64)
    low = sites.min(axis=0) - 1
    span = int(sites[:, 1].max() - low[1]) + 2
    keys = (sites[:, 0] - low[0]) * span + (sites[:, 1] - low[1])
    inside = np.all(targets >= low, axis=1) & (targets[:, 1] - low[1] < span)
    target_keys = (targets[:, 0] - low[0]) * span + (targets[:, 1] - low[1])
    positions = np.searchsorted(keys, target_keys)
    positions = np.minimum(positions, keys.shape[0] - 1)
    found = inside & (keys[positions] == target_keys)
    return np.where(found, positions, -1)


def boundary_of_sites(sites: np.ndarray) -> np.ndarray:
    """Inner vertex boundary: sites with at least one ℤ² (or ℤ) neighbor outside the set."""
    if sites.ndim == 1:
        present = set(int(x) for x in sites)
        return np.array([x for x in sites if x - 1 not in present or x + 1 not in present], dtype=np.int64)
    outside = np.zeros(sites.shape[0], dtype=bool)
    for step in _NEIGHBOR_STEPS:
        outside |= lookup_sites(sites, sites + step) < 0
    return sites[outside]


def boundary_sites(sq: SubSquare) -> np.ndarray:
    return boundary_of_sites(sq.sites)


def boundary_of(volume: Volume) -> np.ndarray:
    if isinstance(volume, Segment):
        return np.unique(np.array([volume.a, volume.b], dtype=np.int64))
    return boundary_sites(volume)


def classify_diagonal(sq: SubSquare, strip: DiagonalStrip) -> DiagonalKind:
    if np.any(strip.mask(sq.sites)):
        return DiagonalKind.DIAGONAL
    return DiagonalKind.OFF_DIAGONAL


@dataclass(frozen=True)
class _RowTable:
    heights: np.ndarray
    lows: np.ndarray
    highs: np.ndarray
    valid: np.ndarray

    @classmethod
    def of(cls, squares: list[SubSquare]) -> "_RowTable":
        width = max(len(sq.rows[0]) for sq in squares)
        shape = (len(squares), width)
        heights = np.zeros(shape, dtype=np.int64)
        lows = np.zeros(shape, dtype=np.int64)
        highs = np.zeros(shape, dtype=np.int64)
        valid = np.zeros(shape, dtype=bool)
        for i, sq in enumerate(squares):
            rows_h, rows_lo, rows_hi = sq.rows
            k = rows_h.shape[0]
            heights[i, :k] = rows_h
            lows[i, :k] = rows_lo
            highs[i, :k] = rows_hi
            valid[i, :k] = True
        return cls(heights, lows, highs, valid)

    def distance(self, first: np.ndarray, other: "_RowTable", second: np.ndarray) -> np.ndarray:
        ha, la, ua, va = self.heights[first], self.lows[first], self.highs[first], self.valid[first]
        hb, lb, ub, vb = other.heights[second], other.lows[second], other.highs[second], other.valid[second]
        dy = np.abs(ha[:, :, None] - hb[:, None, :])
        dx = np.maximum(lb[:, None, :] - ua[:, :, None], la[:, :, None] - ub[:, None, :])
        dist = np.maximum(np.maximum(dx, 0), dy)
        dist = np.where(va[:, :, None] & vb[:, None, :], dist, _NO_DISTANCE)
        return dist.min(axis=(1, 2))


def pairwise_dist_inf(first: list[SubSquare], second: list[SubSquare]) -> np.ndarray:
    """Max-norm set distance between first[i] and second[i] for every i."""
    if len(first) != len(second):
        raise DomainError("pairwise_dist_inf needs sequences of equal length")
    if not first:
        return np.zeros(0, dtype=np.int64)
    index = np.arange(len(first))
    return _RowTable.of(first).distance(index, _RowTable.of(second), index)


def dist_inf(sq_a: SubSquare, sq_b: SubSquare) -> int:
    return int(pairwise_dist_inf([sq_a], [sq_b])[0])


def is_l_distant(sq_a: SubSquare, sq_b: SubSquare, L: int) -> bool:
    return dist_inf(sq_a, sq_b) > 8 * L


def _intersects(lo_a: np.ndarray, hi_a: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray) -> np.ndarray:
    return (lo_a <= hi_b) & (lo_b <= hi_a)


def _case_codes(projections: np.ndarray) -> np.ndarray:
    """projections[:, k] = (lo, hi) of I1, J1, I2, J2; returns 2 for case B, 1 for case A, 0 otherwise."""
    lo, hi = projections[..., 0], projections[..., 1]
    meets = np.zeros(projections.shape[:1] + (4, 4), dtype=bool)
    for i in range(4):
        for j in range(4):
            if i != j:
                meets[:, i, j] = _intersects(lo[:, i], hi[:, i], lo[:, j], hi[:, j])
    all_disjoint = ~(meets[:, 0, 2] | meets[:, 0, 3] | meets[:, 1, 2] | meets[:, 1, 3])
    one_free = np.any(~np.any(meets, axis=2), axis=1)
    return np.where(all_disjoint, 2, np.where(one_free, 1, 0))


def _projection_bounds(squares: list[SubSquare]) -> np.ndarray:
    bounds = np.empty((len(squares), 2, 2), dtype=np.int64)
    for i, sq in enumerate(squares):
        bounds[i, 0] = sq.horizontal.a, sq.horizontal.b
        bounds[i, 1] = sq.vertical.a, sq.vertical.b
    return bounds


def projection_disjointness_case(
    sq_a: SubSquare, sq_b: SubSquare, L: int | None = None, d: int | None = None
) -> ProjectionCase:
    """Case of the four projections; L and d, when given, are checked as the caller's hypotheses."""
    if L is not None:
        for sq in (sq_a, sq_b):
            if sq.horizontal.b - sq.horizontal.a > 2 * L or sq.vertical.b - sq.vertical.a > 2 * L:
                raise DomainError(f"Projections of {sq} are longer than 2L={2 * L}")
    if d is not None:
        strip = DiagonalStrip(d)
        both_diagonal = all(classify_diagonal(sq, strip) is DiagonalKind.DIAGONAL for sq in (sq_a, sq_b))
        if both_diagonal and L is not None and L <= d:
            raise DomainError(f"Diagonal squares need L > d, got L={L}, d={d}")
    bounds = _projection_bounds([sq_a, sq_b])
    code = _case_codes(bounds.reshape(1, 4, 2))[0]
    return {2: ProjectionCase.ALL_DISJOINT, 1: ProjectionCase.ONE_PROJECTION_FREE}.get(
        int(code), ProjectionCase.NONE
    )


def subsquares_in(window: SubSquare, L: int) -> list[SubSquare]:
    """Clipped squares Λ_L(u), u ∈ ℤ²_≥, whose raw segments lie inside the window's raw segments."""
    squares = []
    for u1 in range(window.hseg.a + L, window.hseg.b - L + 1):
        for u2 in range(window.vseg.a + L, window.vseg.b - L + 1):
            if u1 >= u2:
                squares.append(SubSquare.centered((u1, u2), L))
    return squares


@dataclass
class OracleReport:
    rule: OracleRule
    L: int
    d: int
    squares: int
    pairs_checked: int = 0
    conclusion_failures: int = 0
    violations: list[tuple[SubSquare, SubSquare, int]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def verify_projection_rules(
    window: SubSquare, L: int, d: int, rule: OracleRule, block: int = 16
) -> OracleReport:
    """Exhaustively checks the projection-disjointness rule over all sub-square pairs in a window."""
    if L < 1:
        raise DomainError("L must be positive")
    squares = subsquares_in(window, L)
    if rule is OracleRule.DIAGONAL_5L:
        if L <= d:
            raise DomainError(f"The diagonal rule needs L > d, got L={L}, d={d}")
        strip = DiagonalStrip(d)
        squares = [sq for sq in squares if classify_diagonal(sq, strip) is DiagonalKind.DIAGONAL]
        threshold, accepted = 5 * L, (2,)
    else:
        threshold, accepted = 8 * L, (1, 2)

    report = OracleReport(rule=rule, L=L, d=d, squares=len(squares))
    if len(squares) < 2:
        return report

    table = _RowTable.of(squares)
    bounds = _projection_bounds(squares)
    n = len(squares)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        first, second = np.nonzero(rows[:, None] < np.arange(n)[None, :])
        first = rows[first]
        report.pairs_checked += int(first.shape[0])
        codes = _case_codes(np.concatenate((bounds[first], bounds[second]), axis=1))
        failing = ~np.isin(codes, accepted)
        if not np.any(failing):
            continue
        first, second = first[failing], second[failing]
        report.conclusion_failures += int(first.shape[0])
        distances = table.distance(first, table, second)
        far = distances > threshold
        for i, j, dist in zip(first[far], second[far], distances[far]):
            logger.error(
                "Projection rule %s violated by %s and %s at distance %s", rule.value, squares[i], squares[j], dist
            )
            report.violations.append((squares[i], squares[j], int(dist)))
    return report
