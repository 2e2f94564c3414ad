from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .exceptions import CoverageError, DomainError, EmptyWindowError
from .geometry import Volume, lookup_sites
from .models import InteractionSpec, PotentialSample, Statistics
from .value_objects import Segment, SubSquare

Site = int | tuple[int, int]

_FORWARD_STEPS = (np.array([1, 0], dtype=np.int64), np.array([0, 1], dtype=np.int64))


def site_key(site) -> Site:
    if np.ndim(site) == 0:
        return int(site)
    return int(site[0]), int(site[1])


class IndexedBasis:
    """Site → row lookup over an ordered basis (1D sites or 2D pairs)."""

    basis: np.ndarray

    @cached_property
    def index(self) -> dict[Site, int]:
        return {site_key(site): i for i, site in enumerate(self.basis)}

    def index_of(self, site) -> int:
        key = site_key(site)
        try:
            return self.index[key]
        except KeyError:
            raise DomainError(f"site {key} is not in the basis") from None

    def contains_site(self, site) -> bool:
        return site_key(site) in self.index

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix(IndexedBasis):
    basis: np.ndarray = field(repr=False)
    entries: np.ndarray = field(repr=False)
    g: float = 0.0
    statistics: Statistics | None = None
    d: int | None = None

    def __post_init__(self):
        for array in (self.basis, self.entries):
            array.setflags(write=False)
        n = self.basis.shape[0]
        if self.entries.shape != (n, n):
            raise DomainError(f"Matrix shape {self.entries.shape} does not match basis of {n} sites")

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    def triplets(self) -> list[tuple[int, int, float]]:
        rows, cols = np.nonzero(self.entries)
        return [(int(i), int(j), float(self.entries[i, j])) for i, j in zip(rows, cols)]


def _require_coverage(V: PotentialSample, *segments: Segment) -> None:
    for segment in segments:
        if not V.covers(segment):
            raise CoverageError(f"window {segment}", V.window)


def _assemble_lattice(sites: np.ndarray, diagonal: np.ndarray, reflection: bool) -> np.ndarray:
    entries = np.diag(diagonal).astype(float)
    on_diagonal = sites[:, 0] == sites[:, 1]
    for step in _FORWARD_STEPS:
        targets = lookup_sites(sites, sites + step)
        rows = np.nonzero(targets >= 0)[0]
        cols = targets[rows]
        weights = np.ones(rows.shape[0])
        if reflection:
            weights[on_diagonal[rows] | on_diagonal[cols]] = 2.0
        entries[rows, cols] = weights
        entries[cols, rows] = weights
    return entries


def build_h1(window: Segment, V: PotentialSample, g: float) -> HamiltonianMatrix:
    _require_coverage(V, window)
    n = window.size
    entries = np.diag(g * V.values_at(window.sites)).astype(float)
    hops = np.arange(n - 1)
    entries[hops, hops + 1] = 1.0
    entries[hops + 1, hops] = 1.0
    return HamiltonianMatrix(basis=window.sites, entries=entries, g=g)


def build_h2(
    sq: SubSquare, V: PotentialSample, inter: InteractionSpec, g: float, stat: Statistics
) -> HamiltonianMatrix:
    if not sq.clip:
        raise DomainError("Interacting two-particle windows must be clipped to x1 >= x2")
    _require_coverage(V, sq.horizontal, sq.vertical)
    sites = sq.sites
    if stat is Statistics.FERMIONIC:
        sites = sites[sites[:, 0] != sites[:, 1]]
    if sites.shape[0] == 0:
        raise EmptyWindowError("empty basis")
    diagonal = inter.energy(sites) + g * (V.values_at(sites[:, 0]) + V.values_at(sites[:, 1]))
    entries = _assemble_lattice(sites, diagonal, reflection=stat is Statistics.BOSONIC)
    return HamiltonianMatrix(basis=sites.copy(), entries=entries, g=g, statistics=stat, d=inter.d)


def build_h2_ni(sq_a: Segment, sq_b: Segment, V: PotentialSample, g: float) -> HamiltonianMatrix:
    _require_coverage(V, sq_a, sq_b)
    sites = SubSquare(sq_a, sq_b, clip=False).sites
    diagonal = g * (V.values_at(sites[:, 0]) + V.values_at(sites[:, 1]))
    entries = _assemble_lattice(sites, diagonal, reflection=False)
    return HamiltonianMatrix(basis=sites.copy(), entries=entries, g=g)


def build_operator(
    volume: Volume,
    V: PotentialSample,
    g: float,
    inter: InteractionSpec | None = None,
    stat: Statistics = Statistics.FERMIONIC,
) -> HamiltonianMatrix:
    if isinstance(volume, Segment):
        return build_h1(volume, V, g)
    if volume.clip:
        return build_h2(volume, V, inter or InteractionSpec(), g, stat)
    return build_h2_ni(volume.hseg, volume.vseg, V, g)


def tensor_sum_check(
    h1a: HamiltonianMatrix, h1b: HamiltonianMatrix, h2: HamiltonianMatrix, tol: float = 1e-9
) -> bool:
    if h2.dimension != h1a.dimension * h1b.dimension:
        raise DomainError(
            f"dimension mismatch: {h2.dimension} != {h1a.dimension} x {h1b.dimension}"
        )
    sums = np.sort(np.add.outer(linalg.eigvalsh(h1a.entries), linalg.eigvalsh(h1b.entries)).ravel())
    return bool(np.max(np.abs(np.sort(linalg.eigvalsh(h2.entries)) - sums)) <= tol)
