from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DomainError, EmptyWindowError

Site2D = tuple[int, int]


@dataclass(frozen=True)
class Segment:
    """Lattice segment [a, b] ∩ ℤ with inclusive endpoints."""

    a: int
    b: int

    def __post_init__(self):
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        self._validate()

    def _validate(self):
        if self.a > self.b:
            raise DomainError(f"Segment [{self.a},{self.b}] must satisfy a <= b")

    @classmethod
    def centered(cls, u: int, radius: int) -> "Segment":
        if radius < 0:
            raise DomainError("Segment radius must be nonnegative")
        return cls(u - radius, u + radius)

    @property
    def size(self) -> int:
        return self.b - self.a + 1

    @property
    def is_centered(self) -> bool:
        return (self.b - self.a) % 2 == 0

    @property
    def center(self) -> int:
        if not self.is_centered:
            raise DomainError("window not centered")
        return (self.a + self.b) // 2

    @property
    def radius(self) -> int:
        if not self.is_centered:
            raise DomainError("window not centered")
        return (self.b - self.a) // 2

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1, dtype=np.int64)

    def contains(self, x: int) -> bool:
        return self.a <= x <= self.b

    def covers(self, other: "Segment") -> bool:
        return self.a <= other.a and other.b <= self.b

    def intersects(self, other: "Segment") -> bool:
        return self.a <= other.b and other.a <= self.b

    def hull(self, other: "Segment") -> "Segment":
        return Segment(min(self.a, other.a), max(self.b, other.b))

    def __str__(self) -> str:
        return f"[{self.a},{self.b}]"


@dataclass(frozen=True)
class SubSquare:
    """Lattice window hseg × vseg, optionally intersected with the half-plane x1 >= x2."""

    hseg: Segment
    vseg: Segment
    clip: bool = True

    def __post_init__(self):
        if self.sites.shape[0] == 0:
            raise EmptyWindowError()

    @classmethod
    def centered(cls, u: Site2D, radius: int, clip: bool = True) -> "SubSquare":
        return cls(Segment.centered(u[0], radius), Segment.centered(u[1], radius), clip=clip)

    @cached_property
    def sites(self) -> np.ndarray:
        x1, x2 = np.meshgrid(self.hseg.sites, self.vseg.sites, indexing="ij")
        grid = np.stack((x1.ravel(), x2.ravel()), axis=1)
        if self.clip:
            grid = grid[grid[:, 0] >= grid[:, 1]]
        return grid

    @cached_property
    def rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Horizontal rows (x2, lowest x1, highest x1) of the site set."""
        heights = self.vseg.sites
        lows = np.full(heights.shape, self.hseg.a, dtype=np.int64)
        if self.clip:
            lows = np.maximum(lows, heights)
        highs = np.full(heights.shape, self.hseg.b, dtype=np.int64)
        keep = lows <= highs
        return heights[keep], lows[keep], highs[keep]

    @property
    def size(self) -> int:
        return int(self.sites.shape[0])

    @property
    def horizontal(self) -> Segment:
        if self.clip:
            return Segment(max(self.hseg.a, self.vseg.a), self.hseg.b)
        return self.hseg

    @property
    def vertical(self) -> Segment:
        if self.clip:
            return Segment(self.vseg.a, min(self.vseg.b, self.hseg.b))
        return self.vseg

    @property
    def is_square(self) -> bool:
        return self.hseg.is_centered and self.vseg.is_centered and self.hseg.size == self.vseg.size

    @property
    def center(self) -> Site2D:
        return self.hseg.center, self.vseg.center

    @property
    def radius(self) -> int:
        if not self.is_square:
            raise DomainError("window not centered")
        return self.hseg.radius

    def __str__(self) -> str:
        suffix = "∩ℤ²≥" if self.clip else ""
        return f"{self.hseg}×{self.vseg}{suffix}"


@dataclass(frozen=True)
class DiagonalStrip:
    d: int = 0

    def __post_init__(self):
        if self.d < 0:
            raise DomainError("Interaction range d must be nonnegative")

    def mask(self, sites: np.ndarray) -> np.ndarray:
        offsets = sites[:, 0] - sites[:, 1]
        return (offsets >= 0) & (offsets <= self.d)
