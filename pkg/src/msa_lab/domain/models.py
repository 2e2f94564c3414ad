import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .exceptions import CoverageError, DomainError
from .value_objects import Segment, Site2D

UINT64_MAX = 2**64 - 1


class DistributionKind(Enum):
    CAUCHY = "cauchy"
    GAUSSIAN = "gaussian"


class Statistics(Enum):
    BOSONIC = "bosonic"
    FERMIONIC = "fermionic"


@dataclass(frozen=True)
class DisorderSpec:
    distribution: DistributionKind
    scale: float
    g: float
    master_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.distribution, DistributionKind):
            raise DomainError(f"unsupported distribution {self.distribution!r}")
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise DomainError(f"Distribution scale must be positive, got {self.scale}")
        if not math.isfinite(self.g):
            raise DomainError("Disorder amplitude g must be finite")
        if not 0 <= self.master_seed <= UINT64_MAX:
            raise DomainError("Master seed must fit into 64 unsigned bits")

    @property
    def law(self):
        if self.distribution is DistributionKind.CAUCHY:
            return stats.cauchy(loc=0.0, scale=self.scale)
        return stats.norm(loc=0.0, scale=self.scale)

    def with_amplitude(self, g: float) -> "DisorderSpec":
        return DisorderSpec(self.distribution, self.scale, g, self.master_seed)


@dataclass(frozen=True)
class InteractionSpec:
    d: int = 0
    profile: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "profile", tuple(float(u) for u in self.profile))
        self.validate()

    def validate(self):
        if self.d < 0:
            raise DomainError("Interaction range d must be nonnegative")
        if len(self.profile) != self.d + 1:
            raise DomainError(f"Interaction profile needs d+1={self.d + 1} values, got {len(self.profile)}")
        if not all(math.isfinite(u) for u in self.profile):
            raise DomainError("Interaction profile must be bounded")

    @classmethod
    def constant(cls, d: int, u0: float) -> "InteractionSpec":
        return cls(d=d, profile=(u0,) * (d + 1))

    def energy(self, sites: np.ndarray) -> np.ndarray:
        offsets = sites[:, 0] - sites[:, 1]
        inside = (offsets >= 0) & (offsets <= self.d)
        table = np.asarray(self.profile)
        return np.where(inside, table[np.clip(offsets, 0, self.d)], 0.0)

    def at(self, site: Site2D) -> float:
        offset = site[0] - site[1]
        return self.profile[offset] if 0 <= offset <= self.d else 0.0


@dataclass(frozen=True, eq=False)
class PotentialSample:
    window: Segment
    values: np.ndarray = field(repr=False)
    replicate: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        self.validate()

    def validate(self):
        if self.values.shape != (self.window.size,):
            raise DomainError(f"Sample on {self.window} needs {self.window.size} values, got {self.values.shape}")

    def covers(self, segment: Segment) -> bool:
        return self.window.covers(segment)

    def value(self, x: int) -> float:
        if not self.window.contains(x):
            raise CoverageError(f"site {x}", self.window)
        return float(self.values[x - self.window.a])

    def values_at(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size and (xs.min() < self.window.a or xs.max() > self.window.b):
            raise CoverageError("sites", self.window)
        return self.values[xs - self.window.a]
