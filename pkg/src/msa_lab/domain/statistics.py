import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .exceptions import DomainError

CONFIDENCE = 0.95


class EstimateStatus(Enum):
    OK = "ok"
    BOUND_VIOLATED = "bound_violated"
    BOUND_UNRESOLVABLE = "bound_unresolvable"


class BoundKind(Enum):
    UPPER = "upper"
    LOWER = "lower"


def clopper_pearson(successes: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    if n <= 0:
        raise DomainError("no samples")
    if not 0 <= successes <= n:
        raise DomainError(f"successes must lie in [0, {n}], got {successes}")
    alpha = 1.0 - confidence
    low = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, n - successes + 1))
    high = 1.0 if successes == n else float(stats.beta.ppf(1 - alpha / 2, successes + 1, n - successes))
    return low, high


@dataclass(frozen=True)
class ProbEstimate:
    successes: int
    n: int
    ci_low: float
    ci_high: float
    bound_value: float | None = None
    bound_kind: BoundKind = BoundKind.UPPER

    @classmethod
    def from_counts(
        cls, successes: int, n: int, bound_value: float | None = None, bound_kind: BoundKind = BoundKind.UPPER
    ) -> "ProbEstimate":
        low, high = clopper_pearson(successes, n)
        return cls(successes, n, low, high, bound_value, bound_kind)

    @property
    def p_hat(self) -> float:
        return self.successes / self.n

    @property
    def status(self) -> EstimateStatus:
        if self.bound_value is None:
            return EstimateStatus.OK
        if self.bound_kind is BoundKind.UPPER:
            if self.ci_low > self.bound_value:
                return EstimateStatus.BOUND_VIOLATED
            if self.ci_high <= self.bound_value:
                return EstimateStatus.OK
            return EstimateStatus.BOUND_UNRESOLVABLE
        if self.ci_high < self.bound_value:
            return EstimateStatus.BOUND_VIOLATED
        if self.ci_low >= self.bound_value:
            return EstimateStatus.OK
        return EstimateStatus.BOUND_UNRESOLVABLE

    @property
    def resolution(self) -> float:
        """Smallest upper confidence bound reachable with n samples (zero successes)."""
        return clopper_pearson(0, self.n)[1]


@dataclass(frozen=True)
class ComplexEstimate:
    value: complex
    stderr: float
    n: int
    witnesses: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples: np.ndarray, **witnesses) -> "ComplexEstimate":
        samples = np.asarray(samples, dtype=complex)
        n = samples.shape[0]
        if n == 0:
            raise DomainError("no samples")
        if n == 1:
            return cls(complex(samples[0]), 0.0, 1, witnesses)
        variance = np.var(samples.real, ddof=1) + np.var(samples.imag, ddof=1)
        return cls(complex(np.mean(samples)), math.sqrt(variance / n), n, witnesses)

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def within(self, reference: complex, sigmas: float = 3.0) -> bool:
        return abs(self.value - reference) <= sigmas * self.stderr
