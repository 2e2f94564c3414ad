"""Law-level facts about the random potential and the interaction energy of a pair."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from .exceptions import CoverageError, DomainError
from .models import DisorderSpec, DistributionKind, InteractionSpec, PotentialSample
from .value_objects import Site2D


class RadiusReading(Enum):
    PRODUCT = "product"
    MINIMUM = "minimum"


@dataclass(frozen=True)
class WegnerConstants:
    a: float
    b: float
    g: float

    @property
    def B(self) -> float:
        return 2.0 * (self.a * abs(self.g) - self.b - 1.0)

    @property
    def stated_exponent(self) -> float:
        return self.a * abs(self.g) - self.b - 1.0

    @property
    def proof_exponent(self) -> float:
        return self.a * abs(self.g) - self.b + 1.0

    @property
    def applicable(self) -> bool:
        return self.B > 0


def char_bound_params(spec: DisorderSpec) -> tuple[float, float]:
    """(a, b) with |E e^{itV}| <= b·e^{-a|t|} for every real t."""
    match spec.distribution:
        case DistributionKind.CAUCHY:
            return spec.scale, 1.0
        case DistributionKind.GAUSSIAN:
            # max over t of (a t - σ²t²/2) is a²/(2σ²), so a = σ needs b = e^{1/2}
            return spec.scale, math.exp(0.5)
    raise DomainError(f"unsupported distribution {spec.distribution!r}")


def characteristic_function(spec: DisorderSpec, t: float) -> float:
    match spec.distribution:
        case DistributionKind.CAUCHY:
            return math.exp(-spec.scale * abs(t))
        case DistributionKind.GAUSSIAN:
            return math.exp(-0.5 * (spec.scale * t) ** 2)
    raise DomainError(f"unsupported distribution {spec.distribution!r}")


def density_sup_norm(spec: DisorderSpec) -> float:
    return float(spec.law.pdf(0.0))


def _numeric_characteristic(spec: DisorderSpec, t: float) -> float:
    if t == 0:
        return 1.0
    value, _ = integrate.quad(spec.law.pdf, 0.0, np.inf, weight="cos", wvar=abs(t))
    return 2.0 * value


def verify_char_bound(spec: DisorderSpec, t_max: float, n_grid: int = 201, tol: float = 1e-6) -> bool:
    a, b = char_bound_params(spec)
    for t in np.linspace(0.0, t_max, n_grid):
        if abs(_numeric_characteristic(spec, float(t))) > b * math.exp(-a * t) + tol:
            return False
    return True


def wegner_constants(spec: DisorderSpec) -> WegnerConstants:
    a, b = char_bound_params(spec)
    return WegnerConstants(a=a, b=b, g=spec.g)


def wegner_bound(B: float, L1: int, L2: int, r: float, conditional: bool = False) -> float | None:
    if B <= 0:
        return None
    coefficient = 4.0 if conditional else 2.0
    return coefficient / (math.pi * B) * (2 * L1 + 1) * (2 * L2 + 1) * r


def wegner_radius(L1: int, L2: int, beta: float, reading: RadiusReading) -> float:
    if reading is RadiusReading.PRODUCT:
        return math.exp(-((L1 * L2) ** (beta / 2)))
    return math.exp(-(min(L1, L2) ** (beta / 2)))


def potential_energy_2p(u: Site2D, V: PotentialSample, inter: InteractionSpec, g: float) -> float:
    if u[0] < u[1]:
        raise DomainError(f"site {u} is not in the half-plane x1 >= x2")
    for x in u:
        if not V.window.contains(x):
            raise CoverageError(f"site {u}", V.window)
    return inter.at(u) + g * V.value(u[0]) + g * V.value(u[1])
