import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import stats

from .exceptions import DomainError, ResonantEnergyError
from .geometry import Volume, boundary_of, boundary_of_sites, lookup_sites
from .operators import HamiltonianMatrix, site_key
from .spectral import SpectralData, green_many, spectral_dist
from .value_objects import Segment

logger = logging.getLogger(__name__)

INT_LIMIT = 2**63 - 1
AMPLITUDE_FLOOR = 1e-300
FREE_HOPPING_NORM = 4.0


class MassVariant(Enum):
    SEGMENT = "segment"
    PRODUCT = "product"
    EXACT = "exact"


class CountingReading(Enum):
    STATED = "stated"
    FAMILY_COUNT = "family_count"
    RESCALED = "rescaled"


@dataclass(frozen=True)
class MsaParams:
    p: float = 6.0
    q: float = 24.0
    alpha: float = 1.5
    beta: float = 0.5

    def __post_init__(self):
        for name in ("p", "q", "alpha", "beta"):
            if getattr(self, name) <= 0:
                raise DomainError(f"MSA parameter {name} must be positive")


@dataclass(frozen=True)
class ScaleSchedule:
    L0: int
    m0: float
    params: MsaParams
    Ls: tuple[int, ...]
    ms: tuple[float, ...]
    truncated: bool = False
    warnings: tuple[str, ...] = ()

    @property
    def mass_product(self) -> float:
        return self.ms[-1] / self.m0

    @property
    def m_infinity_estimate(self) -> float:
        return self.ms[-1]


@dataclass(frozen=True)
class Verdict:
    flag: bool
    witness: float
    threshold: float
    site: object = None


@dataclass(frozen=True)
class Classification:
    resonant: Verdict
    singular: Verdict | None = None
    tunneling: Verdict | None = None


@dataclass(frozen=True)
class MassFit:
    m_hat: float
    r2: float
    n_points: int
    floored: bool
    eigenvalue: float | None = None
    center: tuple[float, ...] = ()


@dataclass(frozen=True)
class SiteScan:
    threshold: float
    sites: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return bool(self.sites)


def _next_scale(L: int, alpha: Fraction) -> int:
    """Smallest integer n with n >= L**alpha, in exact integer arithmetic."""
    power, root = alpha.numerator, alpha.denominator
    target = L**power
    n = max(1, math.ceil(L ** float(alpha)))
    while n**root < target:
        n += 1
    while n > 1 and (n - 1) ** root >= target:
        n -= 1
    return n


def schedule(L0: int, m0: float, params: MsaParams = MsaParams(), k_max: int = 5) -> ScaleSchedule:
    if L0 < 2:
        raise DomainError("L0 must be at least 2")
    if m0 <= 0:
        raise DomainError("m0 must be positive")
    warnings = []
    if L0 < 256:
        warnings.append(f"L0={L0} is below 256")
    if m0 <= 2:
        warnings.append(f"m0={m0} does not exceed 2")

    alpha = Fraction(params.alpha).limit_denominator(1000)
    Ls, ms, truncated = [L0], [float(m0)], False
    for k in range(1, k_max + 1):
        if not truncated:
            nxt = _next_scale(Ls[-1], alpha)
            if nxt > INT_LIMIT:
                truncated = True
                warnings.append(f"L_{k} exceeds the 64-bit integer range; scales truncated, masses continue")
            else:
                Ls.append(nxt)
        factor = 1.0 - 8.0 * L0 ** (-k / 2)
        if factor <= 0:
            warnings.append(f"mass factor at step {k} is non-positive ({factor:.6g})")
        ms.append(ms[-1] * factor)

    for message in warnings:
        logger.warning("Schedule L0=%s m0=%s: %s", L0, m0, message)
    return ScaleSchedule(L0, float(m0), params, tuple(Ls), tuple(ms), truncated, tuple(warnings))


def mass_degrade(m: float, L: int, beta: float, variant: MassVariant) -> float:
    if m <= 0:
        raise DomainError("mass must be positive")
    match variant:
        case MassVariant.SEGMENT:
            return m - L ** (-(1 - beta))
        case MassVariant.PRODUCT:
            return m - 3 * L ** (-(1 - beta))
        case MassVariant.EXACT:
            return m - (2 * math.log(2 * L + 1) + L**beta) / L
    raise DomainError(f"Unknown mass variant {variant!r}")


def counting_bound(L_k: int, n: int, params: MsaParams, reading: CountingReading) -> float:
    """Bound on P{at least 2n singular, pairwise distant diagonal sub-squares} under each reading."""
    match reading:
        case CountingReading.STATED:
            return float(L_k) ** (n * (1 + params.alpha) - n * params.p / 2)
        case CountingReading.FAMILY_COUNT:
            return 2.0 * L_k * float(L_k) ** params.alpha * float(L_k) ** (-params.q * n)
        case CountingReading.RESCALED:
            L_next = float(L_k) ** params.alpha
            return L_next ** (-n * (params.p - 1 - params.alpha) / params.alpha)
    raise DomainError(f"Unknown counting reading {reading!r}")


def energy_grid(
    interval: tuple[float, float], L: int, beta: float, spacing: float | None = None, points: int | None = None
) -> np.ndarray:
    low, high = interval
    if low > high:
        raise DomainError(f"Energy interval [{low}, {high}] is empty")
    if low == high:
        return np.array([low])
    if points is None:
        step = spacing if spacing is not None else math.exp(-(L**beta)) / 10
        points = math.ceil((high - low) / step) + 1
    return np.linspace(low, high, max(points, 2))


def classify_resonant(sd: SpectralData, E: float, L: int, beta: float) -> Verdict:
    if L < 1:
        raise DomainError("L must be at least 1")
    threshold = math.exp(-(L**beta))
    gap = spectral_dist(sd, E)
    return Verdict(flag=gap < threshold, witness=gap, threshold=threshold)


def anchor_site(basis: np.ndarray, center) -> object:
    """The center when it belongs to the basis, otherwise the nearest basis site in max norm."""
    key = site_key(center)
    if basis.ndim == 1:
        distances = np.abs(basis - key)
    else:
        found = lookup_sites(basis, np.array([key], dtype=np.int64))[0]
        if found >= 0:
            return key
        distances = np.max(np.abs(basis - np.array(key)), axis=1)
    return site_key(basis[int(np.argmin(distances))])


def _boundary_rows(sd: SpectralData, volume: Volume | None) -> np.ndarray:
    sites = boundary_of(volume) if volume is not None else boundary_of_sites(sd.basis)
    rows = [sd.index[site_key(site)] for site in sites if site_key(site) in sd.index]
    return np.array(rows, dtype=np.int64)


def boundary_green_max(sd: SpectralData, center, E: float, volume: Volume | None = None) -> tuple[float, object]:
    """max over boundary sites u of |G(center, u; E)| and the maximizing site."""
    rows = _boundary_rows(sd, volume)
    if rows.size == 0:
        return 0.0, None
    values = np.abs(green_many(sd, center, rows, E))
    best = int(np.argmax(values))
    return float(values[best]), site_key(sd.basis[rows[best]])


def classify_singular(sd: SpectralData, center, volume: Volume | None, E: float, m: float, L: int) -> Verdict:
    if not sd.contains_site(center):
        raise DomainError(f"center {site_key(center)} is not in the basis")
    threshold = math.exp(-m * L)
    value, site = boundary_green_max(sd, center, E, volume)
    return Verdict(flag=value > threshold, witness=value, threshold=threshold, site=site)


def singular_or_resonant(sd: SpectralData, center, volume: Volume | None, E: float, m: float, L: int) -> Verdict:
    """classify_singular, reading an energy on the spectrum as singular."""
    try:
        return classify_singular(sd, center, volume, E, m, L)
    except ResonantEnergyError:
        return Verdict(flag=True, witness=math.inf, threshold=math.exp(-m * L))


def tunneling_sum(sd: SpectralData, window: Segment) -> float:
    if window.radius < 1:
        raise DomainError("Tunneling needs a window of radius at least 1")
    x, L = window.center, window.radius
    centre = np.abs(sd.amplitudes(x))
    ends = np.abs(sd.amplitudes(x - L)) + np.abs(sd.amplitudes(x + L))
    return float(np.sum(centre * ends))


def classify_tunneling(sd: SpectralData, window: Segment, m: float) -> Verdict:
    threshold = math.exp(-m * window.radius)
    total = tunneling_sum(sd, window)
    return Verdict(flag=total > threshold, witness=total, threshold=threshold)


def classify(
    sd: SpectralData, volume: Volume, E: float, m: float, L: int, beta: float, center=None
) -> Classification:
    """Resonance and singularity of one volume; tunneling as well when it is a segment."""
    anchor = anchor_site(sd.basis, center if center is not None else volume.center)
    tunneling = classify_tunneling(sd, volume, m) if isinstance(volume, Segment) else None
    return Classification(
        resonant=classify_resonant(sd, E, L, beta),
        singular=singular_or_resonant(sd, anchor, volume, E, m, L),
        tunneling=tunneling,
    )


def singular_site_scan(h: HamiltonianMatrix, E: float, m: float, L: int, tau: float | None = None) -> SiteScan:
    threshold = tau if tau is not None else math.exp(m * L) + FREE_HOPPING_NORM
    close = np.abs(h.diagonal - E) < threshold
    return SiteScan(threshold=threshold, sites=[site_key(site) for site in h.basis[close]])


def fit_decay(
    psi: np.ndarray,
    basis: np.ndarray,
    center=None,
    radii: tuple[float, float | None] = (0.0, None),
    noise_floor: float = 1e-12,
) -> MassFit:
    """Exponential decay rate of the tail envelope max_{|x-c| >= r} |ψ(x)| against r."""
    amplitude = np.abs(np.asarray(psi, dtype=float))
    floored = bool(np.any(amplitude < AMPLITUDE_FLOOR))
    amplitude = np.maximum(amplitude, AMPLITUDE_FLOOR)
    coords = np.asarray(basis, dtype=float).reshape(amplitude.shape[0], -1)
    origin = coords[int(np.argmax(amplitude))] if center is None else np.asarray(center, dtype=float).reshape(-1)

    distance = np.linalg.norm(coords - origin, axis=1)
    order = np.argsort(distance, kind="stable")
    distance, amplitude = distance[order], amplitude[order]
    envelope = np.maximum.accumulate(amplitude[::-1])[::-1]
    shells, first = np.unique(distance, return_index=True)
    envelope = envelope[first]

    r_min, r_max = radii
    keep = (shells >= r_min) & (envelope > noise_floor * envelope.max())
    if r_max is not None:
        keep &= shells <= r_max
    if np.count_nonzero(keep) < 3:
        raise DomainError("not enough points for a decay fit")
    fit = stats.linregress(shells[keep], np.log(envelope[keep]))
    return MassFit(
        m_hat=float(-fit.slope),
        r2=float(fit.rvalue**2),
        n_points=int(np.count_nonzero(keep)),
        floored=floored,
        center=tuple(float(c) for c in origin),
    )


def estimate_mass(
    sd: SpectralData,
    center=None,
    fit_window: tuple[float, float | None] = (0.0, None),
    E: float = 0.0,
    noise_floor: float = 1e-12,
) -> MassFit:
    j = int(np.argmin(np.abs(sd.eigenvalues - E)))
    fit = fit_decay(sd.eigenvectors[:, j], sd.basis, center, fit_window, noise_floor)
    return MassFit(fit.m_hat, fit.r2, fit.n_points, fit.floored, float(sd.eigenvalues[j]), fit.center)
