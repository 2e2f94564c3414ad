from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import DomainError, ResonantEnergyError
from .operators import HamiltonianMatrix, IndexedBasis

RESONANCE_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralData(IndexedBasis):
    """Eigenvalues in ascending order with orthonormal eigenvector columns aligned with the basis."""

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        for array in (self.eigenvalues, self.eigenvectors):
            array.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def amplitudes(self, site) -> np.ndarray:
        """ψ_j(site) for every eigenvector j."""
        return self.eigenvectors[self.index_of(site)]

    def weights(self, site) -> np.ndarray:
        return self.amplitudes(site) ** 2


@dataclass(frozen=True)
class SpectralMeasureEstimate:
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    n_samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.density * self.widths))

    @property
    def total_mass_stderr(self) -> float:
        return float(np.sqrt(np.sum((self.stderr * self.widths) ** 2)))


def eig_sym(h: HamiltonianMatrix) -> SpectralData:
    if not np.all(np.isfinite(h.entries)):
        raise DomainError("non-finite entries")
    eigenvalues, eigenvectors = linalg.eigh(h.entries)
    return SpectralData(eigenvalues=eigenvalues, eigenvectors=eigenvectors, basis=h.basis)


def spectral_dist(sd: SpectralData, E: float) -> float:
    return float(np.min(np.abs(sd.eigenvalues - E)))


def _guard(sd: SpectralData, E: float) -> np.ndarray:
    denominators = sd.eigenvalues - E
    gap = float(np.min(np.abs(denominators)))
    if gap <= RESONANCE_GUARD * max(1.0, sd.norm):
        raise ResonantEnergyError(energy=E, gap=gap)
    return denominators


def green(sd: SpectralData, y, u, E: float) -> float:
    """⟨(H−E)⁻¹δ_y, δ_u⟩ by eigen-expansion."""
    denominators = _guard(sd, E)
    return float(np.sum(sd.amplitudes(y) * sd.amplitudes(u) / denominators))


def green_many(sd: SpectralData, y, rows: np.ndarray, E: float) -> np.ndarray:
    """G(y, u; E) for the basis rows `rows`, term by term as in `green`."""
    denominators = _guard(sd, E)
    return np.sum(sd.amplitudes(y)[None, :] * sd.eigenvectors[rows] / denominators[None, :], axis=1)


def green_row(sd: SpectralData, y, E: float) -> np.ndarray:
    denominators = _guard(sd, E)
    return sd.eigenvectors @ (sd.amplitudes(y) / denominators)


def green_direct(h: HamiltonianMatrix, y, u, E: float) -> float:
    rhs = np.zeros(h.dimension)
    rhs[h.index_of(y)] = 1.0
    solution = linalg.solve(h.entries - E * np.eye(h.dimension), rhs, assume_a="sym")
    return float(solution[h.index_of(u)])


def return_amplitude(sd: SpectralData, u, t: float) -> complex:
    """⟨δ_u, e^{itH} δ_u⟩ = Σ_j |ψ_j(u)|² e^{itE_j}."""
    return complex(np.sum(sd.weights(u) * np.exp(1j * t * sd.eigenvalues)))


def eigenvalue_count(sd: SpectralData, E: float, r: float) -> int:
    return int(np.count_nonzero(np.abs(sd.eigenvalues - E) < r))


def histogram_weights(sd: SpectralData, u, edges: np.ndarray) -> np.ndarray:
    """Spectral weight ⟨δ_u, 1_bin(H) δ_u⟩ of every bin."""
    weights, _ = np.histogram(sd.eigenvalues, bins=edges, weights=sd.weights(u))
    return weights
