"""Path-integral representation of ⟨δ_u, e^{itH} δ_u⟩ over a continuous-time jump process.

The process jumps at the uniform total rate c = max row sum of the hopping part, moves to a
neighbor y with probability A(x, y)/c and is killed with the remaining probability; leaving the
volume is killing as well. With K jumps up to time |t| the integrand is

    1(X(|t|) = u) · i^{K·sign t} · exp(i·sign t · ∫ W(X(s)) ds)

and the estimate is e^{c|t|} times its mean.
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .operators import HamiltonianMatrix
from .statistics import ComplexEstimate

DiagonalField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PathSample:
    jump_times: np.ndarray = field(repr=False)
    sites: np.ndarray = field(repr=False)
    alive: bool = True

    @property
    def K(self) -> int:
        return int(self.jump_times.shape[0])


@dataclass(frozen=True)
class HopTable:
    """Jump kernel with total rate c = max row sum of the hopping part.

    Interior rows of the lattice operator sum to 4, so c = 4 there. Rows cut by the volume edge
    or the excluded diagonal sum to less, and the bosonic weight-2 hops push some rows above 4,
    so one uniform c with the missing rate as killing keeps the representation exact for every
    basis the operators build.
    """

    neighbors: np.ndarray
    cumulative: np.ndarray
    rate: float

    @classmethod
    def of(cls, h: HamiltonianMatrix) -> "HopTable":
        hopping = h.entries - np.diag(h.diagonal)
        if np.any(hopping < 0):
            raise DomainError("Path integral needs nonnegative hopping")
        degree = max(1, int(np.max(np.count_nonzero(hopping, axis=1))))
        rate = float(np.max(hopping.sum(axis=1)))
        n = h.dimension
        neighbors = np.zeros((n, degree), dtype=np.int64)
        cumulative = np.ones((n, degree))
        if rate == 0:
            return cls(neighbors, cumulative, rate)
        for row in range(n):
            cols = np.nonzero(hopping[row])[0]
            steps = np.cumsum(hopping[row, cols]) / rate
            neighbors[row, : cols.shape[0]] = cols
            cumulative[row, : cols.shape[0]] = steps
            cumulative[row, cols.shape[0] :] = steps[-1] if cols.shape[0] else 0.0
        return cls(neighbors, cumulative, rate)

    def jump(self, rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """Next row for every walker, or -1 when the walker is killed."""
        slot = np.sum(uniforms[:, None] > self.cumulative[rows], axis=1)
        killed = slot >= self.cumulative.shape[1]
        targets = self.neighbors[rows, np.minimum(slot, self.cumulative.shape[1] - 1)]
        return np.where(killed, -1, targets)


def simulate_path(h: HamiltonianMatrix, u, t: float, rng: np.random.Generator) -> PathSample:
    table = HopTable.of(h)
    horizon = abs(t)
    row, clock = h.index_of(u), 0.0
    times, rows = [], [row]
    while table.rate > 0:
        clock += rng.exponential(1.0 / table.rate)
        if clock >= horizon:
            break
        row = int(table.jump(np.array([row]), rng.random(1))[0])
        if row < 0:
            return PathSample(np.array(times), h.basis[np.array(rows)], alive=False)
        times.append(clock)
        rows.append(row)
    return PathSample(np.array(times), h.basis[np.array(rows)])


def path_integrand(h: HamiltonianMatrix, path: PathSample, u, t: float) -> complex:
    if not path.alive or tuple(np.atleast_1d(path.sites[-1])) != tuple(np.atleast_1d(np.asarray(u))):
        return 0j
    rows = np.array([h.index_of(site) for site in path.sites])
    edges = np.concatenate(([0.0], path.jump_times, [abs(t)]))
    integral = float(np.sum(h.diagonal[rows] * np.diff(edges)))
    sign = np.sign(t)
    return complex(1j ** (path.K * sign) * np.exp(1j * sign * integral))


def molchanov_estimate(
    h: HamiltonianMatrix,
    u,
    t: float,
    n_paths: int,
    rng: np.random.Generator,
    diagonal: DiagonalField | None = None,
) -> ComplexEstimate:
    """Vectorized estimate over n_paths walkers started at u.

    `diagonal(path_ids, rows)` returns W along the walkers; by default the diagonal of h, and a
    disorder-averaged run passes a field that draws a fresh potential per path id.
    """
    if n_paths < 1:
        raise DomainError("no samples")
    table = HopTable.of(h)
    field_of = diagonal or (lambda ids, rows: h.diagonal[rows])
    start = h.index_of(u)
    horizon = abs(t)
    sign = float(np.sign(t))

    ids = np.arange(n_paths)
    rows = np.full(n_paths, start, dtype=np.int64)
    clock = np.zeros(n_paths)
    integral = np.zeros(n_paths)
    jumps = np.zeros(n_paths, dtype=np.int64)
    alive = np.ones(n_paths, dtype=bool)
    active = np.ones(n_paths, dtype=bool) if horizon > 0 else np.zeros(n_paths, dtype=bool)

    while np.any(active):
        idx = np.nonzero(active)[0]
        hold = rng.exponential(1.0 / table.rate, idx.shape[0]) if table.rate > 0 else np.full(idx.shape[0], np.inf)
        step = np.minimum(hold, horizon - clock[idx])
        integral[idx] += field_of(ids[idx], rows[idx]) * step
        clock[idx] += hold
        moving = clock[idx] < horizon
        active[idx[~moving]] = False
        movers = idx[moving]
        if movers.shape[0] == 0:
            continue
        targets = table.jump(rows[movers], rng.random(movers.shape[0]))
        killed = targets < 0
        alive[movers[killed]] = False
        active[movers[killed]] = False
        survivors = movers[~killed]
        rows[survivors] = targets[~killed]
        jumps[survivors] += 1

    returned = alive & (rows == start)
    phase = np.exp(1j * (np.pi / 2) * sign * (jumps % 4)) * np.exp(1j * sign * integral)
    samples = np.where(returned, np.exp(table.rate * horizon) * phase, 0j)
    return ComplexEstimate.from_samples(
        samples, rate=table.rate, returned=int(np.count_nonzero(returned)), killed=int(np.count_nonzero(~alive))
    )
