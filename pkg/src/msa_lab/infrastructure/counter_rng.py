import hashlib

import numpy as np

from msa_lab.domain.exceptions import CoverageError
from msa_lab.domain.models import DisorderSpec, PotentialSample
from msa_lab.domain.value_objects import Segment

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL_1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL_2 = np.uint64(0x94D049BB133111EB)
_UNIT = 2.0**-53
_HALF_UNIT = 2.0**-54


def splitmix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; a bijection of the 64-bit integers."""
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MUL_1
        z = (z ^ (z >> np.uint64(27))) * _MUL_2
    return z ^ (z >> np.uint64(31))


def _name_hash(name: str) -> np.uint64:
    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return np.uint64(int.from_bytes(digest, "little"))


def derive_seeds(master_seed: int, name: str, replicates: np.ndarray) -> np.ndarray:
    base = splitmix64(np.uint64(master_seed) ^ _name_hash(name))
    return splitmix64(base ^ np.asarray(replicates, dtype=np.uint64))


def derive_seed(master_seed: int, name: str, replicate: int) -> int:
    return int(derive_seeds(master_seed, name, np.array([replicate]))[0])


def make_generator(master_seed: int, name: str, replicate: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_seed(master_seed, name, replicate)))


def uniforms(keys: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """Uniforms in (0, 1) that depend only on (key, site)."""
    codes = np.asarray(sites, dtype=np.int64).astype(np.uint64)
    bits = splitmix64(np.asarray(keys, dtype=np.uint64) ^ splitmix64(codes))
    return (bits >> np.uint64(11)).astype(np.float64) * _UNIT + _HALF_UNIT


class CounterPotentialSampler:
    """Site-keyed potential: V(x) is a pure function of (master seed, stream, replicate, x)."""

    def __init__(self, stream: str = "potential"):
        self.stream = stream

    def site_values(self, spec: DisorderSpec, replicates: np.ndarray, sites: np.ndarray) -> np.ndarray:
        keys = derive_seeds(spec.master_seed, self.stream, replicates)
        return spec.law.ppf(uniforms(keys, sites))

    def sample_potential(self, spec: DisorderSpec, window: Segment, replicate: int) -> PotentialSample:
        sites = window.sites
        values = self.site_values(spec, np.full(sites.shape, replicate), sites)
        return PotentialSample(window=window, values=values, replicate=replicate)

    def conditional_resample(
        self, spec: DisorderSpec, sample: PotentialSample, frozen: list[Segment], replicate: int
    ) -> PotentialSample:
        """Redraws every site outside `frozen`; frozen sites keep their values."""
        keep = np.zeros(sample.window.size, dtype=bool)
        for segment in frozen:
            if not sample.covers(segment):
                raise CoverageError(f"frozen segment {segment}", sample.window)
            keep[segment.a - sample.window.a : segment.b - sample.window.a + 1] = True
        sites = sample.window.sites
        keys = derive_seeds(spec.master_seed, f"{self.stream}/resample/{sample.replicate}", np.array([replicate]))
        fresh = spec.law.ppf(uniforms(np.full(sites.shape, keys[0]), sites))
        return PotentialSample(sample.window, np.where(keep, sample.values, fresh), sample.replicate)
