from collections.abc import Callable, Iterable, Mapping, Sequence
from pathlib import Path
from typing import Protocol, TypeVar

import numpy as np

from msa_lab.domain.models import DisorderSpec, PotentialSample
from msa_lab.domain.operators import HamiltonianMatrix
from msa_lab.domain.value_objects import Segment

T = TypeVar("T")
R = TypeVar("R")


class PotentialSampler(Protocol):
    def sample_potential(self, spec: DisorderSpec, window: Segment, replicate: int) -> PotentialSample:
        pass

    def conditional_resample(
        self, spec: DisorderSpec, sample: PotentialSample, frozen: list[Segment], replicate: int
    ) -> PotentialSample:
        pass

    def site_values(self, spec: DisorderSpec, replicates: np.ndarray, sites: np.ndarray) -> np.ndarray:
        pass


class ReplicatePool(Protocol):
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        pass


class GeneratorFactory(Protocol):
    def __call__(self, master_seed: int, name: str, replicate: int = 0) -> np.random.Generator:
        pass


class ResultSink(Protocol):
    def emit(self, records: Sequence[Mapping], fmt: str, path: str | Path) -> None:
        pass


class MatrixDumper(Protocol):
    def dump(self, h: HamiltonianMatrix, path: str | Path) -> None:
        pass
