from collections.abc import Iterable
from pathlib import Path

import pytest
import yaml
from dishka import Container, make_container

from msa_lab.config import RuntimeConfig
from msa_lab.domain.models import DisorderSpec, DistributionKind
from msa_lab.infrastructure.counter_rng import CounterPotentialSampler, make_generator
from msa_lab.infrastructure.worker_pool import ThreadReplicatePool
from msa_lab.ioc import AppProvider


@pytest.fixture(scope="session")
def runtime() -> RuntimeConfig:
    return RuntimeConfig.from_environ({"MSA_LAB_WORKERS": "2"})


@pytest.fixture(scope="session")
def sampler() -> CounterPotentialSampler:
    return CounterPotentialSampler()


@pytest.fixture
def pool() -> Iterable[ThreadReplicatePool]:
    pool = ThreadReplicatePool(workers=2)
    yield pool
    pool.close()


@pytest.fixture(scope="session")
def generators():
    return make_generator


@pytest.fixture(scope="session")
def cauchy() -> DisorderSpec:
    return DisorderSpec(DistributionKind.CAUCHY, scale=1.0, g=5.0, master_seed=11)


@pytest.fixture
def container(runtime: RuntimeConfig) -> Iterable[Container]:
    container = make_container(AppProvider(), context={RuntimeConfig: runtime})
    yield container
    container.close()


@pytest.fixture
def write_config(tmp_path: Path):
    def write(data: dict) -> Path:
        path = tmp_path / "experiment.yaml"
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        return path

    return write


@pytest.fixture
def log_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    path = tmp_path / "msa_lab.log"
    monkeypatch.setenv("MSA_LAB_LOG_FILE", str(path))
    return path
