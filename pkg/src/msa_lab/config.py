from collections.abc import Mapping
from os import environ
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from msa_lab.application.dto import EnergyRule, PairEvent, Quantifier
from msa_lab.application.exceptions import ConfigurationError
from msa_lab.domain.exceptions import DomainError
from msa_lab.domain.geometry import DistantRule, OracleRule
from msa_lab.domain.implications import PackingMode
from msa_lab.domain.models import DisorderSpec, DistributionKind, InteractionSpec, Statistics
from msa_lab.domain.msa import MassVariant, MsaParams
from msa_lab.domain.value_objects import Segment, SubSquare


class RuntimeConfig(BaseModel):
    workers: int = Field(default=1, ge=1, validation_alias="MSA_LAB_WORKERS")
    log_file: str = Field(default="msa_lab.log", validation_alias="MSA_LAB_LOG_FILE")
    log_level: str = Field(default="INFO", validation_alias="MSA_LAB_LOG_LEVEL")
    log_max_bytes: int = Field(default=5 * 1024 * 1024, ge=1, validation_alias="MSA_LAB_LOG_MAX_BYTES")

    @classmethod
    def from_environ(cls, env: Mapping[str, str] = environ) -> "RuntimeConfig":
        try:
            return cls(**env)
        except ValidationError as error:
            raise ConfigurationError(str(error)) from error


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DisorderSection(Section):
    distribution: DistributionKind = DistributionKind.CAUCHY
    scale: float = 1.0
    g: float = 5.0

    def to_spec(self, seed: int) -> DisorderSpec:
        return DisorderSpec(distribution=self.distribution, scale=self.scale, g=self.g, master_seed=seed)


class InteractionSection(Section):
    d: int = 0
    profile: list[float] | None = None
    u0: float = 0.0

    def to_spec(self) -> InteractionSpec:
        if self.profile is not None:
            return InteractionSpec(d=self.d, profile=tuple(self.profile))
        return InteractionSpec.constant(self.d, self.u0)


class VolumeSection(Section):
    kind: Literal["segment", "square", "product"] = "square"
    center: int | tuple[int, int] = (10, 0)
    radius: int = Field(default=3, ge=0)

    def to_volume(self) -> Segment | SubSquare:
        if self.kind == "segment":
            if not isinstance(self.center, int):
                raise DomainError("A segment needs an integer center")
            return Segment.centered(self.center, self.radius)
        if isinstance(self.center, int):
            raise DomainError("A square needs a center (u1, u2)")
        return SubSquare.centered(self.center, self.radius, clip=self.kind == "square")


class GeometrySection(Section):
    volume: VolumeSection = VolumeSection()
    second: VolumeSection | None = None
    site: int | tuple[int, int] | None = None
    target: int | tuple[int, int] | None = None
    window: tuple[int, int] = (0, 59)
    radii: list[int] = [2, 3, 4]
    ranges: list[int] = [0, 1, 2]
    rules: list[OracleRule] = [OracleRule.DIAGONAL_5L, OracleRule.DISTANT_8L]

    def oracle_window(self) -> SubSquare:
        low, high = self.window
        segment = Segment(low, high)
        return SubSquare(segment, segment)


class MsaSection(Section):
    p: float = 6.0
    q: float = 24.0
    alpha: float = 1.5
    beta: float = 0.5
    L0: int = 256
    m0: float = 4.0
    k_max: int = Field(default=5, ge=0)
    m: float = 2.0
    m_tunnel: float = 2.0
    m_small: float = 1.0
    L_small: int = Field(default=1, ge=1)
    K: int = Field(default=1, ge=0)
    variant: MassVariant = MassVariant.SEGMENT
    subsquares: bool = False
    distant_rule: DistantRule = DistantRule.STRICT_8L
    packing_mode: PackingMode = PackingMode.DIAGONAL_PAIRWISE_DISTANT
    counting_n: int = Field(default=1, ge=1)
    node_budget: int = Field(default=200_000, ge=1)

    def to_params(self) -> MsaParams:
        return MsaParams(p=self.p, q=self.q, alpha=self.alpha, beta=self.beta)


class SamplingSection(Section):
    n: int = Field(default=1000, ge=0)
    n_outer: int = Field(default=10, ge=1)
    n_inner: int = Field(default=200, ge=1)
    n_paths: int = Field(default=10_000, ge=1)
    replicate: int = Field(default=0, ge=0)
    energy: float = 0.0
    interval: tuple[float, float] = (-0.5, 0.5)
    r: list[float] = [0.01]
    t: list[float] = [0.1, 0.25, 0.5]
    grid_spacing: float | None = Field(default=None, gt=0)
    grid_points: int | None = Field(default=None, ge=1)
    quantifier: Quantifier = Quantifier.EXISTS_E
    event: PairEvent = PairEvent.BOTH_SINGULAR
    energy_rule: EnergyRule = EnergyRule.FIXED
    averaged: bool = False
    bins: int = Field(default=40, ge=1)
    fit_min: float = 0.0
    fit_max: float | None = None

    @field_validator("r")
    @classmethod
    def radii_nonnegative(cls, value: list[float]) -> list[float]:
        if any(r < 0 for r in value):
            raise ValueError("radii must be nonnegative")
        return value


class OutputSection(Section):
    path: str = "results.csv"
    format: Literal["csv", "jsonl"] = "csv"
    dump: str | None = None


class ExperimentConfig(Section):
    experiment: str
    seed: int = Field(default=0, ge=0, le=2**64 - 1)
    statistics: Statistics = Statistics.FERMIONIC
    disorder: DisorderSection = DisorderSection()
    interaction: InteractionSection = InteractionSection()
    geometry: GeometrySection = GeometrySection()
    msa: MsaSection = MsaSection()
    sampling: SamplingSection = SamplingSection()
    output: OutputSection = OutputSection()


def load_experiment_config(path: str | Path | None, overrides: Mapping[str, object] | None = None) -> ExperimentConfig:
    """Reads the YAML file (if any) and applies CLI overrides: experiment, seed, samples, out, format."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as stream:
                data = yaml.safe_load(stream) or {}
        except OSError as error:
            raise ConfigurationError(f"cannot read {path}: {error.strerror}") from error
        except yaml.YAMLError as error:
            raise ConfigurationError(f"{path} is not valid YAML: {error}") from error
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path} must hold a mapping")

    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    if "experiment" in overrides:
        data["experiment"] = overrides["experiment"]
    if "seed" in overrides:
        data["seed"] = overrides["seed"]
    if "samples" in overrides:
        data.setdefault("sampling", {})["n"] = overrides["samples"]
    if "out" in overrides:
        data.setdefault("output", {})["path"] = overrides["out"]
    if "format" in overrides:
        data.setdefault("output", {})["format"] = overrides["format"]

    try:
        return ExperimentConfig(**data)
    except ValidationError as error:
        raise ConfigurationError(str(error)) from error
