from dataclasses import dataclass, field
from enum import Enum

from msa_lab.domain.geometry import DistantRule, OracleRule
from msa_lab.domain.implications import PackingMode
from msa_lab.domain.models import DisorderSpec, InteractionSpec, Statistics
from msa_lab.domain.msa import MassVariant, MsaParams
from msa_lab.domain.statistics import ComplexEstimate, EstimateStatus, ProbEstimate
from msa_lab.domain.value_objects import Segment, SubSquare


class Quantifier(Enum):
    FORALL_E = "forall_E"
    EXISTS_E = "exists_E"


class PairEvent(Enum):
    BOTH_SINGULAR = "both_singular"
    BOTH_RESONANT = "both_resonant"


class EnergyRule(Enum):
    FIXED = "fixed"
    CONDITIONED_MEAN = "conditioned_mean"


@dataclass
class ResultRow:
    experiment: str
    seed: int
    n: int | None = None
    L: int | None = None
    L2: int | None = None
    g: float | None = None
    m: float | None = None
    E: float | None = None
    r: float | None = None
    p_hat: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    bound_value: float | None = None
    status: str = EstimateStatus.OK.value
    parameters: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    @classmethod
    def from_estimate(cls, experiment: str, seed: int, estimate: ProbEstimate, **fields) -> "ResultRow":
        return cls(
            experiment=experiment,
            seed=seed,
            n=estimate.n,
            p_hat=estimate.p_hat,
            ci_low=estimate.ci_low,
            ci_high=estimate.ci_high,
            bound_value=estimate.bound_value,
            status=estimate.status.value,
            **fields,
        )

    @classmethod
    def from_complex(
        cls, experiment: str, seed: int, estimate: ComplexEstimate, bound: float | None, sigmas: float = 3.0, **fields
    ) -> "ResultRow":
        """Modulus of a complex estimate with a ±sigmas·stderr band against an upper bound."""
        low = max(0.0, estimate.modulus - sigmas * estimate.stderr)
        high = estimate.modulus + sigmas * estimate.stderr
        status = EstimateStatus.OK
        if bound is not None and low > bound:
            status = EstimateStatus.BOUND_VIOLATED
        elif bound is not None and high > bound:
            status = EstimateStatus.BOUND_UNRESOLVABLE
        witnesses = fields.pop("witnesses", {}) | {
            "re": estimate.value.real,
            "im": estimate.value.imag,
            "stderr": estimate.stderr,
        }
        return cls(
            experiment=experiment,
            seed=seed,
            n=estimate.n,
            p_hat=estimate.modulus,
            ci_low=low,
            ci_high=high,
            bound_value=bound,
            status=status.value,
            witnesses=witnesses | estimate.witnesses,
            **fields,
        )


@dataclass(frozen=True, kw_only=True)
class EstimatorRequest:
    experiment: str
    seed: int
    spec: DisorderSpec
    volume: Segment | SubSquare
    inter: InteractionSpec = InteractionSpec()
    stat: Statistics = Statistics.FERMIONIC
    params: MsaParams = MsaParams()


@dataclass(frozen=True, kw_only=True)
class DiagnosticRequest(EstimatorRequest):
    replicate: int = 0
    site: object = None
    target: object = None
    E: float = 0.0
    m: float = 2.0
    dump_path: str | None = None


@dataclass(frozen=True, kw_only=True)
class WegnerRequest(EstimatorRequest):
    E: float = 0.0
    radii: tuple[float, ...] = (0.01,)
    n: int = 1000
    conditional: bool = False
    n_outer: int = 10
    n_inner: int = 200
    energy_rule: EnergyRule = EnergyRule.FIXED


@dataclass(frozen=True, kw_only=True)
class ResonanceRequest(EstimatorRequest):
    E: float = 0.0
    n: int = 1000


@dataclass(frozen=True, kw_only=True)
class TunnelingRequest(EstimatorRequest):
    m: float = 2.0
    n: int = 1000


@dataclass(frozen=True, kw_only=True)
class PairEventRequest(EstimatorRequest):
    second: Segment | SubSquare
    interval: tuple[float, float] = (0.0, 0.0)
    m: float = 2.0
    n: int = 1000
    quantifier: Quantifier = Quantifier.EXISTS_E
    event: PairEvent = PairEvent.BOTH_SINGULAR
    grid_spacing: float | None = None
    grid_points: int | None = None


@dataclass(frozen=True, kw_only=True)
class DirectSumRequest(PairEventRequest):
    m_tunnel: float = 2.0
    L_small: int = 1
    m_small: float = 1.0


@dataclass(frozen=True, kw_only=True)
class MolchanovRequest(EstimatorRequest):
    site: object = None
    times: tuple[float, ...] = (0.1, 0.3, 0.5)
    n_paths: int = 10_000
    averaged: bool = False
    replicate: int = 0


@dataclass(frozen=True, kw_only=True)
class CharacteristicRequest(EstimatorRequest):
    site: object = None
    times: tuple[float, ...] = (0.1, 0.25, 0.5)
    n: int = 1000
    conditional: bool = False
    n_outer: int = 10
    n_inner: int = 200


@dataclass(frozen=True, kw_only=True)
class MeasureRequest(EstimatorRequest):
    site: object = None
    bins: int = 40
    interval: tuple[float, float] = (-10.0, 10.0)
    n: int = 1000


@dataclass(frozen=True, kw_only=True)
class ImplicationRequest(EstimatorRequest):
    interval: tuple[float, float] = (-1.0, 1.0)
    m: float = 2.0
    n: int = 1000
    variant: MassVariant = MassVariant.SEGMENT
    subsquares: bool = False
    L_small: int = 1
    m_small: float = 1.0
    K: int = 1


@dataclass(frozen=True, kw_only=True)
class CountRequest(EstimatorRequest):
    E: float = 0.0
    m: float = 2.0
    L_small: int = 1
    n: int = 100
    counting_n: int = 1
    mode: PackingMode = PackingMode.DIAGONAL_PAIRWISE_DISTANT
    rule: DistantRule = DistantRule.STRICT_8L
    node_budget: int = 200_000


@dataclass(frozen=True, kw_only=True)
class MassRequest(EstimatorRequest):
    E: float = 0.0
    n: int = 50
    center: object = None
    fit_window: tuple[float, float | None] = (0.0, None)


@dataclass(frozen=True)
class ScheduleRequest:
    experiment: str
    seed: int
    L0: int
    m0: float
    params: MsaParams = MsaParams()
    k_max: int = 5


@dataclass(frozen=True)
class GeometryRequest:
    experiment: str
    seed: int
    window: SubSquare
    radii: tuple[int, ...] = (2, 3, 4)
    ranges: tuple[int, ...] = (0, 1, 2)
    rules: tuple[OracleRule, ...] = (OracleRule.DIAGONAL_5L, OracleRule.DISTANT_8L)
