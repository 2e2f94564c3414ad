import logging
from collections.abc import Callable

from msa_lab.config import ExperimentConfig
from msa_lab.domain.statistics import EstimateStatus

from .dto import (
    CharacteristicRequest,
    CountRequest,
    DiagnosticRequest,
    DirectSumRequest,
    GeometryRequest,
    ImplicationRequest,
    MassRequest,
    MeasureRequest,
    MolchanovRequest,
    PairEventRequest,
    ResonanceRequest,
    ResultRow,
    ScheduleRequest,
    TunnelingRequest,
    WegnerRequest,
)
from .exceptions import ConfigurationError, UnknownExperimentError
from .interactors import (
    BuildOperatorInteractor,
    CharacteristicInteractor,
    ClassifyInteractor,
    DirectSumInteractor,
    GeometryOracleInteractor,
    GreenInteractor,
    ImplicationInteractor,
    MassInteractor,
    MolchanovInteractor,
    PackingCountInteractor,
    PairEventInteractor,
    ResonanceInteractor,
    ScheduleInteractor,
    SpectralMeasureInteractor,
    SpectrumInteractor,
    TraceInequalityInteractor,
    TunnelingInteractor,
    WegnerInteractor,
)

logger = logging.getLogger(__name__)

EXPERIMENTS = (
    "build",
    "spectrum",
    "green",
    "classify",
    "schedule",
    "geometry",
    "wegner",
    "wegner-cond",
    "trace",
    "resonance",
    "tunneling",
    "pairs",
    "direct-sum",
    "molchanov",
    "khat",
    "khat-cond",
    "measure",
    "implication",
    "count",
    "mass",
)


def _common(config: ExperimentConfig) -> dict:
    return {
        "experiment": config.experiment,
        "seed": config.seed,
        "spec": config.disorder.to_spec(config.seed),
        "volume": config.geometry.volume.to_volume(),
        "inter": config.interaction.to_spec(),
        "stat": config.statistics,
        "params": config.msa.to_params(),
    }


def _diagnostic(config: ExperimentConfig) -> DiagnosticRequest:
    return DiagnosticRequest(
        **_common(config),
        replicate=config.sampling.replicate,
        site=config.geometry.site,
        target=config.geometry.target,
        E=config.sampling.energy,
        m=config.msa.m,
        dump_path=config.output.dump,
    )


def _schedule(config: ExperimentConfig) -> ScheduleRequest:
    msa = config.msa
    return ScheduleRequest(config.experiment, config.seed, msa.L0, msa.m0, msa.to_params(), msa.k_max)


def _geometry(config: ExperimentConfig) -> GeometryRequest:
    geometry = config.geometry
    return GeometryRequest(
        config.experiment,
        config.seed,
        geometry.oracle_window(),
        tuple(geometry.radii),
        tuple(geometry.ranges),
        tuple(geometry.rules),
    )


def _wegner(config: ExperimentConfig) -> WegnerRequest:
    sampling = config.sampling
    return WegnerRequest(
        **_common(config),
        E=sampling.energy,
        radii=tuple(sampling.r),
        n=sampling.n,
        conditional=config.experiment == "wegner-cond",
        n_outer=sampling.n_outer,
        n_inner=sampling.n_inner,
        energy_rule=sampling.energy_rule,
    )


def _resonance(config: ExperimentConfig) -> ResonanceRequest:
    return ResonanceRequest(**_common(config), E=config.sampling.energy, n=config.sampling.n)


def _tunneling(config: ExperimentConfig) -> TunnelingRequest:
    return TunnelingRequest(**_common(config), m=config.msa.m, n=config.sampling.n)


def _pair_fields(config: ExperimentConfig) -> dict:
    if config.geometry.second is None:
        raise ConfigurationError(f"{config.experiment} needs geometry.second")
    sampling = config.sampling
    return {
        **_common(config),
        "second": config.geometry.second.to_volume(),
        "interval": sampling.interval,
        "m": config.msa.m,
        "n": sampling.n,
        "quantifier": sampling.quantifier,
        "event": sampling.event,
        "grid_spacing": sampling.grid_spacing,
        "grid_points": sampling.grid_points,
    }


def _pairs(config: ExperimentConfig) -> PairEventRequest:
    return PairEventRequest(**_pair_fields(config))


def _direct_sum(config: ExperimentConfig) -> DirectSumRequest:
    msa = config.msa
    return DirectSumRequest(
        **_pair_fields(config), m_tunnel=msa.m_tunnel, L_small=msa.L_small, m_small=msa.m_small
    )


def _molchanov(config: ExperimentConfig) -> MolchanovRequest:
    sampling = config.sampling
    return MolchanovRequest(
        **_common(config),
        site=config.geometry.site,
        times=tuple(sampling.t),
        n_paths=sampling.n_paths,
        averaged=sampling.averaged,
        replicate=sampling.replicate,
    )


def _characteristic(config: ExperimentConfig) -> CharacteristicRequest:
    sampling = config.sampling
    return CharacteristicRequest(
        **_common(config),
        site=config.geometry.site,
        times=tuple(sampling.t),
        n=sampling.n,
        conditional=config.experiment == "khat-cond",
        n_outer=sampling.n_outer,
        n_inner=sampling.n_inner,
    )


def _measure(config: ExperimentConfig) -> MeasureRequest:
    sampling = config.sampling
    return MeasureRequest(
        **_common(config), site=config.geometry.site, bins=sampling.bins, n=sampling.n, interval=sampling.interval
    )


def _implication(config: ExperimentConfig) -> ImplicationRequest:
    msa = config.msa
    return ImplicationRequest(
        **_common(config),
        interval=config.sampling.interval,
        m=msa.m,
        n=config.sampling.n,
        variant=msa.variant,
        subsquares=msa.subsquares,
        L_small=msa.L_small,
        m_small=msa.m_small,
        K=msa.K,
    )


def _count(config: ExperimentConfig) -> CountRequest:
    msa = config.msa
    return CountRequest(
        **_common(config),
        E=config.sampling.energy,
        m=msa.m,
        L_small=msa.L_small,
        n=config.sampling.n,
        counting_n=msa.counting_n,
        mode=msa.packing_mode,
        rule=msa.distant_rule,
        node_budget=msa.node_budget,
    )


def _mass(config: ExperimentConfig) -> MassRequest:
    sampling = config.sampling
    return MassRequest(
        **_common(config),
        E=sampling.energy,
        n=sampling.n,
        center=config.geometry.site,
        fit_window=(sampling.fit_min, sampling.fit_max),
    )


class ExperimentRunner:
    def __init__(
        self,
        build: BuildOperatorInteractor,
        spectrum: SpectrumInteractor,
        green: GreenInteractor,
        classify: ClassifyInteractor,
        schedule: ScheduleInteractor,
        geometry: GeometryOracleInteractor,
        wegner: WegnerInteractor,
        trace: TraceInequalityInteractor,
        resonance: ResonanceInteractor,
        tunneling: TunnelingInteractor,
        pairs: PairEventInteractor,
        direct_sum: DirectSumInteractor,
        molchanov: MolchanovInteractor,
        characteristic: CharacteristicInteractor,
        measure: SpectralMeasureInteractor,
        implication: ImplicationInteractor,
        count: PackingCountInteractor,
        mass: MassInteractor,
    ):
        self.experiments: dict[str, tuple[Callable, Callable]] = {
            "build": (build, _diagnostic),
            "spectrum": (spectrum, _diagnostic),
            "green": (green, _diagnostic),
            "classify": (classify, _diagnostic),
            "schedule": (schedule, _schedule),
            "geometry": (geometry, _geometry),
            "wegner": (wegner, _wegner),
            "wegner-cond": (wegner, _wegner),
            "trace": (trace, _wegner),
            "resonance": (resonance, _resonance),
            "tunneling": (tunneling, _tunneling),
            "pairs": (pairs, _pairs),
            "direct-sum": (direct_sum, _direct_sum),
            "molchanov": (molchanov, _molchanov),
            "khat": (characteristic, _characteristic),
            "khat-cond": (characteristic, _characteristic),
            "measure": (measure, _measure),
            "implication": (implication, _implication),
            "count": (count, _count),
            "mass": (mass, _mass),
        }

    def __call__(self, config: ExperimentConfig) -> list[ResultRow]:
        try:
            interactor, make_request = self.experiments[config.experiment]
        except KeyError:
            raise UnknownExperimentError(config.experiment) from None

        logger.info("Running %s with seed %s", config.experiment, config.seed)
        rows = interactor(make_request(config))
        violated = sum(row.status == EstimateStatus.BOUND_VIOLATED.value for row in rows)
        logger.info("Finished %s: %s records, %s bound violations", config.experiment, len(rows), violated)
        return rows
