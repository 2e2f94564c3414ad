from collections.abc import Iterable

from dishka import Provider, Scope, from_context, provide

from msa_lab.application.interactors import (
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
from msa_lab.application.interfaces import (
    GeneratorFactory,
    MatrixDumper,
    PotentialSampler,
    ReplicatePool,
    ResultSink,
)
from msa_lab.application.runner import ExperimentRunner
from msa_lab.config import RuntimeConfig
from msa_lab.infrastructure.counter_rng import CounterPotentialSampler, make_generator
from msa_lab.infrastructure.result_writer import ResultEmitter, TripletMatrixDumper
from msa_lab.infrastructure.worker_pool import ThreadReplicatePool
from msa_lab.presentation.schemas import CSV_COLUMNS


class AppProvider(Provider):
    runtime = from_context(provides=RuntimeConfig, scope=Scope.APP)

    @provide(scope=Scope.APP)
    def get_sampler(self) -> PotentialSampler:
        return CounterPotentialSampler()

    @provide(scope=Scope.APP)
    def get_pool(self, runtime: RuntimeConfig) -> Iterable[ReplicatePool]:
        pool = ThreadReplicatePool(workers=runtime.workers)
        try:
            yield pool
        finally:
            pool.close()

    @provide(scope=Scope.APP)
    def get_generator_factory(self) -> GeneratorFactory:
        return make_generator

    @provide(scope=Scope.APP)
    def get_result_sink(self) -> ResultSink:
        return ResultEmitter(columns=CSV_COLUMNS)

    @provide(scope=Scope.APP)
    def get_matrix_dumper(self) -> MatrixDumper:
        return TripletMatrixDumper()

    build = provide(BuildOperatorInteractor, scope=Scope.REQUEST)
    spectrum = provide(SpectrumInteractor, scope=Scope.REQUEST)
    green = provide(GreenInteractor, scope=Scope.REQUEST)
    classify = provide(ClassifyInteractor, scope=Scope.REQUEST)
    schedule = provide(ScheduleInteractor, scope=Scope.REQUEST)
    geometry = provide(GeometryOracleInteractor, scope=Scope.REQUEST)
    wegner = provide(WegnerInteractor, scope=Scope.REQUEST)
    trace = provide(TraceInequalityInteractor, scope=Scope.REQUEST)
    resonance = provide(ResonanceInteractor, scope=Scope.REQUEST)
    tunneling = provide(TunnelingInteractor, scope=Scope.REQUEST)
    pairs = provide(PairEventInteractor, scope=Scope.REQUEST)
    direct_sum = provide(DirectSumInteractor, scope=Scope.REQUEST)
    molchanov = provide(MolchanovInteractor, scope=Scope.REQUEST)
    characteristic = provide(CharacteristicInteractor, scope=Scope.REQUEST)
    measure = provide(SpectralMeasureInteractor, scope=Scope.REQUEST)
    implication = provide(ImplicationInteractor, scope=Scope.REQUEST)
    count = provide(PackingCountInteractor, scope=Scope.REQUEST)
    mass = provide(MassInteractor, scope=Scope.REQUEST)
    runner = provide(ExperimentRunner, scope=Scope.REQUEST)
