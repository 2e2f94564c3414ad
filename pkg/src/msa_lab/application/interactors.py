import logging
import math

import numpy as np

from msa_lab.domain.disorder import (
    RadiusReading,
    characteristic_function,
    density_sup_norm,
    wegner_bound,
    wegner_constants,
    wegner_radius,
)
from msa_lab.domain.exceptions import DomainError
from msa_lab.domain.geometry import (
    DiagonalKind,
    OracleRule,
    ProjectionCase,
    classify_diagonal,
    covering_segment,
    dist_inf,
    is_l_distant,
    projection_disjointness_case,
    verify_projection_rules,
)
from msa_lab.domain.implications import (
    PackingMode,
    check_implication_nr_nt_ns,
    check_subsquare_implication,
    count_singular_subsquares,
    packing_counts,
)
from msa_lab.domain.models import PotentialSample
from msa_lab.domain.molchanov import molchanov_estimate
from msa_lab.domain.msa import (
    CountingReading,
    anchor_site,
    boundary_green_max,
    classify,
    classify_resonant,
    classify_tunneling,
    counting_bound,
    energy_grid,
    estimate_mass,
    schedule,
    singular_or_resonant,
    singular_site_scan,
)
from msa_lab.domain.operators import HamiltonianMatrix, build_h1, build_operator, site_key
from msa_lab.domain.spectral import (
    SpectralData,
    SpectralMeasureEstimate,
    eig_sym,
    eigenvalue_count,
    green,
    green_direct,
    green_row,
    histogram_weights,
    return_amplitude,
    spectral_dist,
)
from msa_lab.domain.statistics import BoundKind, ComplexEstimate, EstimateStatus, ProbEstimate
from msa_lab.domain.value_objects import DiagonalStrip, Segment, SubSquare

from .dto import (
    CharacteristicRequest,
    CountRequest,
    DiagnosticRequest,
    DirectSumRequest,
    EnergyRule,
    EstimatorRequest,
    GeometryRequest,
    ImplicationRequest,
    MassRequest,
    MeasureRequest,
    MolchanovRequest,
    PairEvent,
    PairEventRequest,
    Quantifier,
    ResonanceRequest,
    ResultRow,
    ScheduleRequest,
    TunnelingRequest,
    WegnerRequest,
)
from .exceptions import NoSamplesError
from .interfaces import GeneratorFactory, MatrixDumper, PotentialSampler, ReplicatePool

logger = logging.getLogger(__name__)

Z_95 = 1.959963984540054


def _require_samples(n: int) -> None:
    if n < 1:
        raise NoSamplesError()


def _half_widths(volume: Segment | SubSquare) -> tuple[int, int | None]:
    if isinstance(volume, Segment):
        return (volume.size - 1) // 2, None
    return (volume.hseg.size - 1) // 2, (volume.vseg.size - 1) // 2


def _radius(volume: Segment | SubSquare) -> int:
    return volume.radius


def _echo(request: EstimatorRequest) -> dict:
    return {
        "distribution": request.spec.distribution.value,
        "scale": request.spec.scale,
        "volume": str(request.volume),
        "statistics": request.stat.value,
        "d": request.inter.d,
        "profile": list(request.inter.profile),
    }


def _fields(request: EstimatorRequest) -> dict:
    L, L2 = _half_widths(request.volume)
    return {"L": L, "L2": L2, "g": request.spec.g, "parameters": _echo(request)}


def _center(sd: SpectralData, volume: Segment | SubSquare, site=None):
    return anchor_site(sd.basis, site if site is not None else volume.center)


def _resonant_flags(sd: SpectralData, energies: np.ndarray, L: int, beta: float) -> np.ndarray:
    distances = np.min(np.abs(sd.eigenvalues[:, None] - energies[None, :]), axis=0)
    return distances < math.exp(-(L**beta))


def _singular_flags(sd: SpectralData, volume, energies: np.ndarray, m: float, L: int) -> np.ndarray:
    center = _center(sd, volume)
    return np.array([singular_or_resonant(sd, center, volume, float(E), m, L).flag for E in energies])


class ReplicateInteractor:
    def __init__(self, sampler: PotentialSampler, pool: ReplicatePool):
        self.sampler = sampler
        self.pool = pool

    def _sample(self, request: EstimatorRequest, replicate: int, *volumes) -> PotentialSample:
        window = covering_segment(*(volumes or (request.volume,)))
        return self.sampler.sample_potential(request.spec, window, replicate)

    def _operator(self, request: EstimatorRequest, V: PotentialSample, volume=None) -> HamiltonianMatrix:
        return build_operator(volume or request.volume, V, request.spec.g, request.inter, request.stat)

    def _spectrum(self, request: EstimatorRequest, replicate: int) -> SpectralData:
        return eig_sym(self._operator(request, self._sample(request, replicate)))


class BuildOperatorInteractor(ReplicateInteractor):
    def __init__(self, sampler: PotentialSampler, pool: ReplicatePool, dumper: MatrixDumper):
        super().__init__(sampler=sampler, pool=pool)
        self.dumper = dumper

    def __call__(self, request: DiagnosticRequest) -> list[ResultRow]:
        h = self._operator(request, self._sample(request, request.replicate))
        if request.dump_path is not None:
            self.dumper.dump(h, request.dump_path)
        hopping = np.abs(h.entries - np.diag(h.diagonal))
        witnesses = {
            "dimension": h.dimension,
            "symmetric": bool(np.array_equal(h.entries, h.entries.T)),
            "max_hopping_row_sum": float(hopping.sum(axis=1).max()),
            "diagonal_min": float(h.diagonal.min()),
            "diagonal_max": float(h.diagonal.max()),
            "dump": request.dump_path,
        }
        row = ResultRow(experiment=request.experiment, seed=request.seed, n=1, witnesses=witnesses, **_fields(request))
        return [row]


class SpectrumInteractor(ReplicateInteractor):
    def __call__(self, request: DiagnosticRequest) -> list[ResultRow]:
        h = self._operator(request, self._sample(request, request.replicate))
        sd = eig_sym(h)
        residual = np.abs(h.entries @ sd.eigenvectors - sd.eigenvectors * sd.eigenvalues).max()
        orthogonality = np.abs(sd.eigenvectors.T @ sd.eigenvectors - np.eye(sd.dimension)).max()
        witnesses = {
            "eigenvalues": sd.eigenvalues.tolist(),
            "residual": float(residual),
            "orthogonality": float(orthogonality),
        }
        E = request.E
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=sd.dimension,
                E=E,
                r=spectral_dist(sd, E),
                witnesses=witnesses,
                **_fields(request),
            )
        ]


class GreenInteractor(ReplicateInteractor):
    def __call__(self, request: DiagnosticRequest) -> list[ResultRow]:
        h = self._operator(request, self._sample(request, request.replicate))
        sd = eig_sym(h)
        y = _center(sd, request.volume, request.site)
        if request.target is not None:
            u = site_key(request.target)
        else:
            _, u = boundary_green_max(sd, y, request.E, request.volume)
        expansion, direct = green(sd, y, u, request.E), green_direct(h, y, u, request.E)
        witnesses = {
            "y": y,
            "u": u,
            "eigen_expansion": expansion,
            "direct_solve": direct,
            "relative_difference": abs(expansion - direct) / max(abs(direct), 1e-300),
            "symmetric": green(sd, u, y, request.E) == expansion,
            "row_norm": float(np.linalg.norm(green_row(sd, y, request.E))),
        }
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=1,
                E=request.E,
                r=spectral_dist(sd, request.E),
                witnesses=witnesses,
                **_fields(request),
            )
        ]


class ClassifyInteractor(ReplicateInteractor):
    def __call__(self, request: DiagnosticRequest) -> list[ResultRow]:
        V = self._sample(request, request.replicate)
        h = self._operator(request, V)
        sd = eig_sym(h)
        L = _radius(request.volume)
        verdicts = classify(sd, request.volume, request.E, request.m, L, request.params.beta, request.site)
        scan = singular_site_scan(h, request.E, request.m, L)
        witnesses = {
            "resonant": verdicts.resonant.flag,
            "spectral_dist": verdicts.resonant.witness,
            "resonance_threshold": verdicts.resonant.threshold,
            "singular": verdicts.singular.flag,
            "green_max": verdicts.singular.witness,
            "singular_threshold": verdicts.singular.threshold,
            "near_energy_sites": len(scan.sites),
            "scan_threshold": scan.threshold,
        }
        if verdicts.tunneling is not None:
            witnesses |= {"tunneling": verdicts.tunneling.flag, "tunneling_sum": verdicts.tunneling.witness}
        else:
            for name, segment in (("horizontal", request.volume.hseg), ("vertical", request.volume.vseg)):
                verdict = classify_tunneling(eig_sym(build_h1(segment, V, request.spec.g)), segment, request.m)
                witnesses |= {f"{name}_tunneling": verdict.flag, f"{name}_tunneling_sum": verdict.witness}
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=1,
                m=request.m,
                E=request.E,
                witnesses=witnesses,
                **_fields(request),
            )
        ]


class ScheduleInteractor:
    def __call__(self, request: ScheduleRequest) -> list[ResultRow]:
        result = schedule(request.L0, request.m0, request.params, request.k_max)
        witnesses = {
            "Ls": [str(L) for L in result.Ls],
            "ms": list(result.ms),
            "mass_product": result.mass_product,
            "m_infinity_estimate": result.m_infinity_estimate,
            "truncated": result.truncated,
            "warnings": list(result.warnings),
        }
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=request.k_max,
                L=request.L0,
                m=request.m0,
                witnesses=witnesses,
                parameters={"p": request.params.p, "q": request.params.q, "alpha": request.params.alpha},
            )
        ]


class GeometryOracleInteractor:
    def __init__(self, pool: ReplicatePool):
        self.pool = pool

    def __call__(self, request: GeometryRequest) -> list[ResultRow]:
        jobs = []
        for rule in request.rules:
            for L in request.radii:
                ranges = request.ranges if rule is OracleRule.DIAGONAL_5L else request.ranges[:1]
                for d in ranges:
                    if rule is OracleRule.DIAGONAL_5L and L <= d:
                        logger.info("Skipping the diagonal rule at L=%s, d=%s: it needs L > d", L, d)
                        continue
                    jobs.append((rule, L, d))

        reports = self.pool.map(lambda job: verify_projection_rules(request.window, job[1], job[2], job[0]), jobs)
        rows = []
        for report in reports:
            violated = len(report.violations)
            rows.append(
                ResultRow(
                    experiment=request.experiment,
                    seed=request.seed,
                    n=report.pairs_checked,
                    L=report.L,
                    p_hat=violated / report.pairs_checked if report.pairs_checked else 0.0,
                    status=(EstimateStatus.BOUND_VIOLATED if violated else EstimateStatus.OK).value,
                    parameters={"window": str(request.window), "rule": report.rule.value, "d": report.d},
                    witnesses={
                        "squares": report.squares,
                        "conclusion_failures": report.conclusion_failures,
                        "violations": violated,
                        "first_violations": [[str(a), str(b), dist] for a, b, dist in report.violations[:5]],
                    },
                )
            )
        return rows


class WegnerInteractor(ReplicateInteractor):
    """Probability that the spectrum comes within r of E, against the Wegner-type bound."""

    def __call__(self, request: WegnerRequest) -> list[ResultRow]:
        constants = wegner_constants(request.spec)
        if not constants.applicable:
            logger.warning("Wegner bound inapplicable: B=%.4g <= 0; estimating without a bound", constants.B)
        if request.conditional:
            return self._conditional(request, constants)
        _require_samples(request.n)
        logger.info("Wegner estimate on %s with %s samples", request.volume, request.n)
        distances = np.array(
            self.pool.map(lambda j: spectral_dist(self._spectrum(request, j), request.E), range(request.n))
        )
        L1, L2 = _half_widths(request.volume)
        rows = []
        for r in request.radii:
            estimate = ProbEstimate.from_counts(
                int(np.count_nonzero(distances < r)), request.n, wegner_bound(constants.B, L1, L2 or 0, r)
            )
            rows.append(
                ResultRow.from_estimate(
                    request.experiment,
                    request.seed,
                    estimate,
                    E=request.E,
                    r=r,
                    witnesses={
                        "B": constants.B,
                        "a": constants.a,
                        "b": constants.b,
                        "radius_product": wegner_radius(L1, L2 or 0, request.params.beta, RadiusReading.PRODUCT),
                        "radius_minimum": wegner_radius(L1, L2 or L1, request.params.beta, RadiusReading.MINIMUM),
                    },
                    **_fields(request),
                )
            )
        return rows

    def _conditional(self, request: WegnerRequest, constants) -> list[ResultRow]:
        volume = request.volume
        if not isinstance(volume, SubSquare) or volume.horizontal.intersects(volume.vertical):
            raise DomainError(f"Conditional estimate needs disjoint projections, got {volume}")
        _require_samples(request.n_inner)
        frozen = [volume.vertical]
        logger.info(
            "Conditional Wegner estimate: sup over %s conditioning draws of %s inner samples",
            request.n_outer,
            request.n_inner,
        )

        def outer(o: int) -> np.ndarray:
            base = self._sample(request, o)
            shift = 0.0
            if request.energy_rule is EnergyRule.CONDITIONED_MEAN:
                shift = request.spec.g * float(np.mean(base.values_at(volume.vertical.sites)))
            counts = np.zeros(len(request.radii), dtype=np.int64)
            for i in range(request.n_inner):
                V = self.sampler.conditional_resample(request.spec, base, frozen, i)
                dist = spectral_dist(eig_sym(self._operator(request, V)), request.E + shift)
                counts += np.array([dist < r for r in request.radii])
            return counts

        counts = np.array(self.pool.map(outer, range(request.n_outer)))
        L1, L2 = _half_widths(volume)
        rows = []
        for k, r in enumerate(request.radii):
            best = int(np.argmax(counts[:, k]))
            estimate = ProbEstimate.from_counts(
                int(counts[best, k]), request.n_inner, wegner_bound(constants.B, L1, L2, r, conditional=True)
            )
            rows.append(
                ResultRow.from_estimate(
                    request.experiment,
                    request.seed,
                    estimate,
                    E=request.E,
                    r=r,
                    witnesses={
                        "B": constants.B,
                        "n_outer": request.n_outer,
                        "argmax_outer": best,
                        "energy_rule": request.energy_rule.value,
                        "sup_is_lower_bound": True,
                    },
                    **_fields(request),
                )
            )
        return rows


class TraceInequalityInteractor(ReplicateInteractor):
    """P{dist < r} against the mean eigenvalue count in (E - r, E + r), sample by sample."""

    def __call__(self, request: WegnerRequest) -> list[ResultRow]:
        _require_samples(request.n)
        spectra = self.pool.map(lambda j: self._spectrum(request, j), range(request.n))
        rows = []
        for r in request.radii:
            hits = np.array([spectral_dist(sd, request.E) < r for sd in spectra])
            counts = np.array([eigenvalue_count(sd, request.E, r) for sd in spectra])
            failures = int(np.count_nonzero(hits & (counts < 1)))
            estimate = ProbEstimate.from_counts(int(np.count_nonzero(hits)), request.n, float(counts.mean()))
            row = ResultRow.from_estimate(
                request.experiment,
                request.seed,
                estimate,
                E=request.E,
                r=r,
                witnesses={"mean_count": float(counts.mean()), "dominance_failures": failures},
                **_fields(request),
            )
            if failures:
                row.status = EstimateStatus.BOUND_VIOLATED.value
            rows.append(row)
        return rows


class ResonanceInteractor(ReplicateInteractor):
    def __call__(self, request: ResonanceRequest) -> list[ResultRow]:
        _require_samples(request.n)
        L, beta = _radius(request.volume), request.params.beta
        flags = self.pool.map(
            lambda j: classify_resonant(self._spectrum(request, j), request.E, L, beta).flag, range(request.n)
        )
        sup_norm = density_sup_norm(request.spec)
        bound = request.volume.size**2 * sup_norm * math.exp(-(L**beta))
        estimate = ProbEstimate.from_counts(sum(flags), request.n, bound)
        witnesses = {"density_sup_norm": sup_norm, "threshold": math.exp(-(L**beta)), "L_pow_q": L**-request.params.q}
        return [
            ResultRow.from_estimate(
                request.experiment, request.seed, estimate, E=request.E, witnesses=witnesses, **_fields(request)
            )
        ]


class TunnelingInteractor(ReplicateInteractor):
    def __call__(self, request: TunnelingRequest) -> list[ResultRow]:
        if not isinstance(request.volume, Segment):
            raise DomainError("Tunneling is defined on segments")
        _require_samples(request.n)
        L = _radius(request.volume)
        flags = self.pool.map(
            lambda j: classify_tunneling(self._spectrum(request, j), request.volume, request.m).flag, range(request.n)
        )
        non_tunneling = request.n - sum(flags)
        estimate = ProbEstimate.from_counts(
            non_tunneling, request.n, 1.0 - float(L) ** -request.params.q, BoundKind.LOWER
        )
        return [ResultRow.from_estimate(request.experiment, request.seed, estimate, m=request.m, **_fields(request))]


def _pair_geometry(first, second) -> dict:
    if not (isinstance(first, SubSquare) and isinstance(second, SubSquare)):
        return {}
    L = min(_radius(first), _radius(second))
    return {
        "projection_case": projection_disjointness_case(first, second).value,
        "dist_inf": dist_inf(first, second),
        "l_distant": is_l_distant(first, second, L),
    }


class PairEventInteractor(ReplicateInteractor):
    """Frequency of "both volumes singular (or resonant)" over an energy set."""

    def __call__(self, request: PairEventRequest) -> list[ResultRow]:
        _require_samples(request.n)
        first, second = request.volume, request.second
        L, beta = min(_radius(first), _radius(second)), request.params.beta
        geometry = _pair_geometry(first, second)
        low, high = request.interval
        bound = None
        if request.event is PairEvent.BOTH_RESONANT:
            fully_disjoint = geometry.get("projection_case") == ProjectionCase.ALL_DISJOINT.value
            if fully_disjoint and request.quantifier is Quantifier.EXISTS_E:
                low, high = low - 0.5 * math.exp(-(L**beta)), high + 0.5 * math.exp(-(L**beta))
                bound = float(L) ** -request.params.q
        elif geometry.get("l_distant"):
            bound = float(L) ** (-2 * request.params.p)
        energies = energy_grid((low, high), L, beta, request.grid_spacing, request.grid_points)

        def event(j: int) -> bool:
            V = self._sample(request, j, first, second)
            sd_a = eig_sym(self._operator(request, V, first))
            sd_b = eig_sym(self._operator(request, V, second))
            if request.event is PairEvent.BOTH_RESONANT:
                both = _resonant_flags(sd_a, energies, _radius(first), beta) & _resonant_flags(
                    sd_b, energies, _radius(second), beta
                )
            else:
                both = _singular_flags(sd_a, first, energies, request.m, _radius(first)) & _singular_flags(
                    sd_b, second, energies, request.m, _radius(second)
                )
            return bool(np.any(both) if request.quantifier is Quantifier.EXISTS_E else np.all(both))

        successes = sum(self.pool.map(event, range(request.n)))
        estimate = ProbEstimate.from_counts(successes, request.n, bound)
        witnesses = geometry | {
            "event": request.event.value,
            "quantifier": request.quantifier.value,
            "grid_points": int(energies.shape[0]),
            "second": str(second),
        }
        return [
            ResultRow.from_estimate(
                request.experiment, request.seed, estimate, m=request.m, E=low, witnesses=witnesses, **_fields(request)
            )
        ]


class DirectSumInteractor(ReplicateInteractor):
    """Joint frequencies of the events used for a pair with an off-diagonal member."""

    EVENTS = ("B", "C", "T", "D", "B_not_C_not_T")

    def __call__(self, request: DirectSumRequest) -> list[ResultRow]:
        _require_samples(request.n)
        first, second = request.volume, request.second
        if not (isinstance(first, SubSquare) and isinstance(second, SubSquare)):
            raise DomainError("Direct-sum events need two squares")
        L, beta = min(_radius(first), _radius(second)), request.params.beta
        energies = energy_grid(request.interval, L, beta, request.grid_spacing, request.grid_points)
        segments = self._tunneling_windows(first, second, request.L_small)
        strip = DiagonalStrip(request.inter.d)
        kinds = [classify_diagonal(sq, strip).value for sq in (first, second)]
        if DiagonalKind.OFF_DIAGONAL.value not in kinds:
            logger.warning("Neither %s nor %s is off-diagonal", first, second)

        def events(j: int) -> tuple[bool, ...]:
            V = self._sample(request, j, first, second)
            sd_a = eig_sym(self._operator(request, V, first))
            sd_b = eig_sym(self._operator(request, V, second))
            both_singular = np.any(
                _singular_flags(sd_a, first, energies, request.m, _radius(first))
                & _singular_flags(sd_b, second, energies, request.m, _radius(second))
            )
            both_resonant = np.any(
                _resonant_flags(sd_a, energies, _radius(first), beta)
                & _resonant_flags(sd_b, energies, _radius(second), beta)
            )
            tunneling = any(
                classify_tunneling(eig_sym(build_h1(segment, V, request.spec.g)), segment, request.m_tunnel).flag
                for segment in segments
            )
            packed = any(
                max(
                    count.count
                    for count in packing_counts(
                        sq,
                        V,
                        energies,
                        request.m_small,
                        request.L_small,
                        request.spec.g,
                        request.inter,
                        request.stat,
                        mode=PackingMode.OFF_DIAGONAL_DISJOINT,
                    )
                )
                >= 2
                for sq in (first, second)
            )
            exclusion = both_singular and not both_resonant and not tunneling
            return bool(both_singular), bool(both_resonant), tunneling, packed, bool(exclusion)

        outcomes = np.array(self.pool.map(events, range(request.n)), dtype=bool).reshape(request.n, len(self.EVENTS))
        target = float(L) ** (-2 * request.params.p)
        rows = []
        for k, name in enumerate(self.EVENTS):
            bound = target if name in ("B", "B_not_C_not_T") else None
            estimate = ProbEstimate.from_counts(int(outcomes[:, k].sum()), request.n, bound)
            if bound is not None and bound < estimate.resolution:
                logger.warning(
                    "Target %.3g for event %s is below the resolution %.3g of %s samples",
                    bound,
                    name,
                    estimate.resolution,
                    request.n,
                )
            rows.append(
                ResultRow.from_estimate(
                    request.experiment,
                    request.seed,
                    estimate,
                    m=request.m,
                    witnesses=_pair_geometry(first, second)
                    | {"event": name, "kinds": kinds, "tunneling_windows": len(segments)},
                    **_fields(request),
                )
            )
        return rows

    @staticmethod
    def _tunneling_windows(first: SubSquare, second: SubSquare, radius: int) -> list[Segment]:
        windows = set()
        for sq in (first, second):
            for projection in (sq.horizontal, sq.vertical):
                for x in range(projection.a + radius, projection.b - radius + 1):
                    windows.add(Segment.centered(x, radius))
        return sorted(windows, key=lambda segment: (segment.a, segment.b))


class MolchanovInteractor(ReplicateInteractor):
    """Path-integral estimate of ⟨δ_u, e^{itH} δ_u⟩ for a fixed sample or averaged over disorder."""

    def __init__(self, sampler: PotentialSampler, pool: ReplicatePool, generators: GeneratorFactory):
        super().__init__(sampler=sampler, pool=pool)
        self.generators = generators

    def __call__(self, request: MolchanovRequest) -> list[ResultRow]:
        _require_samples(request.n_paths)
        h = self._operator(request, self._sample(request, request.replicate))
        sd = eig_sym(h)
        u = _center(sd, request.volume, request.site)
        constants = wegner_constants(request.spec)
        field_of = self._averaged_field(request, h) if request.averaged else None

        def run(t: float) -> ComplexEstimate:
            rng = self.generators(request.seed, f"molchanov/{t!r}", request.replicate)
            return molchanov_estimate(h, u, t, request.n_paths, rng, field_of)

        estimates = self.pool.map(run, request.times)
        rows = []
        for t, estimate in zip(request.times, estimates):
            witnesses = {"t": t, "site": u, "averaged": request.averaged}
            bound = None
            if request.averaged and constants.applicable:
                bound = math.exp(-constants.B * abs(t))
            elif not request.averaged:
                reference = return_amplitude(sd, u, t)
                witnesses |= {
                    "reference_re": reference.real,
                    "reference_im": reference.imag,
                    "within_3_stderr": estimate.within(reference) or abs(estimate.value - reference) < 1e-12,
                }
            rows.append(
                ResultRow.from_complex(
                    request.experiment, request.seed, estimate, bound, witnesses=witnesses, **_fields(request)
                )
            )
        return rows

    def _averaged_field(self, request: MolchanovRequest, h: HamiltonianMatrix):
        spec, g = request.spec, request.spec.g

        def diagonal(ids: np.ndarray, rows: np.ndarray) -> np.ndarray:
            sites = h.basis[rows]
            if sites.ndim == 1:
                return g * self.sampler.site_values(spec, ids, sites)
            potential = self.sampler.site_values(spec, ids, sites[:, 0]) + self.sampler.site_values(
                spec, ids, sites[:, 1]
            )
            return request.inter.energy(sites) + g * potential

        return diagonal


class CharacteristicInteractor(ReplicateInteractor):
    """Disorder average of ⟨δ_u, e^{itH} δ_u⟩ by eigen-expansion."""

    def __call__(self, request: CharacteristicRequest) -> list[ResultRow]:
        constants = wegner_constants(request.spec)
        times = np.asarray(request.times, dtype=float)
        if request.conditional:
            return self._conditional(request, constants, times)
        _require_samples(request.n)

        def amplitudes(j: int) -> np.ndarray:
            sd = self._spectrum(request, j)
            u = _center(sd, request.volume, request.site)
            return np.array([return_amplitude(sd, u, float(t)) for t in times])

        samples = np.array(self.pool.map(amplitudes, range(request.n)))
        rows = []
        for k, t in enumerate(times):
            estimate = ComplexEstimate.from_samples(samples[:, k])
            rows.append(self._row(request, constants, float(t), estimate, 1.0))
        return rows

    def _conditional(self, request: CharacteristicRequest, constants, times: np.ndarray) -> list[ResultRow]:
        volume = request.volume
        if not isinstance(volume, SubSquare) or volume.horizontal.intersects(volume.vertical):
            raise DomainError(f"Conditional estimate needs disjoint projections, got {volume}")
        _require_samples(request.n_inner)
        frozen = [volume.vertical]

        def outer(o: int) -> np.ndarray:
            base = self._sample(request, o)
            values = np.zeros((request.n_inner, times.shape[0]), dtype=complex)
            for i in range(request.n_inner):
                sd = eig_sym(self._operator(request, self.sampler.conditional_resample(request.spec, base, frozen, i)))
                u = _center(sd, volume, request.site)
                values[i] = [return_amplitude(sd, u, float(t)) for t in times]
            return values

        draws = self.pool.map(outer, range(request.n_outer))
        rows = []
        for k, t in enumerate(times):
            estimates = [ComplexEstimate.from_samples(values[:, k]) for values in draws]
            best = int(np.argmax([estimate.modulus for estimate in estimates]))
            estimate = ComplexEstimate(
                estimates[best].value,
                estimates[best].stderr,
                estimates[best].n,
                {"argmax_outer": best, "n_outer": request.n_outer},
            )
            rows.append(self._row(request, constants, float(t), estimate, 0.5))
        return rows

    @staticmethod
    def _row(request, constants, t: float, estimate: ComplexEstimate, factor: float) -> ResultRow:
        bound = math.exp(-factor * constants.B * abs(t)) if constants.applicable else None
        witnesses = {
            "t": t,
            "B": constants.B,
            "single_site": characteristic_function(request.spec, request.spec.g * t),
            "stated_exponent": constants.stated_exponent,
            "proof_exponent": constants.proof_exponent,
            "stated_decay": math.exp(-2 * factor * abs(t) * constants.stated_exponent),
            "proof_decay": math.exp(-2 * factor * abs(t) * constants.proof_exponent),
        }
        return ResultRow.from_complex(
            request.experiment, request.seed, estimate, bound, witnesses=witnesses, **_fields(request)
        )


class SpectralMeasureInteractor(ReplicateInteractor):
    def __call__(self, request: MeasureRequest) -> list[ResultRow]:
        _require_samples(request.n)
        low, high = request.interval
        edges = np.linspace(low, high, request.bins + 1)

        def weights(j: int) -> np.ndarray:
            sd = self._spectrum(request, j)
            return histogram_weights(sd, _center(sd, request.volume, request.site), edges)

        masses = np.array(self.pool.map(weights, range(request.n)))
        widths = np.diff(edges)
        stderr = masses.std(axis=0, ddof=1) / math.sqrt(request.n) if request.n > 1 else np.zeros(request.bins)
        measure = SpectralMeasureEstimate(edges, masses.mean(axis=0) / widths, stderr / widths, request.n)
        rows = []
        for k in range(request.bins):
            mass, spread = measure.density[k] * widths[k], Z_95 * stderr[k]
            rows.append(
                ResultRow(
                    experiment=request.experiment,
                    seed=request.seed,
                    n=request.n,
                    E=float(0.5 * (edges[k] + edges[k + 1])),
                    r=float(0.5 * widths[k]),
                    p_hat=float(mass),
                    ci_low=float(max(0.0, mass - spread)),
                    ci_high=float(mass + spread),
                    witnesses={"bin": k, "density": float(measure.density[k])},
                    **_fields(request),
                )
            )
        rows.append(
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=request.n,
                p_hat=measure.total_mass,
                witnesses={
                    "summary": True,
                    "total_mass": measure.total_mass,
                    "outside_mass": 1.0 - measure.total_mass,
                    "total_stderr": measure.total_mass_stderr,
                },
                **_fields(request),
            )
        )
        return rows


class ImplicationInteractor(ReplicateInteractor):
    """Searches random (sample, energy) pairs for counterexamples to a deterministic implication."""

    def __init__(self, sampler: PotentialSampler, pool: ReplicatePool, generators: GeneratorFactory):
        super().__init__(sampler=sampler, pool=pool)
        self.generators = generators

    def __call__(self, request: ImplicationRequest) -> list[ResultRow]:
        _require_samples(request.n)
        low, high = request.interval
        beta = request.params.beta

        def case(j: int):
            E = float(self.generators(request.seed, "implication/energy", j).uniform(low, high))
            V = self._sample(request, j)
            if request.subsquares:
                return check_subsquare_implication(
                    request.volume,
                    V,
                    E,
                    request.m_small,
                    request.m,
                    request.L_small,
                    request.K,
                    beta,
                    request.spec.g,
                    request.inter,
                    request.stat,
                )
            return check_implication_nr_nt_ns(
                request.volume, V, E, request.m, beta, request.variant, request.spec.g, request.inter.d
            )

        records = self.pool.map(case, range(request.n))
        satisfied = [record for record in records if record.hypotheses_hold]
        counterexamples = [record for record in satisfied if not record.holds]
        variant = records[0].variant
        logger.info(
            "Implication %s: %s cases, %s with hypotheses, %s counterexamples",
            variant,
            request.n,
            len(satisfied),
            len(counterexamples),
        )
        status = EstimateStatus.BOUND_VIOLATED if counterexamples else EstimateStatus.OK
        witnesses = {
            "variant": variant,
            "hypothesis_cases": len(satisfied),
            "counterexamples": len(counterexamples),
            "m_prime": records[0].m_prime,
            "first_counterexamples": [
                {"E": record.E, "green_max": record.conclusion.witness, "threshold": record.conclusion.threshold}
                for record in counterexamples[:5]
            ],
        }
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=request.n,
                m=request.m,
                p_hat=len(counterexamples) / request.n,
                status=status.value,
                witnesses=witnesses,
                **_fields(request),
            )
        ]


class PackingCountInteractor(ReplicateInteractor):
    """Distribution of the maximal number of compatible singular sub-squares."""

    def __call__(self, request: CountRequest) -> list[ResultRow]:
        _require_samples(request.n)
        if not isinstance(request.volume, SubSquare):
            raise DomainError("Packing counts need a square")

        def count(j: int):
            return count_singular_subsquares(
                request.volume,
                self._sample(request, j),
                request.E,
                request.m,
                request.L_small,
                request.spec.g,
                request.inter,
                request.stat,
                request.mode,
                request.rule,
                request.node_budget,
            )

        counts = self.pool.map(count, range(request.n))
        values = np.array([result.count for result in counts])
        threshold = 2 * request.counting_n
        readings = {
            reading.value: counting_bound(request.L_small, request.counting_n, request.params, reading)
            for reading in CountingReading
        }
        estimate = ProbEstimate.from_counts(
            int(np.count_nonzero(values >= threshold)), request.n, readings[CountingReading.STATED.value]
        )
        witnesses = {
            "threshold": threshold,
            "mean_count": float(values.mean()),
            "max_count": int(values.max()),
            "inexact": sum(not result.exact for result in counts),
            "mode": request.mode.value,
            "rule": request.rule.value,
            "readings": readings,
        }
        return [
            ResultRow.from_estimate(
                request.experiment,
                request.seed,
                estimate,
                m=request.m,
                E=request.E,
                witnesses=witnesses,
                **_fields(request),
            )
        ]


class MassInteractor(ReplicateInteractor):
    def __call__(self, request: MassRequest) -> list[ResultRow]:
        _require_samples(request.n)
        fits = self.pool.map(
            lambda j: estimate_mass(self._spectrum(request, j), request.center, request.fit_window, request.E),
            range(request.n),
        )
        masses = np.array([fit.m_hat for fit in fits])
        r2 = np.array([fit.r2 for fit in fits])
        witnesses = {
            "median_m_hat": float(np.median(masses)),
            "median_r2": float(np.median(r2)),
            "m_hat": masses.tolist(),
            "r2": r2.tolist(),
            "floored": sum(fit.floored for fit in fits),
        }
        return [
            ResultRow(
                experiment=request.experiment,
                seed=request.seed,
                n=request.n,
                m=float(np.median(masses)),
                E=request.E,
                witnesses=witnesses,
                **_fields(request),
            )
        ]
