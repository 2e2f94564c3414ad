import json
import math

import numpy as np
import pytest
from scipy import stats

from msa_lab.application.dto import ResultRow
from msa_lab.application.exceptions import ConfigurationError, OutputError
from msa_lab.config import RuntimeConfig, load_experiment_config
from msa_lab.domain.disorder import (
    char_bound_params,
    potential_energy_2p,
    verify_char_bound,
    wegner_bound,
    wegner_constants,
)
from msa_lab.domain.exceptions import CoverageError, DomainError, EmptyWindowError, ResonantEnergyError
from msa_lab.domain.geometry import (
    DiagonalKind,
    OracleRule,
    ProjectionCase,
    boundary_sites,
    classify_diagonal,
    covering_segment,
    dist_inf,
    is_l_distant,
    project,
    projection_disjointness_case,
    verify_projection_rules,
)
from msa_lab.domain.implications import NODE_BUDGET, _maximum_packing
from msa_lab.domain.models import DisorderSpec, DistributionKind, InteractionSpec, PotentialSample, Statistics
from msa_lab.domain.molchanov import path_integrand, simulate_path
from msa_lab.domain.msa import (
    CountingReading,
    MassVariant,
    MsaParams,
    anchor_site,
    classify,
    classify_resonant,
    classify_tunneling,
    counting_bound,
    energy_grid,
    estimate_mass,
    fit_decay,
    mass_degrade,
    schedule,
    singular_site_scan,
)
from msa_lab.domain.operators import build_h1, build_h2, build_h2_ni, tensor_sum_check
from msa_lab.domain.spectral import (
    eig_sym,
    eigenvalue_count,
    green,
    green_direct,
    green_row,
    histogram_weights,
    return_amplitude,
    spectral_dist,
)
from msa_lab.domain.statistics import BoundKind, ComplexEstimate, EstimateStatus, ProbEstimate, clopper_pearson
from msa_lab.domain.value_objects import DiagonalStrip, Segment, SubSquare
from msa_lab.infrastructure.counter_rng import CounterPotentialSampler, derive_seed, derive_seeds, make_generator
from msa_lab.infrastructure.result_writer import ResultEmitter, emit_results
from msa_lab.presentation.schemas import ResultRecord

CAUCHY = DisorderSpec(DistributionKind.CAUCHY, scale=1.0, g=5.0, master_seed=7)


def zeros(window: Segment) -> PotentialSample:
    return PotentialSample(window, np.zeros(window.size))


def random_square(rng: np.random.Generator, max_radius: int = 2) -> SubSquare:
    center = (int(rng.integers(3, 30)), int(rng.integers(3, 30)))
    return SubSquare.centered(center, int(rng.integers(0, max_radius + 1)), clip=False)


class TestSegment:
    def test_centered(self):
        segment = Segment.centered(5, 2)
        assert (segment.a, segment.b) == (3, 7)
        assert segment.size == 5
        assert segment.center == 5 and segment.radius == 2

    def test_reversed_endpoints(self):
        with pytest.raises(DomainError):
            Segment(3, 1)

    def test_even_length_has_no_center(self):
        with pytest.raises(DomainError, match="window not centered"):
            Segment(0, 3).center


class TestSubSquare:
    def test_projection_of_product(self):
        sq = SubSquare(Segment(0, 4), Segment(0, 4), clip=False)
        assert project(sq, 1) == Segment(0, 4)

    def test_projection_of_clipped_square(self):
        sq = SubSquare(Segment(0, 2), Segment(0, 2))
        assert project(sq, 2) == Segment(0, 2)
        assert sq.size == 6

    def test_clipping_can_empty_a_window(self):
        with pytest.raises(EmptyWindowError):
            SubSquare(Segment(0, 2), Segment(5, 7))

    def test_bad_axis(self):
        with pytest.raises(DomainError):
            project(SubSquare(Segment(0, 2), Segment(0, 2)), 3)

    def test_covering_segment(self):
        first = SubSquare.centered((10, 0), 1)
        assert covering_segment(first, Segment(20, 22)) == Segment(-1, 22)


class TestGeometry:
    def test_l_distant_is_strict(self):
        first = SubSquare(Segment(0, 20), Segment(0, 20), clip=False)
        near = SubSquare(Segment(101, 121), Segment(0, 20), clip=False)
        far = SubSquare(Segment(102, 122), Segment(0, 20), clip=False)
        assert not is_l_distant(first, near, 10)
        assert is_l_distant(first, far, 10)

    def test_diagonal_point(self):
        assert classify_diagonal(SubSquare.centered((3, 3), 1), DiagonalStrip(0)) is DiagonalKind.DIAGONAL

    def test_strip_width_decides(self):
        sq = SubSquare(Segment(10, 12), Segment(0, 2))
        assert classify_diagonal(sq, DiagonalStrip(4)) is DiagonalKind.OFF_DIAGONAL
        assert classify_diagonal(sq, DiagonalStrip(8)) is DiagonalKind.DIAGONAL

    def test_one_projection_free(self):
        first = SubSquare(Segment(0, 2), Segment(0, 2), clip=False)
        second = SubSquare(Segment(0, 2), Segment(100, 102), clip=False)
        assert projection_disjointness_case(first, second) is ProjectionCase.ONE_PROJECTION_FREE

    def test_all_disjoint(self):
        first = SubSquare.centered((10, 0), 1)
        second = SubSquare.centered((40, 25), 1)
        assert projection_disjointness_case(first, second) is ProjectionCase.ALL_DISJOINT

    def test_distant_diagonal_squares_have_disjoint_projections(self):
        first = SubSquare.centered((3, 3), 2)
        second = SubSquare.centered((30, 30), 2)
        assert projection_disjointness_case(first, second, L=2, d=1) is ProjectionCase.ALL_DISJOINT

    def test_diagonal_hypothesis_needs_l_above_d(self):
        first = SubSquare.centered((3, 3), 2)
        second = SubSquare.centered((30, 30), 2)
        with pytest.raises(DomainError, match="L > d"):
            projection_disjointness_case(first, second, L=2, d=2)

    def test_boundary_of_a_full_square(self):
        assert len(boundary_sites(SubSquare.centered((10, 10), 1, clip=False))) == 8

    def test_boundary_of_a_clipped_square(self):
        assert len(boundary_sites(SubSquare(Segment(0, 2), Segment(0, 2)))) == 6

    def test_interior_sites_keep_every_neighbour(self):
        sq = SubSquare.centered((10, 10), 3)
        inside = {tuple(site) for site in sq.sites.tolist()}
        boundary = {tuple(site) for site in boundary_sites(sq).tolist()}
        assert boundary <= inside
        for x1, x2 in inside:
            surrounded = all((x1 + s1, x2 + s2) in inside for s1, s2 in ((1, 0), (-1, 0), (0, 1), (0, -1)))
            assert surrounded == ((x1, x2) not in boundary)

    def test_dist_inf_examples(self):
        wide = SubSquare.centered((10, 10), 10, clip=False), SubSquare.centered((110, 10), 10, clip=False)
        small = SubSquare.centered((1, 1), 1, clip=False), SubSquare.centered((6, 6), 1, clip=False)
        assert dist_inf(*wide) == 80
        assert dist_inf(*small) == 3
        assert dist_inf(wide[0], wide[0]) == 0

    def test_dist_inf_against_enumeration(self):
        rng = make_generator(3, "squares")
        for _ in range(40):
            first, second, third = random_square(rng), random_square(rng), random_square(rng)
            gaps = np.abs(first.sites[:, None, :] - second.sites[None, :, :]).max(axis=2)
            assert dist_inf(first, second) == int(gaps.min()) == dist_inf(second, first)
            assert dist_inf(first, third) <= dist_inf(first, second) + 2 * second.radius + dist_inf(second, third)

    def test_dist_inf_triangle_inequality_on_sites(self):
        rng = make_generator(4, "sites")
        for _ in range(40):
            a, b, c = random_square(rng, 0), random_square(rng, 0), random_square(rng, 0)
            assert dist_inf(a, c) <= dist_inf(a, b) + dist_inf(b, c)

    @pytest.mark.parametrize("rule", [OracleRule.DIAGONAL_5L, OracleRule.DISTANT_8L])
    def test_projection_rules_hold_on_a_small_window(self, rule):
        window = SubSquare(Segment(0, 29), Segment(0, 29))
        report = verify_projection_rules(window, L=2, d=1, rule=rule)
        assert report.pairs_checked > 0
        assert report.holds

    def test_diagonal_rule_needs_l_above_d(self):
        window = SubSquare(Segment(0, 19), Segment(0, 19))
        with pytest.raises(DomainError):
            verify_projection_rules(window, L=2, d=2, rule=OracleRule.DIAGONAL_5L)


class TestDisorder:
    def test_cauchy_constants(self):
        assert char_bound_params(CAUCHY) == (1.0, 1.0)
        assert wegner_constants(CAUCHY).B == 6.0

    def test_gaussian_constants_dominate(self):
        spec = DisorderSpec(DistributionKind.GAUSSIAN, scale=1.0, g=1.0)
        a, b = char_bound_params(spec)
        assert a == 1.0 and b == pytest.approx(math.exp(0.5))
        assert verify_char_bound(spec, t_max=2.0)

    def test_wegner_bound_values(self):
        assert wegner_bound(6.0, 2, 2, 0.01) == pytest.approx(0.02653, abs=1e-5)
        assert wegner_bound(6.0, 2, 2, 0.01, conditional=True) == pytest.approx(0.05305, abs=1e-5)

    def test_wegner_bound_inapplicable(self):
        assert wegner_bound(0.0, 2, 2, 0.01) is None
        assert not wegner_constants(CAUCHY.with_amplitude(1.0)).applicable

    def test_two_particle_potential(self):
        V = PotentialSample(Segment(0, 5), [0.0, 0.0, 1.5, 0.0, 0.0, 0.0])
        assert potential_energy_2p((2, 2), V, InteractionSpec(d=0, profile=(3.0,)), g=2.0) == 9.0
        assert potential_energy_2p((5, 1), V, InteractionSpec.constant(2, 7.0), g=0.0) == 0.0

    def test_invalid_specs(self):
        with pytest.raises(DomainError):
            DisorderSpec(DistributionKind.CAUCHY, scale=0.0, g=1.0)
        with pytest.raises(DomainError):
            InteractionSpec(d=1, profile=(1.0,))


class TestCounterSampler:
    def test_same_seed_same_values(self):
        sampler = CounterPotentialSampler()
        first = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=3)
        second = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=3)
        assert np.array_equal(first.values, second.values)

    def test_values_do_not_depend_on_the_window(self):
        sampler = CounterPotentialSampler()
        small = sampler.sample_potential(CAUCHY, Segment(4, 6), replicate=1)
        large = sampler.sample_potential(CAUCHY, Segment(0, 20), replicate=1)
        assert np.array_equal(small.values, large.values_at(np.array([4, 5, 6])))

    def test_replicates_differ(self):
        sampler = CounterPotentialSampler()
        first = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=0)
        second = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=1)
        assert not np.array_equal(first.values, second.values)

    def test_conditional_resample_keeps_frozen_sites(self):
        sampler = CounterPotentialSampler()
        base = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=0)
        fresh = sampler.conditional_resample(CAUCHY, base, [Segment(2, 4)], replicate=5)
        assert np.array_equal(fresh.values[2:5], base.values[2:5])
        assert not np.array_equal(fresh.values[5:], base.values[5:])

    def test_freezing_everything_is_identity(self):
        sampler = CounterPotentialSampler()
        base = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=0)
        fresh = sampler.conditional_resample(CAUCHY, base, [Segment(0, 9)], replicate=5)
        assert np.array_equal(fresh.values, base.values)

    def test_frozen_segment_outside_window(self):
        sampler = CounterPotentialSampler()
        base = sampler.sample_potential(CAUCHY, Segment(0, 9), replicate=0)
        with pytest.raises(CoverageError):
            sampler.conditional_resample(CAUCHY, base, [Segment(8, 12)], replicate=0)

    def test_cauchy_median(self):
        values = CounterPotentialSampler().sample_potential(CAUCHY, Segment(0, 99_999), replicate=0).values
        assert abs(np.median(values)) < 0.02

    def test_generators_are_reproducible(self):
        assert derive_seed(1, "energy", 2) == derive_seed(1, "energy", 2)
        assert derive_seed(1, "energy", 2) != derive_seed(1, "energy", 3)
        assert make_generator(1, "x").random() == make_generator(1, "x").random()

    def test_derived_seeds_do_not_collide(self):
        replicates = np.arange(250_000)
        keys = np.concatenate([derive_seeds(1, name, replicates) for name in ("wegner", "khat", "tunneling", "pairs")])
        assert np.unique(keys).shape[0] == 1_000_000


class TestOperators:
    def test_single_site(self):
        h = build_h1(Segment(4, 4), PotentialSample(Segment(4, 4), [2.5]), g=1.0)
        assert h.entries.tolist() == [[2.5]]

    def test_free_path_spectrum(self):
        window = Segment(0, 2)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        assert sd.eigenvalues == pytest.approx(np.array([-math.sqrt(2), 0.0, math.sqrt(2)]), abs=1e-12)

    def test_tensor_sum(self):
        sampler = CounterPotentialSampler()
        for replicate in range(5):
            V = sampler.sample_potential(CAUCHY, Segment(0, 14), replicate)
            first, second = Segment(0, 4), Segment(10, 14)
            h2 = build_h2_ni(first, second, V, CAUCHY.g)
            assert tensor_sum_check(build_h1(first, V, CAUCHY.g), build_h1(second, V, CAUCHY.g), h2)

    def test_off_diagonal_square_is_the_product_operator(self):
        V = CounterPotentialSampler().sample_potential(CAUCHY, Segment(0, 15), replicate=2)
        sq = SubSquare.centered((12, 3), 2)
        interacting = build_h2(sq, V, InteractionSpec.constant(2, 3.0), CAUCHY.g, Statistics.FERMIONIC)
        product = build_h2_ni(sq.hseg, sq.vseg, V, CAUCHY.g)
        assert np.array_equal(interacting.basis, product.basis)
        assert np.array_equal(interacting.entries, product.entries)

    def test_fermionic_basis_skips_the_diagonal(self):
        sq = SubSquare(Segment(0, 1), Segment(0, 1))
        h = build_h2(sq, zeros(Segment(0, 1)), InteractionSpec(), 1.0, Statistics.FERMIONIC)
        assert h.basis.tolist() == [[1, 0]]

    def test_bosonic_stencil_doubles_diagonal_edges(self):
        sq = SubSquare(Segment(0, 1), Segment(0, 1))
        h = build_h2(sq, zeros(Segment(0, 1)), InteractionSpec(), 1.0, Statistics.BOSONIC)
        assert h.basis.tolist() == [[0, 0], [1, 0], [1, 1]]
        assert h.entries.tolist() == [[0.0, 2.0, 0.0], [2.0, 0.0, 2.0], [0.0, 2.0, 0.0]]

    def test_interaction_on_the_strip(self):
        sq = SubSquare(Segment(2, 4), Segment(0, 2))
        h = build_h2(sq, zeros(Segment(0, 4)), InteractionSpec.constant(1, 3.0), 1.0, Statistics.FERMIONIC)
        offsets = h.basis[:, 0] - h.basis[:, 1]
        assert np.all(h.diagonal[offsets == 1] == 3.0)
        assert np.all(h.diagonal[offsets > 1] == 0.0)

    def test_potential_must_cover_the_window(self):
        with pytest.raises(CoverageError):
            build_h1(Segment(0, 5), zeros(Segment(0, 3)), g=1.0)


class TestSpectral:
    def test_spectral_distance(self):
        window = Segment(0, 2)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        assert spectral_dist(sd, 1.0) == pytest.approx(math.sqrt(2) - 1)
        assert eigenvalue_count(sd, 0.0, 1.5) == 3

    def test_two_site_green(self):
        window = Segment(1, 2)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        assert green(sd, 1, 2, 0.0) == pytest.approx(1.0)

    def test_green_on_the_spectrum(self):
        window = Segment(0, 2)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        with pytest.raises(ResonantEnergyError):
            green(sd, 0, 2, 0.0)

    def test_green_matches_direct_solve(self):
        sampler = CounterPotentialSampler()
        sq = SubSquare.centered((10, 0), 2)
        for replicate in range(10):
            V = sampler.sample_potential(CAUCHY, covering_segment(sq), replicate)
            h = build_h2(sq, V, InteractionSpec(), CAUCHY.g, Statistics.FERMIONIC)
            sd = eig_sym(h)
            E = 0.37
            if spectral_dist(sd, E) < 1e-3:
                continue
            y, u = (10, 0), (12, 2)
            expected = green_direct(h, y, u, E)
            assert green(sd, y, u, E) == pytest.approx(expected, rel=1e-8, abs=1e-14)

    def test_green_row(self):
        window = Segment(0, 3)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        row = green_row(sd, 1, 0.5)
        assert row == pytest.approx(np.array([green(sd, 1, u, 0.5) for u in range(4)]))

    def test_return_amplitude_at_zero_time(self):
        window = Segment(0, 4)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        assert return_amplitude(sd, 2, 0.0) == pytest.approx(1.0)

    def test_spectral_measure_is_normalized(self):
        window = Segment(0, 4)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        weights = histogram_weights(sd, 2, np.linspace(-3.0, 3.0, 7))
        assert weights.sum() == pytest.approx(1.0)


class TestPathSample:
    def test_zero_time_path_stays_home(self):
        window = Segment(0, 2)
        h = build_h1(window, zeros(window), g=0.0)
        path = simulate_path(h, 1, 0.0, make_generator(3, "path"))
        assert path.K == 0 and path.alive
        assert path_integrand(h, path, 1, 0.0) == 1

    def test_isolated_site_picks_up_a_phase(self):
        window = Segment(5, 5)
        h = build_h1(window, PotentialSample(window, [0.4]), g=1.0)
        path = simulate_path(h, 5, 0.7, make_generator(3, "path"))
        assert path_integrand(h, path, 5, 0.7) == pytest.approx(complex(math.cos(0.28), math.sin(0.28)))


class TestStatistics:
    def test_zero_successes(self):
        low, high = clopper_pearson(0, 100)
        assert low == 0.0
        assert high == pytest.approx(1 - 0.025 ** (1 / 100))

    def test_upper_bound_statuses(self):
        assert ProbEstimate.from_counts(0, 100, 0.5).status is EstimateStatus.OK
        assert ProbEstimate.from_counts(60, 100, 0.1).status is EstimateStatus.BOUND_VIOLATED
        assert ProbEstimate.from_counts(5, 100, 0.06).status is EstimateStatus.BOUND_UNRESOLVABLE

    def test_lower_bound_statuses(self):
        assert ProbEstimate.from_counts(0, 20, 0.9, BoundKind.LOWER).status is EstimateStatus.BOUND_VIOLATED
        assert ProbEstimate.from_counts(100, 100, 0.5, BoundKind.LOWER).status is EstimateStatus.OK

    def test_no_samples(self):
        with pytest.raises(DomainError, match="no samples"):
            ProbEstimate.from_counts(0, 0)

    @pytest.mark.parametrize("p", [0.05, 0.3, 0.5])
    def test_clopper_pearson_coverage(self, p):
        n = 50
        intervals = [clopper_pearson(k, n) for k in range(n + 1)]
        covered = [k for k, (low, high) in enumerate(intervals) if low <= p <= high]
        assert stats.binom.pmf(covered, n, p).sum() >= 0.95

    def test_complex_row_statuses(self):
        estimate = ComplexEstimate(0.9 + 0j, 0.01, 10)
        assert ResultRow.from_complex("khat", 0, estimate, 0.5).status == EstimateStatus.BOUND_VIOLATED.value
        assert ResultRow.from_complex("khat", 0, estimate, 0.92).status == EstimateStatus.BOUND_UNRESOLVABLE.value
        assert ResultRow.from_complex("khat", 0, estimate, 1.0).status == EstimateStatus.OK.value
        assert ResultRow.from_complex("khat", 0, estimate, None).status == EstimateStatus.OK.value

    def test_estimate_row_carries_the_status(self):
        row = ResultRow.from_estimate("wegner", 0, ProbEstimate.from_counts(60, 100, 0.1))
        assert row.status == EstimateStatus.BOUND_VIOLATED.value
        assert row.ci_low > row.bound_value

    def test_complex_mean(self):
        estimate = ComplexEstimate.from_samples(np.array([1 + 1j, 1 - 1j]))
        assert estimate.value == 1 + 0j
        assert estimate.modulus == 1.0


class TestSchedule:
    def test_scales(self):
        result = schedule(256, 4.0, k_max=2)
        assert result.Ls == (256, 4096, 262144)

    def test_first_mass_is_half(self):
        assert schedule(256, 4.0, k_max=1).ms[1] == 2.0

    def test_third_mass(self):
        assert schedule(256, 4.0, k_max=3).ms[3] == pytest.approx(2 * (1 - 8 / 256) * (1 - 8 / 4096))

    def test_long_product(self):
        result = schedule(256, 4.0, k_max=20)
        assert result.truncated
        assert len(result.ms) == 21
        assert 0.483 <= result.mass_product <= 0.485

    def test_monotone(self):
        result = schedule(256, 4.0, k_max=4)
        assert all(a < b for a, b in zip(result.Ls, result.Ls[1:]))
        assert all(a > b for a, b in zip(result.ms, result.ms[1:]))

    def test_small_start_warns(self):
        assert schedule(16, 4.0, k_max=1).warnings

    def test_invalid_start(self):
        with pytest.raises(DomainError):
            schedule(1, 4.0)


class TestMsa:
    def test_mass_degrade(self):
        assert mass_degrade(2.0, 100, 0.5, MassVariant.EXACT) == pytest.approx(1.79394, abs=1e-5)
        assert mass_degrade(2.0, 100, 0.5, MassVariant.SEGMENT) == pytest.approx(1.9)
        assert mass_degrade(2.0, 100, 0.5, MassVariant.PRODUCT) == pytest.approx(1.7)

    def test_counting_bound_readings(self):
        params = MsaParams()
        assert counting_bound(16, 1, params, CountingReading.STATED) == pytest.approx(16**-0.5)
        assert counting_bound(16, 1, params, CountingReading.RESCALED) == pytest.approx(64 ** (-3.5 / 1.5))

    def test_resonance_threshold(self):
        window = Segment(0, 0)
        sd = eig_sym(build_h1(window, PotentialSample(window, [0.2]), g=1.0))
        verdict = classify_resonant(sd, 0.0, 4, 0.5)
        assert verdict.threshold == pytest.approx(math.exp(-2))
        assert not verdict.flag

    def test_free_segment_tunnels(self):
        window = Segment.centered(2, 2)
        sd = eig_sym(build_h1(window, zeros(window), g=0.0))
        assert classify_tunneling(sd, window, 1.0).flag

    def test_classify_segment(self):
        window = Segment.centered(2, 2)
        verdicts = classify(eig_sym(build_h1(window, zeros(window), g=0.0)), window, 0.3, 1.0, 2, 0.5)
        assert not verdicts.resonant.flag
        assert verdicts.resonant.witness == pytest.approx(0.3)
        assert verdicts.tunneling.flag

    def test_classify_square_has_no_tunneling(self):
        sq = SubSquare.centered((10, 0), 1)
        V = CounterPotentialSampler().sample_potential(CAUCHY, covering_segment(sq), 0)
        sd = eig_sym(build_h2(sq, V, InteractionSpec(), CAUCHY.g, Statistics.FERMIONIC))
        assert classify(sd, sq, 0.0, 1.0, 1, 0.5).tunneling is None

    def test_singular_site_scan(self):
        window = Segment(0, 2)
        h = build_h1(window, PotentialSample(window, [0.0, 5.0, 10.0]), g=1.0)
        scan = singular_site_scan(h, 5.2, 1.0, 1, tau=1.0)
        assert scan.sites == [1]
        assert singular_site_scan(h, 5.2, 1.0, 1).threshold == pytest.approx(math.e + 4)
        assert not singular_site_scan(h, 20.0, 1.0, 1, tau=1.0).found

    def test_site_scan_returns_exactly_the_close_sites(self):
        sq = SubSquare.centered((12, 3), 2)
        V = CounterPotentialSampler().sample_potential(CAUCHY, Segment(0, 15), replicate=4)
        h = build_h2(sq, V, InteractionSpec(), CAUCHY.g, Statistics.FERMIONIC)
        scan = singular_site_scan(h, 0.0, 0.5, 2, tau=3.0)
        found = set(scan.sites)
        for site, value in zip(h.basis.tolist(), h.diagonal):
            assert (tuple(site) in found) == (abs(value) < 3.0)

    def test_energy_grid(self):
        assert energy_grid((0.5, 0.5), 4, 0.5).tolist() == [0.5]
        assert energy_grid((0.0, 1.0), 4, 0.5, points=11).shape == (11,)
        with pytest.raises(DomainError):
            energy_grid((1.0, 0.0), 4, 0.5)

    def test_anchor_moves_off_the_diagonal(self):
        basis = np.array([[1, 0], [2, 0], [2, 1]])
        assert anchor_site(basis, (1, 1)) == (1, 0)
        assert anchor_site(basis, (2, 1)) == (2, 1)

    def test_exact_exponential(self):
        basis = np.arange(0, 21)
        fit = fit_decay(np.exp(-0.7 * basis), basis)
        assert fit.m_hat == pytest.approx(0.7, abs=1e-6)
        assert fit.r2 == pytest.approx(1.0)

    def test_free_eigenvector_is_extended(self):
        window = Segment(0, 20)
        fit = estimate_mass(eig_sym(build_h1(window, zeros(window), g=0.0)), E=0.0)
        assert abs(fit.m_hat) < 0.05

    def test_fit_needs_points(self):
        with pytest.raises(DomainError, match="not enough points"):
            fit_decay(np.array([1.0, 0.5]), np.array([0, 1]))


class TestPacking:
    def test_exact_search_beats_greedy(self):
        compatible = np.array(
            [
                [False, False, False],
                [False, False, True],
                [False, True, False],
            ]
        )
        assert _maximum_packing(compatible, lower=1, budget=1000) == (2, True)

    def test_budget_marks_inexact(self):
        compatible = ~np.eye(12, dtype=bool)
        best, exact = _maximum_packing(compatible, lower=0, budget=3)
        assert not exact
        assert best <= 12

    def test_grouped_candidates_are_solved_exactly(self):
        groups = np.arange(600) // 3
        compatible = groups[:, None] != groups[None, :]
        assert _maximum_packing(compatible, lower=0, budget=NODE_BUDGET) == (200, True)


class TestConfig:
    def test_runtime_from_environ(self):
        runtime = RuntimeConfig.from_environ({"MSA_LAB_WORKERS": "3", "MSA_LAB_LOG_LEVEL": "DEBUG"})
        assert runtime.workers == 3
        assert runtime.log_level == "DEBUG"

    def test_runtime_rejects_bad_workers(self):
        with pytest.raises(ConfigurationError):
            RuntimeConfig.from_environ({"MSA_LAB_WORKERS": "0"})

    def test_overrides(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("experiment: wegner\nsampling:\n  n: 10\n", encoding="utf-8")
        config = load_experiment_config(path, {"seed": 5, "samples": 20, "format": "jsonl"})
        assert config.seed == 5
        assert config.sampling.n == 20
        assert config.output.format == "jsonl"

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("experiment: wegner\nsampling:\n  samples: 10\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_experiment_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_experiment_config(tmp_path / "missing.yaml")


class TestResultWriter:
    def test_csv_floats_round_trip_exactly(self, tmp_path):
        path = tmp_path / "out" / "results.csv"
        ResultEmitter(columns=("experiment", "p_hat", "bound_value")).emit(
            [{"experiment": "wegner", "p_hat": 0.1 + 0.2, "bound_value": None}], "csv", path
        )
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "experiment,p_hat,bound_value"
        assert float(lines[1].split(",")[1]) == 0.1 + 0.2
        assert lines[1].endswith(",")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(OutputError):
            emit_results([], "xml", tmp_path / "results.xml", writers={})

    def test_records_survive_json_lines(self, tmp_path):
        record = ResultRecord(
            experiment="classify",
            seed=3,
            p_hat=0.25,
            parameters={"volume": "[0,4]"},
            witnesses={"green_max": math.inf, "sites": (1, 2), "nested": {"gap": float("nan"), "flag": True}},
        )
        assert record.witnesses["green_max"] is None
        path = tmp_path / "records.jsonl"
        ResultEmitter(columns=("experiment",)).emit([record.model_dump()], "jsonl", path)
        line = path.read_text(encoding="utf-8").splitlines()[0]
        assert "Infinity" not in line and "NaN" not in line
        assert ResultRecord(**json.loads(line)) == record
