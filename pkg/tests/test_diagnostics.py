import math

import numpy as np
import pytest

from conftest import enumerated_pij_matrix
from surveyknn.designs import DesignSpec, InclusionProbs, Sample, draw, inclusion_probs
from surveyknn.diagnostics import (
    c4_ratio_scan,
    c7_min_inclusion,
    c8_dependence_measure,
    c9_rij_exhaustive,
    dependence_measure_from_probs,
)
from surveyknn.errors import DiagnosticUnavailableError
from surveyknn.population import Population, SuperpopSpec, generate_embedded_populations
from surveyknn.studies import quartile_strata


def uniform_population(n, seed=0, with_z=False):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    return Population(x=x, y=rng.random(n), z=x if with_z else None)


class TestC4:
    def test_census_ratio_is_one(self):
        pop = uniform_population(40, seed=2)
        sample = Sample(members=np.arange(40), weights=np.ones(40), n_pop=40)
        ratios, max_ratio = c4_ratio_scan(pop, sample, 5, np.linspace(0, 1, 11))
        np.testing.assert_allclose(ratios, 1.0)
        assert max_ratio == pytest.approx(1.0)

    def test_ratio_counts_population_units_in_sample_radius_ball(self):
        # Population on a line, sample of the two endpoints: the radius at
        # x = 0 with kn = 2 reaches 1.0, covering all three population units.
        pop = Population(x=[0.0, 0.5, 1.0], y=np.zeros(3))
        sample = Sample(members=np.array([0, 2]), weights=np.ones(2), n_pop=3)
        ratios, _ = c4_ratio_scan(pop, sample, 2, [0.0])
        assert ratios[0] == pytest.approx((2 / 3) * 3 / 2)

    def test_kn_validated(self):
        pop = uniform_population(10)
        sample = Sample(members=np.arange(4), weights=np.ones(4), n_pop=10)
        with pytest.raises(ValueError):
            c4_ratio_scan(pop, sample, 5, [0.5])


class TestC7:
    def test_srswor(self):
        probs = inclusion_probs(DesignSpec.srswor(4), uniform_population(10))
        assert c7_min_inclusion(probs) == pytest.approx(0.4)

    def test_pps_sizes(self):
        pop = Population(x=np.arange(4) / 4, y=np.zeros(4), z=np.array([1.0, 2.0, 3.0, 4.0]))
        probs = inclusion_probs(DesignSpec.pps(2), pop)
        assert c7_min_inclusion(probs) == pytest.approx(0.2)

    def test_quartile_strata_floor(self):
        (pop,) = generate_embedded_populations(SuperpopSpec(), [100], seed=9)
        design = quartile_strata(pop, 40)
        probs = inclusion_probs(design, pop)
        assert c7_min_inclusion(probs) == pytest.approx(0.16, abs=0.02)


class TestC8:
    def test_poisson_is_null(self):
        assert c8_dependence_measure(DesignSpec.poisson(3), uniform_population(10)) == 0.0

    def test_srswor_closed_form_is_exact(self):
        N, n = 10, 4
        measure = c8_dependence_measure(DesignSpec.srswor(n), uniform_population(N))
        assert measure == (N - n) / (n * (N - 1))

    def test_cluster_closed_form(self):
        labels = np.repeat(np.arange(5), 2)
        measure = c8_dependence_measure(DesignSpec.cluster(labels, 2), uniform_population(10))
        assert measure == pytest.approx(1.5)

    def test_systematic_closed_form(self):
        measure = c8_dependence_measure(DesignSpec.systematic(2), uniform_population(6))
        assert measure == pytest.approx(2.0)  # max(N/n - 1, 1)

    def test_stratified_closed_form(self):
        design = DesignSpec.stratified([(tuple(range(6)), 2), (tuple(range(6, 12)), 3)])
        measure = c8_dependence_measure(design, uniform_population(12))
        expected = max((6 - 2) / (2 * 5), (6 - 3) / (3 * 5))
        assert measure == pytest.approx(expected)

    def test_census_designs_have_zero_measure(self):
        pop = uniform_population(8)
        assert c8_dependence_measure(DesignSpec.srswor(8), pop) == 0.0
        assert c8_dependence_measure(DesignSpec.systematic(8), pop) == 0.0
        labels = np.repeat(np.arange(4), 2)
        assert c8_dependence_measure(DesignSpec.cluster(labels, 4), pop) == 0.0

    @pytest.mark.parametrize(
        "design, size",
        [
            (DesignSpec.srswor(4), 10),
            (DesignSpec.stratified([(tuple(range(5)), 2), (tuple(range(5, 10)), 3)]), 10),
            (DesignSpec.systematic(5), 10),
            (DesignSpec.cluster(tuple(np.repeat(np.arange(5), 2)), 2), 10),
            (DesignSpec.srswor(5), 12),
        ],
    )
    def test_closed_forms_match_enumeration(self, design, size):
        pop = uniform_population(size)
        oracle = enumerated_pij_matrix(design, pop)
        probs = inclusion_probs(design, pop)
        ratio = np.abs(oracle / np.outer(probs.pi, probs.pi) - 1.0)
        np.fill_diagonal(ratio, 0.0)
        assert c8_dependence_measure(design, pop) == pytest.approx(ratio.max(), abs=1e-12)

    def test_matrix_variant_matches_closed_form(self):
        pop = uniform_population(9)
        design = DesignSpec.srswor(3)
        probs = inclusion_probs(design, pop)
        assert dependence_measure_from_probs(probs) == pytest.approx(
            c8_dependence_measure(design, pop), abs=1e-12
        )

    def test_srswor_scaled_measure_stabilizes(self):
        # n * measure equals (N - n)/(N - 1), which tends to 1 - f.
        values = []
        for N in (10, 100, 1000, 10000):
            n = int(0.4 * N)
            measure = c8_dependence_measure(DesignSpec.srswor(n), uniform_population(N))
            values.append(n * measure)
        tail = values[1:]
        assert max(tail) / min(tail) < 1.10

    def test_pps_unsupported(self):
        pop = uniform_population(10, with_z=True)
        with pytest.raises(DiagnosticUnavailableError):
            c8_dependence_measure(DesignSpec.pps(4), pop)


class TestC9:
    def test_total_expectation_identity(self):
        pop = uniform_population(8, seed=4)
        res = c9_rij_exhaustive(pop, DesignSpec.srswor(3), 2, np.linspace(0, 1, 51))
        assert res.total_expectation_error < 1e-12
        assert res.sample_count == math.comb(8, 3)

    def test_degenerate_conditioning_when_k_equals_n(self):
        # With k = n every grid point names the whole sample, so each group
        # is a single sample and conditional expectations are indicators.
        pop = uniform_population(7, seed=5)
        res = c9_rij_exhaustive(pop, DesignSpec.srswor(3), 3, np.linspace(0, 1, 51))
        assert res.group_count == res.sample_count
        pij = inclusion_probs(DesignSpec.srswor(3), pop).pij_matrix()
        # E_p |I_i I_j - pi_ij| = 2 pi_ij (1 - pi_ij) for indicator variables.
        np.testing.assert_allclose(res.expected_abs_rij, 2 * pij * (1 - pij), atol=1e-12)

    def test_pinned_value_from_own_enumeration(self):
        # Frozen from this enumeration: with every group a singleton the
        # all-pairs mean is analytic: (N*2f(1-f) + N(N-1)*2q(1-q))/N^2
        # with f = 0.4 and q = n(n-1)/(N(N-1)) = 2/15.
        (pop,) = generate_embedded_populations(SuperpopSpec(), [10], seed=10)
        res = c9_rij_exhaustive(pop, DesignSpec.srswor(4), 2, np.linspace(0, 1, 51))
        q = 2 / 15
        analytic = (10 * 2 * 0.4 * 0.6 + 90 * 2 * q * (1 - q)) / 100
        assert res.mean_abs_all == pytest.approx(analytic, abs=1e-12)
        assert res.mean_abs_all == pytest.approx(0.256, abs=1e-12)

    def test_works_for_stratified_designs(self):
        pop = uniform_population(8, seed=6)
        design = DesignSpec.stratified([(tuple(range(4)), 2), (tuple(range(4, 8)), 1)])
        res = c9_rij_exhaustive(pop, design, 2, np.linspace(0, 1, 26))
        assert res.total_expectation_error < 1e-12
        assert res.sample_count == math.comb(4, 2) * math.comb(4, 1)

    def test_fast_signature_matches_reference(self):
        # The enumeration fast path must agree with partition_signature.
        from scipy.spatial.distance import cdist

        from surveyknn.diagnostics import _signature_ids
        from surveyknn.neighbors import partition_signature

        rng = np.random.default_rng(12)
        for dim in (1, 2):
            pop = Population(x=rng.random((15, dim)), y=np.zeros(15))
            grid = rng.random((9, dim))
            all_d = cdist(grid, pop.x)
            for _ in range(30):
                members = np.sort(rng.choice(15, 6, replace=False))
                kn = int(rng.integers(1, 6))
                fast = _signature_ids(all_d, members, kn)
                reference = partition_signature(pop.x[members], kn, grid, ids=members)
                assert tuple(tuple(int(i) for i in row) for row in fast) == reference
