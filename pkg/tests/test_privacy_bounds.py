"""
Tests for divergences, Le Cam and Fano bounds and the MAP error.
"""

import math
import unittest

import numpy as np
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy import integrate, stats

from src.dlc_privacy.model import (
    ConfigurationError,
    LogNormalComponent,
    ObservationFamily,
    RngStreamPlan,
    TypePrior,
    UnsupportedCaseError,
)
from src.dlc_privacy.transformers.privacy_bounds import (
    fano_bound,
    kl_iid,
    kl_lognormal,
    kl_lognormal_shared_scale,
    kl_matrix,
    lecam_bound,
    map_classify,
    map_error_exact_shared_scale,
    map_error_monte_carlo,
    tv_exact_shared_scale,
    tv_matrix,
    tv_pinsker,
)

RECS_PRIOR = TypePrior(labels=("L", "M", "H"), pi=(23.7, 48.7, 41.2))
HOURLY = ObservationFamily.point_mass((0.82, 0.99, 1.26), 0.49)


def uniform_prior(r: int) -> TypePrior:
    return TypePrior(labels=tuple(f"T{i}" for i in range(r)), pi=(1.0,) * r)


locations_strategy = st.lists(st.integers(min_value=-200, max_value=200), min_size=3,
                              max_size=3).map(lambda values: [v / 100 for v in values])


class TestDivergences(unittest.TestCase):
    """KL and TV between log-normal laws."""

    def test_income_pairs(self):
        cases = [((0.82, 0.99), 0.060183), ((0.99, 1.26), 0.151812), ((0.82, 1.26), 0.403165)]
        for (mu_i, mu_j), expected in cases:
            with self.subTest(pair=(mu_i, mu_j)):
                self.assertAlmostEqual(kl_lognormal_shared_scale(mu_i, mu_j, 0.49), expected,
                                       places=6)

    def test_general_form_reduces_to_shared_scale(self):
        self.assertAlmostEqual(kl_lognormal(0.82, 0.49, 0.99, 0.49),
                               kl_lognormal_shared_scale(0.82, 0.99, 0.49), places=14)
        self.assertEqual(kl_lognormal(1.0, 0.3, 1.0, 0.3), 0.0)

    def test_general_form_is_asymmetric(self):
        forward = kl_lognormal(0.0, 0.5, 0.2, 1.0)
        backward = kl_lognormal(0.2, 1.0, 0.0, 0.5)
        self.assertGreater(forward, 0)
        self.assertNotAlmostEqual(forward, backward)

    def test_kl_matches_linear_domain_integral(self):
        p = stats.lognorm(s=0.4, scale=math.exp(0.9))
        q = stats.lognorm(s=0.6, scale=math.exp(1.2))

        def integrand(y):
            return p.pdf(y) * (p.logpdf(y) - q.logpdf(y))

        value, _ = integrate.quad(integrand, p.ppf(1e-12), p.ppf(1 - 1e-12), limit=200)
        self.assertAlmostEqual(kl_lognormal(0.9, 0.4, 1.2, 0.6), value, places=6)

    def test_kl_iid_scales_linearly(self):
        self.assertAlmostEqual(kl_iid(0.06, 60), 3.6)
        np.testing.assert_allclose(kl_iid(np.array([0.1, 0.2]), 3), [0.3, 0.6])
        with self.assertRaises(ConfigurationError):
            kl_iid(0.1, -1)

    def test_pinsker(self):
        self.assertAlmostEqual(tv_pinsker(0.060183), 0.1735, places=4)
        self.assertEqual(tv_pinsker(10.0), 1.0)
        self.assertEqual(tv_pinsker(0.0), 0.0)

    def test_exact_tv(self):
        self.assertAlmostEqual(tv_exact_shared_scale(0.82, 0.99, 0.49, 1), 0.1377, places=4)
        self.assertEqual(tv_exact_shared_scale(0.82, 0.99, 0.49, 0), 0.0)
        self.assertAlmostEqual(tv_exact_shared_scale(0.0, 10.0, 0.1, 5), 1.0, places=12)

    def test_exact_tv_matches_numerical_integral(self):
        mu_i, mu_j, sigma, T = 0.82, 1.26, 0.49, 4
        p = stats.norm(T * mu_i, math.sqrt(T) * sigma)
        q = stats.norm(T * mu_j, math.sqrt(T) * sigma)
        value, _ = integrate.quad(lambda s: 0.5 * abs(p.pdf(s) - q.pdf(s)), -10, 20,
                                  points=[T * (mu_i + mu_j) / 2], limit=200)
        self.assertAlmostEqual(tv_exact_shared_scale(mu_i, mu_j, sigma, T), value, places=8)

    @settings(max_examples=200, deadline=None)
    @given(dmu=st.floats(min_value=0.0, max_value=3.0),
           sigma=st.floats(min_value=0.1, max_value=2.0),
           T=st.integers(min_value=1, max_value=60))
    def test_pinsker_dominates_exact_tv(self, dmu, sigma, T):
        exact = tv_exact_shared_scale(0.0, dmu, sigma, T)
        bound = tv_pinsker(kl_iid(kl_lognormal_shared_scale(0.0, dmu, sigma), T))
        self.assertLessEqual(exact, bound + 1e-12)

    def test_matrices(self):
        kl = kl_matrix(HOURLY)
        np.testing.assert_allclose(np.diag(kl), 0.0)
        np.testing.assert_allclose(kl, kl.T)
        np.testing.assert_allclose(kl_matrix(HOURLY, T=3), 3 * kl)
        exact = tv_matrix(HOURLY, method="exact")
        self.assertTrue(np.all(exact <= tv_matrix(HOURLY, method="pinsker") + 1e-12))

    def test_unsupported_families(self):
        mixture = ObservationFamily((
            (LogNormalComponent(0.5, 0.0, 0.5), LogNormalComponent(0.5, 1.0, 0.5)),
            (LogNormalComponent(1.0, 0.5, 0.5),),
        ))
        with self.assertRaises(UnsupportedCaseError):
            kl_matrix(mixture)
        unshared = ObservationFamily((
            (LogNormalComponent(1.0, 0.0, 0.5),),
            (LogNormalComponent(1.0, 0.5, 0.7),),
        ))
        with self.assertRaises(UnsupportedCaseError):
            tv_matrix(unshared, method="exact")
        self.assertEqual(tv_matrix(unshared, method="pinsker").shape, (2, 2))
        with self.assertRaises(ConfigurationError):
            tv_matrix(HOURLY, method="hellinger")


class TestLeCamAndFano(unittest.TestCase):
    """Lower bounds on the MAP error."""

    def test_lecam_pinsker_hourly(self):
        tv = tv_matrix(HOURLY, method="pinsker")
        result = lecam_bound(RECS_PRIOR, tv)
        self.assertAlmostEqual(result.alpha, 0.262756, places=6)
        self.assertEqual(result.diagnostics["pair"], ["M", "H"])

    def test_lecam_without_information(self):
        result = lecam_bound(RECS_PRIOR, np.zeros((3, 3)))
        self.assertAlmostEqual(result.alpha, 0.362676, places=6)

    def test_lecam_rejects_bad_matrix(self):
        bad = [np.zeros((2, 2)), np.full((3, 3), 1.5), np.triu(np.full((3, 3), 0.5), 1)]
        for tv in bad:
            with self.subTest(tv=tv.tolist()):
                with self.assertRaises(ConfigurationError):
                    lecam_bound(RECS_PRIOR, tv)

    def test_fano_hourly(self):
        result = fano_bound(kl_matrix(HOURLY), 3, RECS_PRIOR)
        self.assertAlmostEqual(result.alpha, 0.387743, places=6)
        self.assertFalse(result.diagnostics["clamped"])
        self.assertFalse(result.diagnostics["fano_prior_uniform"])

    def test_fano_without_information(self):
        result = fano_bound(np.zeros((3, 3)), 3)
        self.assertAlmostEqual(result.alpha, math.log(1.5) / math.log(2), places=12)
        self.assertAlmostEqual(result.alpha, 0.5850, places=4)

    def test_fano_clamps(self):
        kl = np.full((3, 3), 50.0)
        np.fill_diagonal(kl, 0.0)
        result = fano_bound(kl, 3)
        self.assertEqual(result.alpha, 0.0)
        self.assertTrue(result.diagnostics["clamped"])
        self.assertLess(result.diagnostics["unclamped"], 0)

    def test_fano_two_types_unsupported(self):
        with self.assertRaises(UnsupportedCaseError):
            fano_bound(np.zeros((2, 2)), 2)

    def test_fano_rejects_bad_matrix(self):
        with self.assertRaises(ConfigurationError):
            fano_bound(np.ones((3, 3)), 3)

    @settings(max_examples=100, deadline=None)
    @given(locations=locations_strategy,
           weights=st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=3, max_size=3),
           sigma=st.floats(min_value=0.1, max_value=2.0),
           T=st.integers(min_value=1, max_value=60))
    def test_bounds_stay_below_map_error(self, locations, weights, sigma, T):
        prior = TypePrior(labels=("A", "B", "C"), pi=tuple(weights))
        family = ObservationFamily.point_mass(locations, sigma)
        map_error = map_error_exact_shared_scale(prior, locations, sigma, T).alpha
        lecam_tv = lecam_bound(prior, tv_matrix(family, T, "exact"), "lecam-exact-tv").alpha
        lecam_pinsker = lecam_bound(prior, tv_matrix(family, T, "pinsker")).alpha
        self.assertLessEqual(lecam_pinsker, lecam_tv + 1e-12)
        self.assertLessEqual(lecam_tv, map_error + 1e-9)

    @settings(max_examples=100, deadline=None)
    @given(locations=locations_strategy,
           sigma=st.floats(min_value=0.1, max_value=2.0),
           T=st.integers(min_value=1, max_value=60))
    def test_fano_below_map_error_for_uniform_prior(self, locations, sigma, T):
        prior = uniform_prior(3)
        family = ObservationFamily.point_mass(locations, sigma)
        fano = fano_bound(kl_matrix(family, T), 3, prior)
        self.assertTrue(fano.diagnostics["fano_prior_uniform"])
        map_error = map_error_exact_shared_scale(prior, locations, sigma, T).alpha
        self.assertLessEqual(fano.alpha, map_error + 1e-9)


class TestMapErrorExact(unittest.TestCase):
    """Upper-envelope evaluation of the shared-scale MAP error."""

    def test_hourly_income(self):
        result = map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99, 1.26), 0.49, 1)
        self.assertAlmostEqual(result.alpha, 0.514, delta=0.002)
        self.assertEqual(list(result.diagnostics["regions"]), ["L", "M", "H"])
        self.assertEqual(result.diagnostics["never_chosen"], [])

    def test_no_samples_uses_prior_only(self):
        result = map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99, 1.26), 0.49, 0)
        self.assertAlmostEqual(result.alpha, 1 - RECS_PRIOR.pi[1], places=12)
        self.assertAlmostEqual(result.alpha, 0.5713, places=4)

    def test_two_equiprobable_types(self):
        for T in (1, 4, 25):
            with self.subTest(T=T):
                tv = tv_exact_shared_scale(0.0, 0.3, 0.5, T)
                result = map_error_exact_shared_scale(uniform_prior(2), (0.0, 0.3), 0.5, T)
                self.assertAlmostEqual(result.alpha, 0.5 * (1 - tv), places=12)

    def test_dominated_middle_type(self):
        prior = TypePrior(labels=("A", "B", "C"), pi=(0.45, 0.1, 0.45))
        result = map_error_exact_shared_scale(prior, (0.0, 0.5, 1.0), 1.0, 1)
        self.assertEqual(result.diagnostics["never_chosen"], ["B"])
        self.assertEqual(result.diagnostics["per_type_error"][1], 1.0)
        expected = 2 * 0.45 * stats.norm.sf(0.5) + 0.1
        self.assertAlmostEqual(result.alpha, expected, places=10)

    def test_duplicate_locations(self):
        prior = TypePrior(labels=("A", "B", "C"), pi=(0.3, 0.3, 0.4))
        result = map_error_exact_shared_scale(prior, (0.0, 0.0, 5.0), 0.1, 1)
        self.assertEqual(result.diagnostics["never_chosen"], ["B"])
        self.assertAlmostEqual(result.alpha, 0.3, places=6)

    def test_zero_prior_type_never_chosen(self):
        prior = TypePrior(labels=("A", "B"), pi=(1.0, 0.0))
        result = map_error_exact_shared_scale(prior, (0.0, 1.0), 0.5, 3)
        self.assertEqual(result.alpha, 0.0)
        self.assertEqual(result.diagnostics["never_chosen"], ["B"])

    def test_more_samples_never_hurt(self):
        values = [map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99, 1.26), 0.49, T).alpha
                  for T in (0, 1, 2, 5, 10, 30, 60)]
        self.assertTrue(all(b <= a + 1e-12 for a, b in zip(values, values[1:])))

    def test_invalid_inputs(self):
        with self.assertRaises(ConfigurationError):
            map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99), 0.49, 1)
        with self.assertRaises(ConfigurationError):
            map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99, 1.26), 0.0, 1)
        with self.assertRaises(ConfigurationError):
            map_error_exact_shared_scale(RECS_PRIOR, (0.82, 0.99, 1.26), 0.49, -1)


class TestMapClassify(unittest.TestCase):
    """Single-consumer MAP decisions."""

    def test_no_readings_picks_most_likely_type(self):
        self.assertEqual(map_classify(RECS_PRIOR, HOURLY, []), "M")

    def test_regions(self):
        for log_y, expected in ((-1.0, "L"), (0.5, "M"), (2.0, "H")):
            with self.subTest(log_y=log_y):
                self.assertEqual(map_classify(RECS_PRIOR, HOURLY, [math.exp(log_y)]), expected)

    def test_depends_only_on_log_sum_for_shared_scale(self):
        family = ObservationFamily.point_mass((0.82, 0.99, 1.26), 0.49)
        for total in (0.5, 1.9, 2.3, 2.8):
            pairs = [(total / 2, total / 2), (total - 1.0, 1.0), (0.0, total)]
            labels = {map_classify(RECS_PRIOR, family, np.exp(pair)) for pair in pairs}
            with self.subTest(total=total):
                self.assertEqual(len(labels), 1)

    def test_agrees_with_linear_domain_densities(self):
        family = ObservationFamily((
            (LogNormalComponent(1.0, 0.8, 0.4),),
            (LogNormalComponent(1.0, 1.0, 0.6),),
            (LogNormalComponent(1.0, 1.3, 0.5),),
        ))
        rng = np.random.default_rng(12)
        for _ in range(50):
            y = rng.lognormal(1.0, 0.5, size=3)
            posterior = [
                pi * np.prod(stats.lognorm.pdf(y, s=mixture[0].sigma,
                                               scale=math.exp(mixture[0].mu)))
                for pi, mixture in zip(RECS_PRIOR.pi, family.components)
            ]
            expected = RECS_PRIOR.labels[int(np.argmax(posterior))]
            self.assertEqual(map_classify(RECS_PRIOR, family, y), expected)

    def test_rejects_nonpositive_readings(self):
        for y in ([0.0], [-1.0, 2.0], [float("nan")]):
            with self.subTest(y=y):
                with self.assertRaises(ConfigurationError):
                    map_classify(RECS_PRIOR, HOURLY, y)


class TestMapErrorMonteCarlo(unittest.TestCase):
    """Monte Carlo MAP error from sufficient statistics."""

    def test_agrees_with_exact(self):
        cases = [(HOURLY, 1), (ObservationFamily.point_mass((0.82, 0.99, 1.26), 0.49), 10)]
        for family, T in cases:
            with self.subTest(T=T):
                exact = map_error_exact_shared_scale(
                    RECS_PRIOR, family.locations, family.sigma, T).alpha
                mc = map_error_monte_carlo(RECS_PRIOR, family, T, 200_000, RngStreamPlan(1),
                                           stream_key=(T,))
                self.assertLess(abs(mc.alpha - exact), 4 * mc.stderr)
                self.assertAlmostEqual(
                    mc.stderr, math.sqrt(mc.alpha * (1 - mc.alpha) / 200_000), places=12)

    def test_agrees_with_exact_on_random_scenarios(self):
        rng = np.random.default_rng(2024)
        n_samples = 100_000
        for index in range(8):
            r = int(rng.integers(2, 5))
            sigma = float(rng.uniform(0.2, 1.0))
            gaps = rng.uniform(0.1, 3.0, size=r - 1) * sigma
            locations = tuple(float(v) for v in np.concatenate([[0.0], np.cumsum(gaps)]))
            prior = TypePrior(labels=tuple(f"T{i}" for i in range(r)),
                              pi=tuple(float(p) for p in rng.uniform(0.05, 1.0, size=r)))
            T = int(rng.integers(1, 61))
            family = ObservationFamily.point_mass(locations, sigma)
            exact = map_error_exact_shared_scale(prior, locations, sigma, T).alpha
            mc = map_error_monte_carlo(prior, family, T, n_samples, RngStreamPlan(17),
                                       stream_key=(index,))
            # an all-correct or all-wrong run has no spread to scale by
            tolerance = 3 * mc.stderr if mc.stderr > 0 else 3 / n_samples
            with self.subTest(r=r, sigma=sigma, T=T):
                self.assertLessEqual(abs(mc.alpha - exact), tolerance)

    def test_reproducible_with_plan(self):
        a = map_error_monte_carlo(RECS_PRIOR, HOURLY, 5, 30_000, RngStreamPlan(3),
                                  chunk_size=10_000, stream_key=(5,))
        b = map_error_monte_carlo(RECS_PRIOR, HOURLY, 5, 30_000, RngStreamPlan(3),
                                  chunk_size=10_000, stream_key=(5,))
        self.assertEqual(a.alpha, b.alpha)
        self.assertEqual(a.diagnostics["chunks"], 3)

    def test_duplicated_component_matches_point_mass(self):
        doubled = ObservationFamily(tuple(
            (c, c) for mixture in HOURLY.components for c in mixture))
        a = map_error_monte_carlo(RECS_PRIOR, HOURLY, 4, 50_000, np.random.default_rng(8))
        b = map_error_monte_carlo(RECS_PRIOR, doubled, 4, 50_000, np.random.default_rng(8))
        self.assertAlmostEqual(a.alpha, b.alpha, delta=1e-4)

    def test_mixture_family(self):
        family = ObservationFamily((
            (LogNormalComponent(0.7, 0.8, 0.4), LogNormalComponent(0.3, 1.6, 0.4)),
            (LogNormalComponent(1.0, 1.0, 0.5),),
            (LogNormalComponent(0.5, 1.2, 0.3), LogNormalComponent(0.5, 1.5, 0.6)),
        ))
        few = map_error_monte_carlo(RECS_PRIOR, family, 1, 50_000, RngStreamPlan(2))
        many = map_error_monte_carlo(RECS_PRIOR, family, 30, 50_000, RngStreamPlan(2))
        self.assertGreater(few.stderr, 0)
        self.assertLess(many.alpha, few.alpha)
        self.assertLessEqual(few.alpha, 1 - max(RECS_PRIOR.pi) + 4 * few.stderr)

    def test_no_samples(self):
        result = map_error_monte_carlo(RECS_PRIOR, HOURLY, 0, 10, RngStreamPlan(1))
        self.assertAlmostEqual(result.alpha, 1 - RECS_PRIOR.pi[1], places=12)
        self.assertEqual(result.stderr, 0.0)

    def test_invalid_inputs(self):
        with self.assertRaises(ConfigurationError):
            map_error_monte_carlo(RECS_PRIOR, HOURLY, 1, 0, RngStreamPlan(1))
        two = ObservationFamily.point_mass((0.0, 1.0), 0.5)
        with self.assertRaises(ConfigurationError):
            map_error_monte_carlo(RECS_PRIOR, two, 1, 10, RngStreamPlan(1))


if __name__ == '__main__':
    unittest.main()
