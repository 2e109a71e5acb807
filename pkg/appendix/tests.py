from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from pricing.exceptions import DomainError, InvariantViolation
from pricing.numerics import factor_grid, norm_inv
from pricing.recovery import CalibratedRecovery, rm_regularized

from .lab import (
    K_R_AT_MINUS_INFINITY,
    SimplifiedVodParams,
    k_r,
    lemma1_residual,
    lemma2_residual,
    lemma3_extremal_variance,
    lemma3_property_check,
    proposition1_scan,
    random_bounded_distribution,
    simplified_vod,
    variance_monotonicity,
    variance_of_x,
    variance_of_x_alpha_limit,
    verify_appendix,
    vod_alpha_limit,
)

GRID = factor_grid(96)


class SimplifiedVodTestCase(SimpleTestCase):
    """Test cases for the quadratic-payoff value-on-default"""

    def test_deterministic_recovery(self):
        params = SimplifiedVodParams(p=0.5, market_recovery=0.4, r_m=0.4, alpha=1.0, rho=0.3)
        self.assertAlmostEqual(simplified_vod(params, GRID), 0.18, delta=1e-10)

    def test_no_default(self):
        params = SimplifiedVodParams(p=0.0, market_recovery=0.4, r_m=1.0, alpha=1.0, rho=0.3)
        self.assertAlmostEqual(simplified_vod(params, GRID), 0.36, places=15)

    def test_zero_alpha_collapses_recovery(self):
        for p in (0.1, 0.5, 0.9):
            with self.subTest(p=p):
                params = SimplifiedVodParams(p=p, market_recovery=0.4, r_m=1.0, alpha=0.0, rho=0.3)
                self.assertAlmostEqual(simplified_vod(params, GRID), 0.36 * (1.0 - p), delta=1e-8)

    def test_alpha_limit(self):
        self.assertAlmostEqual(vod_alpha_limit(0.7, 0.4, 1.0), -0.06, places=12)
        self.assertAlmostEqual(vod_alpha_limit(1.0, 0.4, 0.4), 0.0, places=12)

    def test_regularized_cap_zeroes_alpha_limit(self):
        for recovery in (0.1, 0.25, 0.4, 0.6, 0.9):
            for p in np.linspace(1.0 - recovery, 1.0, 11):
                with self.subTest(recovery=recovery, p=p):
                    r_m = rm_regularized(float(p), recovery)
                    self.assertAlmostEqual(vod_alpha_limit(float(p), recovery, r_m), 0.0, delta=1e-12)

    def test_invalid_params(self):
        cases = [
            {'p': 1.5, 'market_recovery': 0.4, 'r_m': 1.0, 'alpha': 1.0, 'rho': 0.3},
            {'p': 0.5, 'market_recovery': 0.4, 'r_m': 0.3, 'alpha': 1.0, 'rho': 0.3},
            {'p': 0.5, 'market_recovery': 0.4, 'r_m': 1.0, 'alpha': -1.0, 'rho': 0.3},
            {'p': 0.5, 'market_recovery': 0.4, 'r_m': 1.0, 'alpha': 1.0, 'rho': 1.0},
        ]
        for kwargs in cases:
            with self.subTest(**kwargs):
                with self.assertRaises(DomainError):
                    SimplifiedVodParams(**kwargs)


class LemmaTestCase(SimpleTestCase):
    """Test cases for the supporting lemmas"""

    def test_k_r(self):
        self.assertEqual(k_r(0.5, 0.4, 0.4), K_R_AT_MINUS_INFINITY)
        self.assertAlmostEqual(k_r(0.5, 0.4, 1.0), norm_inv(0.3), places=12)
        self.assertAlmostEqual(k_r(0.5, 0.4, 1.0), -0.5244005, places=6)

    def test_lemma2_interval_mass(self):
        for p in (0.05, 0.5, 0.95):
            for r_m in (0.4, 0.7, 1.0):
                with self.subTest(p=p, r_m=r_m):
                    self.assertLess(lemma2_residual(p, 0.4, r_m), 1e-12)

    def test_variance_of_x(self):
        deterministic = SimplifiedVodParams(p=0.5, market_recovery=0.4, r_m=0.4, alpha=1.0, rho=0.3)
        self.assertAlmostEqual(variance_of_x(deterministic, GRID), 0.04, delta=1e-10)
        self.assertAlmostEqual(variance_of_x_alpha_limit(0.5, 0.4, 1.0), 0.2 * 0.8, places=15)

    def test_variance_below_alpha_limit(self):
        for alpha in (0.5, 2.0, 5.0):
            with self.subTest(alpha=alpha):
                params = SimplifiedVodParams(p=0.3, market_recovery=0.4, r_m=1.0, alpha=alpha, rho=0.3)
                self.assertLessEqual(variance_of_x(params, GRID), variance_of_x_alpha_limit(0.3, 0.4, 1.0) + 1e-12)

    @patch('appendix.lab.calibrate_beta')
    def test_variance_checks_mean(self, calibrate):
        calibrate.return_value = CalibratedRecovery(beta=3.0, r_m_effective=1.0, p=0.3, market_recovery=0.4)
        params = SimplifiedVodParams(p=0.3, market_recovery=0.4, r_m=1.0, alpha=1.0, rho=0.3)
        with self.assertRaises(InvariantViolation):
            variance_of_x(params, GRID)

    def test_lemma1_identity(self):
        params = SimplifiedVodParams(p=0.3, market_recovery=0.4, r_m=1.0, alpha=0.0, rho=0.3)
        self.assertEqual(lemma1_residual(params, 1.0, 1.0, GRID), 0.0)
        self.assertLess(lemma1_residual(params, 0.5, 2.0, GRID), 1e-8)
        deterministic = SimplifiedVodParams(p=0.3, market_recovery=0.4, r_m=0.4, alpha=0.0, rho=0.3)
        self.assertLess(lemma1_residual(deterministic, 0.5, 7.0, GRID), 1e-12)

    def test_lemma3_extremal_variance(self):
        self.assertEqual(lemma3_extremal_variance(0.0, 1.0, 0.0), 0.0)
        self.assertEqual(lemma3_extremal_variance(0.0, 1.0, 1.0), 0.0)
        self.assertEqual(lemma3_extremal_variance(0.0, 1.0, 0.5), 0.25)
        with self.assertRaises(DomainError):
            lemma3_extremal_variance(0.0, 1.0, 2.0)

    def test_lemma3_property(self):
        self.assertLessEqual(lemma3_property_check(trials=2_000, seed=3), 1e-12)

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2 ** 32 - 1),
        st.floats(min_value=-1.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_random_law_respects_bounds(self, seed, a, fraction):
        rng = np.random.default_rng(seed)
        b = a + 1.0
        m = a + fraction
        values, weights = random_bounded_distribution(rng, a, b, m)
        self.assertAlmostEqual(float(weights.sum()), 1.0, places=12)
        self.assertTrue(np.all(weights >= -1e-15))
        self.assertAlmostEqual(float(np.dot(values, weights)), m, delta=1e-12)
        variance = float(np.dot(weights, (values - np.dot(values, weights)) ** 2))
        self.assertLessEqual(variance, lemma3_extremal_variance(a, b, m) + 1e-12)


class PositivityScanTestCase(SimpleTestCase):
    """Test cases for the positivity scan and the full verification report"""

    def test_scan_is_nonnegative(self):
        scan = proposition1_scan((0.1, 0.5, 0.7, 0.9, 0.99), (0.2, 0.4, 0.6), (0.0, 1.0, 5.0), (0.3, 0.9), GRID)
        self.assertEqual(scan.points, 90)
        self.assertGreaterEqual(scan.minimum, -1e-6)
        self.assertGreaterEqual(scan.claim1_margin, -1e-8)
        self.assertGreaterEqual(scan.claim2_minimum, -1e-12)
        self.assertEqual(set(scan.argmin), {'p', 'recovery', 'r_m', 'alpha', 'rho'})

    def test_empty_scan(self):
        with self.assertRaises(DomainError):
            proposition1_scan((), (0.4,), (1.0,), (0.3,), GRID)

    def test_variance_monotonicity_is_reported(self):
        params = SimplifiedVodParams(p=0.5, market_recovery=0.4, r_m=1.0, alpha=0.0, rho=0.3)
        variances, monotone = variance_monotonicity(params, (2.0, 0.0, 1.0), GRID)
        self.assertEqual(len(variances), 3)
        self.assertIsInstance(monotone, bool)

    def test_verify_appendix(self):
        report = verify_appendix(GRID, seed=0, lemma1_draws=10, lemma3_trials=1_000)
        self.assertTrue(report.passed, report.failures)
        names = [check['name'] for check in report.as_dict()['checks']]
        self.assertEqual(names, [
            'proposition1_minimum', 'claim1_margin', 'claim2_minimum',
            'lemma1_residual', 'lemma2_residual', 'lemma3_excess',
        ])
        self.assertIn('variance_monotone_in_alpha', report.observations)
