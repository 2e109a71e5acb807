import json
import math
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from rest_framework import status
from rest_framework.test import APIClient

from .copula import conditional_default_prob, integrate_over_factor
from .exceptions import (
    ConfigurationError,
    DomainError,
    InfeasibleCalibrationError,
    NoBracketError,
    PortfolioError,
    PortfolioFormatError,
    UnknownNameError,
)
from .ingestion import read_portfolio
from .market import (
    CreditName,
    Portfolio,
    Tranche,
    curve_from_spread,
    default_probability,
    demo_portfolio,
    name_default_probability,
    spread_for_probability,
)
from .numerics import factor_grid, find_root, norm_cdf, norm_inv
from .pricer import (
    LossGrid,
    PricerConfig,
    conditional_loss_distribution,
    expected_tranche_loss,
    price_tranche,
    pv_after_default,
    settle_default,
    tranche_pv,
)
from .recovery import (
    RecoveryModel,
    calibrate_beta,
    calibrate_model,
    calibration_residual,
    conditional_recovery,
    model_from_config,
    parse_model_spec,
    recovery_variance_given_default,
    rm_regularized,
)
from .serializers import PriceRequestSerializer

GRID = factor_grid(96)
CONSTANT_ONE = RecoveryModel.constant(1.0, alpha=1.0)
REGULARIZED = RecoveryModel.regularized(alpha=1.0)
DETERMINISTIC = RecoveryModel.deterministic()


def expected_portfolio_loss(portfolio, t):
    return math.fsum(name_default_probability(n, t) * n.loss_given_default for n in portfolio.names)


class NumericsTestCase(SimpleTestCase):
    """Test cases for special functions, quadrature and root finding"""

    def test_norm_cdf(self):
        self.assertEqual(norm_cdf(0.0), 0.5)
        self.assertGreater(norm_cdf(8.0), 1.0 - 1e-14)
        self.assertAlmostEqual(norm_cdf(1.0), 0.8413447461, places=10)

    def test_norm_cdf_vectorized(self):
        values = norm_cdf(np.array([-1.0, 0.0, 1.0]))
        self.assertEqual(values.shape, (3,))
        self.assertAlmostEqual(values[0] + values[2], 1.0, places=14)

    def test_norm_inv(self):
        self.assertEqual(norm_inv(0.5), 0.0)
        self.assertAlmostEqual(norm_inv(0.3), -0.5244005, places=6)
        for x in range(-3, 4):
            with self.subTest(x=x):
                self.assertAlmostEqual(norm_inv(norm_cdf(float(x))), x, places=10)

    def test_norm_inv_domain(self):
        for p in (0.0, 1.0, -0.1, 1.5):
            with self.subTest(p=p):
                with self.assertRaises(DomainError):
                    norm_inv(p)

    def test_single_node_grid(self):
        grid = factor_grid(1)
        self.assertEqual(list(grid.nodes), [0.0])
        self.assertEqual(list(grid.weights), [1.0])

    def test_grid_integrates_normal_moments(self):
        self.assertAlmostEqual(float(factor_grid(64).expectation(norm_cdf(factor_grid(64).nodes))), 0.5, delta=1e-10)
        self.assertAlmostEqual(float(GRID.expectation(GRID.nodes ** 4)), 3.0, delta=1e-9)

    def test_grid_is_read_only_and_hashable(self):
        self.assertIs(factor_grid(96), GRID)
        self.assertEqual(hash(factor_grid(96)), hash(GRID))
        with self.assertRaises(ValueError):
            GRID.nodes[0] = 1.0

    def test_invalid_grid_size(self):
        for n in (0, -3, 2.5):
            with self.subTest(n=n):
                with self.assertRaises(DomainError):
                    factor_grid(n)

    def test_find_root(self):
        self.assertAlmostEqual(find_root(lambda x: x - 2.0, 0.0, 5.0), 2.0, places=12)
        self.assertAlmostEqual(find_root(lambda x: norm_cdf(x) - 0.3, -10.0, 10.0), -0.5244005, places=6)

    def test_find_root_without_bracket(self):
        with self.assertRaises(NoBracketError):
            find_root(lambda x: x * x + 1.0, -1.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=-30.0, max_value=30.0))
    def test_norm_cdf_symmetry(self, x):
        self.assertAlmostEqual(norm_cdf(x) + norm_cdf(-x), 1.0, delta=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=0.01, max_value=0.99))
    def test_find_root_is_deterministic(self, target):
        def f(x):
            return norm_cdf(x) - target

        self.assertEqual(find_root(f, -10.0, 10.0), find_root(f, -10.0, 10.0))


class MarketTestCase(SimpleTestCase):
    """Test cases for credit curves, portfolios and tranches"""

    def test_zero_spread(self):
        curve = curve_from_spread(0.0, 0.4)
        self.assertEqual(curve.hazard, 0.0)
        self.assertEqual(default_probability(curve, 5.0), 0.0)

    def test_credit_triangle(self):
        curve = curve_from_spread(0.01, 0.4)
        self.assertAlmostEqual(curve.hazard, 0.0166667, places=7)
        self.assertAlmostEqual(default_probability(curve, 5.0), 0.079956, delta=1e-6)
        self.assertAlmostEqual(curve_from_spread(0.01, 0.99).hazard, 1.0, places=12)
        self.assertEqual(default_probability(curve, 0.0), 0.0)

    def test_default_probability_increases_with_hazard(self):
        probabilities = [default_probability(curve_from_spread(s, 0.4), 5.0) for s in (0.01, 0.1, 1.0, 10.0)]
        self.assertEqual(probabilities, sorted(probabilities))
        self.assertLess(probabilities[-1], 1.0)

    def test_spread_for_probability(self):
        self.assertEqual(spread_for_probability(0.0, 0.4, 5.0), 0.0)
        self.assertAlmostEqual(spread_for_probability(0.0799556, 0.4, 5.0), 0.01, places=6)
        self.assertTrue(math.isfinite(spread_for_probability(0.9999, 0.4, 5.0)))
        with self.assertRaises(DomainError):
            spread_for_probability(1.0, 0.4, 5.0)

    def test_portfolio_rejects_duplicates(self):
        name = CreditName('A', 0.01, 0.4, 1.0)
        with self.assertRaises(PortfolioError):
            Portfolio.from_names([name, name])

    def test_portfolio_conserves_notional(self):
        with self.assertRaises(PortfolioError):
            Portfolio(names=(CreditName('A', 0.01, 0.4, 1.0),), cumulative_loss=0.5, original_notional=1.0)

    def test_unknown_and_defaulted_names(self):
        portfolio = demo_portfolio(size=3)
        tranche = Tranche.from_percent(portfolio, 0.0, 100.0, 5.0)
        settled, _, _ = settle_default(portfolio, tranche, 'N1', 0.4)
        with self.assertRaises(UnknownNameError):
            settled.index_of('N1')
        with self.assertRaises(UnknownNameError):
            portfolio.index_of('missing')

    def test_demo_portfolio(self):
        portfolio = demo_portfolio()
        self.assertEqual(len(portfolio), 125)
        self.assertEqual(portfolio.names[0].id, 'N001')
        self.assertAlmostEqual(portfolio.original_notional, 100.0, places=9)
        self.assertAlmostEqual(portfolio.max_loss(), 60.0, places=9)

    def test_tranche_payoff(self):
        tranche = Tranche(attach=3.0, detach=7.0, maturity=5.0)
        cases = [(0.0, 0.0), (3.0, 0.0), (5.0, 2.0), (7.0, 4.0), (10.0, 4.0)]
        for loss, expected in cases:
            with self.subTest(loss=loss):
                self.assertEqual(tranche.loss(loss), expected)
        np.testing.assert_array_equal(tranche.loss(np.array([0.0, 5.0, 10.0])), [0.0, 2.0, 4.0])

    def test_invalid_tranche(self):
        with self.assertRaises(PortfolioError):
            Tranche(attach=5.0, detach=5.0, maturity=5.0)
        with self.assertRaises(PortfolioError):
            Tranche(attach=0.0, detach=1.0, maturity=5.0, coupon=0.01, zero_coupon=True)


class CopulaTestCase(SimpleTestCase):
    """Test cases for the one-factor Gaussian copula"""

    def test_independence(self):
        z = np.linspace(-3.0, 3.0, 7)
        np.testing.assert_array_equal(conditional_default_prob(0.2, 0.0, z), np.full(7, 0.2))

    def test_threshold_gives_half(self):
        z = norm_inv(0.1) / math.sqrt(0.25)
        self.assertAlmostEqual(conditional_default_prob(0.1, 0.25, z), 0.5, places=12)

    def test_known_value(self):
        self.assertAlmostEqual(conditional_default_prob(0.1, 0.25, -1.0), 0.18339, delta=1e-4)

    def test_low_factor_means_more_defaults(self):
        values = conditional_default_prob(0.05, 0.3, np.array([-2.0, 0.0, 2.0]))
        self.assertTrue(np.all(np.diff(values) < 0.0))

    def test_integrate_over_factor(self):
        self.assertAlmostEqual(integrate_over_factor(lambda z: np.ones_like(z), GRID), 1.0, places=12)
        self.assertAlmostEqual(integrate_over_factor(lambda z: z ** 2, GRID), 1.0, delta=1e-10)
        for p in (0.01, 0.5, 0.99):
            for rho in (0.0, 0.3, 0.9):
                with self.subTest(p=p, rho=rho):
                    value = integrate_over_factor(lambda z: conditional_default_prob(p, rho, z), GRID)
                    self.assertAlmostEqual(value, p, delta=1e-8)

    def test_invalid_correlation(self):
        with self.assertRaises(DomainError):
            conditional_default_prob(0.1, 1.0, 0.0)


class RecoveryTestCase(SimpleTestCase):
    """Test cases for recovery models and their calibration"""

    def test_rm_regularized(self):
        self.assertEqual(rm_regularized(0.5, 0.4), 1.0)
        self.assertEqual(rm_regularized(0.6, 0.4), 1.0)
        self.assertAlmostEqual(rm_regularized(0.8, 0.4), 0.625, places=12)
        self.assertAlmostEqual(rm_regularized(1.0, 0.4), 0.4, places=12)

    def test_rm_regularized_decreasing(self):
        values = [rm_regularized(p, 0.4) for p in np.linspace(0.61, 1.0, 40)]
        self.assertTrue(all(b < a for a, b in zip(values, values[1:])))

    def test_parse_model_spec(self):
        cases = [
            ('deterministic', 'deterministic'),
            ('unregularized', 'stochastic:constant:1,alpha=1'),
            ('regularized', 'stochastic:regularized,alpha=1'),
            ('stochastic:regularized,alpha=2', 'stochastic:regularized,alpha=2'),
            ('stochastic:constant:0.8,alpha=0.5', 'stochastic:constant:0.8,alpha=0.5'),
        ]
        for text, spec in cases:
            with self.subTest(text=text):
                self.assertEqual(parse_model_spec(text).spec, spec)

    def test_parse_model_spec_errors(self):
        for text in ('', 'stochastic', 'stochastic:constant:x', 'deterministic,alpha=1', 'regularized,beta=1',
                     'stochastic:constant:1.5'):
            with self.subTest(text=text):
                with self.assertRaises(ConfigurationError):
                    parse_model_spec(text)

    def test_model_from_config(self):
        self.assertTrue(model_from_config({'kind': 'deterministic'}).is_deterministic)
        model = model_from_config({'kind': 'stochastic', 'rm': 'regularized', 'alpha': 2.0})
        self.assertEqual(model.label, 'regularized')
        self.assertEqual(model.alpha, 2.0)

    def test_cap_equal_to_market_recovery_is_deterministic(self):
        cal = calibrate_beta(0.3, 0.4, 0.4, 1.0, 0.3, GRID)
        self.assertTrue(cal.at_infinity)
        np.testing.assert_array_equal(conditional_recovery(cal, 1.0, GRID.nodes), np.full(GRID.nodes.size, 0.4))

    def test_cap_below_market_recovery_is_infeasible(self):
        with self.assertRaises(InfeasibleCalibrationError):
            calibrate_beta(0.3, 0.4, 0.3, 1.0, 0.3, GRID)

    @patch('pricing.recovery.find_root', side_effect=NoBracketError('objective has the same sign at both ends'))
    def test_unbracketed_calibration_is_infeasible(self, root):
        with self.assertRaises(InfeasibleCalibrationError):
            calibrate_beta(0.31, 0.4, 0.9, 1.0, 0.3, GRID)
        root.assert_called_once()

    @patch('pricing.recovery.find_root', side_effect=NoBracketError('objective has the same sign at both ends'))
    def test_unbracketed_cap_at_market_recovery_is_deterministic(self, root):
        with self.assertLogs('pricing.recovery', level='WARNING'):
            cal = calibrate_beta(0.32, 0.4, 0.4 + 1e-10, 1.0, 0.3, GRID)
        self.assertTrue(cal.at_infinity)
        self.assertEqual(cal.r_m_effective, 0.4)

    def test_zero_alpha_has_closed_form(self):
        cal = calibrate_beta(0.3, 0.4, 1.0, 0.0, 0.3, GRID)
        self.assertAlmostEqual(cal.beta, norm_inv(0.4), places=7)
        recoveries = conditional_recovery(cal, 0.0, GRID.nodes)
        np.testing.assert_allclose(recoveries, 0.4, atol=1e-9)

    def test_calibration_residual(self):
        for model in (CONSTANT_ONE, REGULARIZED, RecoveryModel.constant(0.7, alpha=2.0)):
            for p in (0.05, 0.3, 0.8):
                with self.subTest(model=model.spec, p=p):
                    cal = calibrate_model(model, p, 0.4, 0.3, GRID)
                    self.assertLess(calibration_residual(cal, model.alpha, 0.3, GRID), 1e-10)

    def test_recovery_vanishes_in_bad_states(self):
        cal = calibrate_beta(0.3, 0.4, 1.0, 1.0, 0.3, GRID)
        self.assertLess(conditional_recovery(cal, 1.0, -40.0), 1e-12)

    def test_recovery_variance(self):
        self.assertEqual(recovery_variance_given_default(0.3, 0.4, DETERMINISTIC, 0.3, GRID), 0.0)
        for model in (CONSTANT_ONE, REGULARIZED):
            for p in (0.1, 0.5, 0.9):
                with self.subTest(model=model.spec, p=p):
                    cap = model.cap(p, 0.4)
                    variance = recovery_variance_given_default(p, 0.4, model, 0.3, GRID)
                    self.assertGreaterEqual(variance, 0.0)
                    self.assertLessEqual(variance, 0.4 * (cap - 0.4) + 1e-12)
        self.assertAlmostEqual(recovery_variance_given_default(1.0, 0.4, REGULARIZED, 0.3, GRID), 0.0, delta=1e-10)

    def test_regularized_variance_collapses(self):
        variances = [
            recovery_variance_given_default(p, 0.4, REGULARIZED, 0.4, GRID) for p in (0.7, 0.9, 0.99, 0.999)
        ]
        self.assertTrue(all(b < a for a, b in zip(variances, variances[1:])))


class PricerTestCase(SimpleTestCase):
    """Test cases for loss distributions and tranche pricing"""

    def setUp(self):
        self.config = PricerConfig.from_settings()
        self.small = demo_portfolio(size=20)

    def test_settled_portfolio_is_point_mass(self):
        portfolio = Portfolio(
            names=(), cumulative_loss=0.6, cumulative_recovered=0.4, original_notional=1.0, defaulted={'A'}
        )
        distribution = conditional_loss_distribution(portfolio, 5.0, DETERMINISTIC, 0.3, 0.0, self.config)
        self.assertEqual(distribution.probabilities[0], 1.0)
        self.assertEqual(distribution.mean, 0.0)

    def test_single_name_bernoulli(self):
        portfolio = Portfolio.from_names([CreditName('A', 0.02, 0.5, 1.0)])
        z = -0.5
        distribution = conditional_loss_distribution(portfolio, 5.0, DETERMINISTIC, 0.3, z, self.config)
        p = conditional_default_prob(name_default_probability(portfolio.names[0], 5.0), 0.3, z)
        self.assertAlmostEqual(distribution.grid_unit, 1.0 / 8)
        self.assertAlmostEqual(distribution.probabilities[4], p, places=14)
        self.assertAlmostEqual(distribution.probabilities[0], 1.0 - p, places=14)
        self.assertAlmostEqual(distribution.max_loss, 0.5)

    def test_equity_to_senior_expected_loss(self):
        tranche = Tranche.from_percent(self.small, 0.0, 100.0, 5.0)
        unit = LossGrid.for_portfolio(self.small, self.config).unit
        expected = expected_portfolio_loss(self.small, 5.0)
        for model in (DETERMINISTIC, CONSTANT_ONE, REGULARIZED):
            with self.subTest(model=model.spec):
                value = expected_tranche_loss(self.small, tranche, 5.0, model, 0.3, self.config)
                self.assertAlmostEqual(value, expected, delta=unit)

    def test_zero_coupon_pv_is_expected_loss(self):
        tranche = Tranche.from_percent(self.small, 0.0, 100.0, 5.0)
        unit = LossGrid.for_portfolio(self.small, self.config).unit
        pv = tranche_pv(self.small, tranche, 5.0, CONSTANT_ONE, 0.3, self.config)
        self.assertAlmostEqual(pv, expected_portfolio_loss(self.small, 5.0), delta=unit)

    def test_deterministic_super_senior_is_risk_free(self):
        tranche = Tranche.from_percent(self.small, 60.0, 100.0, 5.0)
        self.assertTrue(tranche.is_super_senior(self.small))
        pricing = price_tranche(self.small, tranche, 5.0, DETERMINISTIC, 0.4, self.config)
        self.assertLess(abs(pricing.pv), 1e-12)

    def test_stochastic_super_senior_is_risky(self):
        portfolio = demo_portfolio()
        tranche = Tranche.from_percent(portfolio, 60.0, 100.0, 5.0)
        pv = tranche_pv(portfolio, tranche, 5.0, CONSTANT_ONE, 0.4, self.config)
        self.assertGreater(pv, 1e-6 * tranche.notional)

    def test_premium_leg(self):
        tranche = Tranche.from_percent(self.small, 3.0, 7.0, 5.0, coupon=0.05)
        pricing = price_tranche(self.small, tranche, 5.0, DETERMINISTIC, 0.3, self.config)
        self.assertGreater(pricing.premium_pv, 0.0)
        self.assertLessEqual(pricing.premium_pv, 0.05 * 5.0 * tranche.notional)
        self.assertAlmostEqual(pricing.pv, pricing.protection_pv - pricing.premium_pv, places=14)

    def test_settle_default(self):
        tranche = Tranche.from_percent(self.small, 0.0, 100.0, 5.0)
        settled, state, payment = settle_default(self.small, tranche, 'N01', 0.4)
        self.assertEqual(len(settled), 19)
        self.assertAlmostEqual(payment, 0.48, places=12)
        self.assertAlmostEqual(settled.cumulative_recovered, 0.32, places=12)
        self.assertEqual(settled.original_notional, self.small.original_notional)
        self.assertEqual(LossGrid.for_portfolio(settled, self.config), LossGrid.for_portfolio(self.small, self.config))
        self.assertAlmostEqual(state.notional, self.small.original_notional - 0.32 - 0.48, places=12)

    def test_single_name_post_default_is_cashflow(self):
        portfolio = Portfolio.from_names([CreditName('A', 0.02, 0.4, 1.0)])
        tranche = Tranche.from_percent(portfolio, 0.0, 100.0, 5.0)
        value = pv_after_default(portfolio, tranche, 'A', CONSTANT_ONE, 0.3, self.config)
        self.assertAlmostEqual(value, 0.6, places=12)

    def test_post_default_ignores_defaulted_spread(self):
        tranche = Tranche.from_percent(self.small, 3.0, 7.0, 5.0)
        bumped = self.small.with_spread('N01', 0.5)
        self.assertEqual(
            pv_after_default(self.small, tranche, 'N01', REGULARIZED, 0.3, self.config),
            pv_after_default(bumped, tranche, 'N01', REGULARIZED, 0.3, self.config),
        )

    def test_adjacent_tranches_add_up(self):
        equity, mezzanine, combined = (
            Tranche.from_percent(self.small, a, d, 5.0) for a, d in ((0.0, 3.0), (3.0, 7.0), (0.0, 7.0))
        )
        for model in (DETERMINISTIC, CONSTANT_ONE, REGULARIZED):
            with self.subTest(model=model.spec):
                parts = [expected_tranche_loss(self.small, tranche, 5.0, model, 0.4, self.config)
                         for tranche in (equity, mezzanine, combined)]
                self.assertAlmostEqual(parts[0] + parts[1], parts[2], delta=1e-12 * combined.notional)

    def test_expected_loss_falls_with_attachment(self):
        for model in (DETERMINISTIC, CONSTANT_ONE):
            losses = [
                expected_tranche_loss(
                    self.small, Tranche.from_percent(self.small, attach, attach + 3.0, 5.0), 5.0, model, 0.4, self.config
                )
                for attach in range(0, 30, 3)
            ]
            with self.subTest(model=model.spec):
                self.assertTrue(all(b <= a + 1e-14 for a, b in zip(losses, losses[1:])))
                self.assertGreater(losses[0], losses[-1])

    def test_heterogeneous_conditional_mean(self):
        portfolio = Portfolio.from_names([
            CreditName('A', 0.005, 0.3, 1.0),
            CreditName('B', 0.02, 0.4, 0.5),
            CreditName('C', 0.04, 0.25, 2.0),
            CreditName('D', 0.01, 0.5, 1.5),
        ])
        unit = LossGrid.for_portfolio(portfolio, self.config).unit
        for model in (DETERMINISTIC, CONSTANT_ONE, REGULARIZED):
            for z in (-2.0, 0.0, 1.5):
                expected = 0.0
                for name in portfolio.names:
                    p = name_default_probability(name, 5.0)
                    cal = calibrate_model(model, p, name.market_recovery, 0.3, self.config.grid)
                    recovery = conditional_recovery(cal, model.alpha, z)
                    expected += conditional_default_prob(p, 0.3, z) * (1.0 - recovery) * name.notional
                with self.subTest(model=model.spec, z=z):
                    distribution = conditional_loss_distribution(portfolio, 5.0, model, 0.3, z, self.config)
                    self.assertAlmostEqual(distribution.mean, expected, delta=unit)

    def test_finer_loss_grid_barely_moves_pv(self):
        portfolio = demo_portfolio()
        fine = PricerConfig.from_settings(loss_buckets_per_name=16)
        for model in (DETERMINISTIC, CONSTANT_ONE):
            for attach, detach in ((0.0, 3.0), (3.0, 15.0), (15.0, 30.0), (60.0, 100.0)):
                tranche = Tranche.from_percent(portfolio, attach, detach, 5.0)
                with self.subTest(model=model.spec, attach=attach):
                    coarse_pv = tranche_pv(portfolio, tranche, 5.0, model, 0.4, self.config)
                    fine_pv = tranche_pv(portfolio, tranche, 5.0, model, 0.4, fine)
                    self.assertLess(abs(fine_pv - coarse_pv), 1e-3 * tranche.notional)

    def test_tranche_beyond_portfolio(self):
        tranche = Tranche(attach=0.0, detach=self.small.original_notional * 2, maturity=5.0)
        with self.assertRaises(PortfolioError):
            price_tranche(self.small, tranche, 5.0, DETERMINISTIC, 0.3, self.config)

    def test_small_grid_rejected(self):
        with self.assertRaises(ConfigurationError):
            PricerConfig.from_settings(factor_nodes=8)


class SettlementTestCase(SimpleTestCase):
    """Test cases for default settlement and effective tranche strikes"""

    def setUp(self):
        self.demo = demo_portfolio()

    def test_single_default_below_attachment(self):
        mezzanine = Tranche.from_percent(self.demo, 15.0, 30.0, 5.0)
        settled, state, payment = settle_default(self.demo, mezzanine, 'N001', 0.4)
        self.assertEqual(payment, 0.0)
        self.assertAlmostEqual(state.subordination, 14.52, places=12)
        self.assertAlmostEqual(state.effective_detach, 29.52, places=12)
        self.assertAlmostEqual(state.notional, 15.0, places=12)
        self.assertAlmostEqual(settled.cumulative_loss, 0.48, places=12)

    def test_single_default_amortizes_super_senior(self):
        super_senior = Tranche.from_percent(self.demo, 60.0, 100.0, 5.0)
        _, state, payment = settle_default(self.demo, super_senior, 'N001', 0.4)
        self.assertEqual(payment, 0.0)
        self.assertAlmostEqual(state.notional, 39.68, places=12)
        self.assertAlmostEqual(state.effective_detach, 99.2, places=12)

    def test_all_defaults_exhaust_super_senior(self):
        super_senior = Tranche.from_percent(self.demo, 60.0, 100.0, 5.0)
        portfolio = self.demo
        payments = []
        for name_id in self.demo.ids:
            portfolio, state, payment = settle_default(portfolio, super_senior, name_id, 0.4)
            payments.append(payment)
        self.assertEqual(len(portfolio), 0)
        self.assertAlmostEqual(math.fsum(payments), 0.0, places=9)
        self.assertAlmostEqual(state.notional, 0.0, places=9)
        self.assertAlmostEqual(portfolio.cumulative_loss, 60.0, places=9)

    @settings(max_examples=50, deadline=None)
    @given(
        order=st.permutations([f'N{index:02d}' for index in range(1, 11)]),
        recoveries=st.lists(st.floats(min_value=0.0, max_value=0.99), min_size=10, max_size=10),
        strikes=st.sampled_from([(0.0, 3.0), (3.0, 15.0), (15.0, 30.0), (60.0, 100.0), (0.0, 100.0)]),
    )
    def test_settlement_conserves_notional(self, order, recoveries, strikes):
        portfolio = demo_portfolio(size=10)
        tranche = Tranche.from_percent(portfolio, *strikes, 5.0)
        payments = []
        for name_id, recovery in zip(order, recoveries):
            portfolio, state, payment = settle_default(portfolio, tranche, name_id, recovery)
            payments.append(payment)
            total = portfolio.live_notional + portfolio.cumulative_loss + portfolio.cumulative_recovered
            self.assertAlmostEqual(total, portfolio.original_notional, delta=1e-12)
            self.assertGreaterEqual(payment, 0.0)
            self.assertGreaterEqual(state.notional, 0.0)
            self.assertLessEqual(state.notional, tranche.notional + 1e-12)
        self.assertAlmostEqual(math.fsum(payments), tranche.loss(portfolio.cumulative_loss), delta=1e-12)


class IngestionTestCase(SimpleTestCase):
    """Test cases for portfolio files"""

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_csv(self):
        path = self.root / 'portfolio.csv'
        path.write_text('id,spread_bp,recovery,notional\nA,100,0.4,1\nB,250,0.3,2\n')
        portfolio = read_portfolio(path)
        self.assertEqual(portfolio.ids, ('A', 'B'))
        self.assertAlmostEqual(portfolio.names[1].spread, 0.025)
        self.assertEqual(portfolio.original_notional, 3.0)

    def test_json(self):
        path = self.root / 'portfolio.json'
        path.write_text(json.dumps([{'id': 'A', 'spread_bp': 100, 'recovery': 0.4, 'notional': 1}]))
        self.assertEqual(read_portfolio(path).ids, ('A',))

    def test_malformed_files(self):
        cases = {
            'missing_column.csv': 'id,spread_bp,recovery\nA,100,0.4\n',
            'empty_cell.csv': 'id,spread_bp,recovery,notional\nA,100,,1\n',
            'bad_recovery.csv': 'id,spread_bp,recovery,notional\nA,100,1.2,1\n',
            'duplicate.csv': 'id,spread_bp,recovery,notional\nA,100,0.4,1\nA,100,0.4,1\n',
            'not_a_list.json': '{"id": "A"}',
        }
        for filename, text in cases.items():
            with self.subTest(filename=filename):
                path = self.root / filename
                path.write_text(text)
                with self.assertRaises(PortfolioFormatError):
                    read_portfolio(path)

    def test_missing_file(self):
        with self.assertRaises(PortfolioFormatError):
            read_portfolio(self.root / 'nope.csv')


class PriceApiTestCase(SimpleTestCase):
    """Test cases for the pricing endpoint"""

    def setUp(self):
        self.client = APIClient()
        self.payload = {
            'portfolio': [
                {'id': 'A', 'spread_bp': 100, 'recovery': 0.4, 'notional': 1},
                {'id': 'B', 'spread_bp': 300, 'recovery': 0.4, 'notional': 1},
            ],
            'tranche': {'attach_pct': 0, 'detach_pct': 100},
            'model': 'stochastic:constant:1,alpha=1',
            'rho': 0.3,
        }

    def test_price(self):
        response = self.client.post('/api/pricing/price/', self.payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(
            set(response.data), {'model', 'protection_pv', 'premium_pv', 'pv', 'expected_loss'}
        )
        self.assertEqual(response.data['premium_pv'], 0.0)

    def test_invalid_request(self):
        cases = [
            {**self.payload, 'rho': 1.0},
            {**self.payload, 'model': 'stochastic'},
            {**self.payload, 'unexpected': 1},
            {**self.payload, 'tranche': {'attach_pct': 50, 'detach_pct': 10}},
        ]
        for payload in cases:
            with self.subTest(payload=payload):
                response = self.client.post('/api/pricing/price/', payload, format='json')
                self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
                self.assertIn('error', response.data)

    def test_serializer_defaults_to_demo_portfolio(self):
        serializer = PriceRequestSerializer(data={'tranche': {'attach_pct': 3, 'detach_pct': 7}})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        portfolio, tranche, model, rho, _ = serializer.build()
        self.assertEqual(len(portfolio), 125)
        self.assertAlmostEqual(tranche.attach, 3.0)
        self.assertTrue(model.is_deterministic)
        self.assertEqual(rho, 0.4)
