import math
from unittest.mock import patch

from django.test import SimpleTestCase

from pricing.exceptions import DomainError, PortfolioError
from pricing.market import Tranche, demo_portfolio, name_default_probability
from pricing.pricer import PricerConfig, expected_tranche_loss
from pricing.recovery import RecoveryModel

from .engines import (
    MAX_ENUMERATION_NAMES,
    McConfig,
    compare_engines,
    enumerate_tranche_loss,
    mc_tranche_loss,
    seeded_portfolio,
)

DETERMINISTIC = RecoveryModel.deterministic()
CONSTANT_ONE = RecoveryModel.constant(1.0, alpha=1.0)
REGULARIZED = RecoveryModel.regularized(alpha=1.0)
ORACLE_TRANCHES = ((0.0, 3.0), (3.0, 15.0), (15.0, 30.0), (60.0, 100.0))


def tranches_for(portfolio):
    return [Tranche.from_percent(portfolio, a, d, 5.0) for a, d in ORACLE_TRANCHES]


class EnumerationTestCase(SimpleTestCase):
    """Test cases for exact enumeration of default patterns"""

    def setUp(self):
        self.config = PricerConfig.from_settings()
        self.portfolio = seeded_portfolio(seed=11)

    def test_seeded_portfolio(self):
        self.assertEqual(len(self.portfolio), 8)
        self.assertEqual(seeded_portfolio(seed=11), self.portfolio)
        self.assertNotEqual(seeded_portfolio(seed=12), self.portfolio)
        self.assertEqual(len({name.profile for name in self.portfolio.names}), 8)

    def test_full_tranche_is_expected_loss(self):
        tranche = Tranche.from_percent(self.portfolio, 0.0, 100.0, 5.0)
        expected = math.fsum(
            name_default_probability(name, 5.0) * name.loss_given_default for name in self.portfolio.names
        )
        for model in (DETERMINISTIC, CONSTANT_ONE, REGULARIZED):
            with self.subTest(model=model.spec):
                value = enumerate_tranche_loss(self.portfolio, tranche, 5.0, model, 0.3, self.config.grid)
                self.assertAlmostEqual(value, expected, delta=1e-10)

    def test_agrees_with_semi_analytic(self):
        for model in (DETERMINISTIC, CONSTANT_ONE, REGULARIZED):
            rows = compare_engines(self.portfolio, tranches_for(self.portfolio), 5.0, model, 0.4, None, self.config)
            for row in rows:
                with self.subTest(model=model.spec, attach=row['attach']):
                    self.assertTrue(row['enumeration_ok'], row)
                    self.assertNotIn('monte_carlo', row)

    def test_too_many_names(self):
        portfolio = demo_portfolio(size=MAX_ENUMERATION_NAMES + 1)
        tranche = Tranche.from_percent(portfolio, 0.0, 100.0, 5.0)
        with self.assertRaises(PortfolioError):
            enumerate_tranche_loss(portfolio, tranche, 5.0, DETERMINISTIC, 0.3, self.config.grid)


class MonteCarloTestCase(SimpleTestCase):
    """Test cases for the Monte Carlo reference engine"""

    def setUp(self):
        self.config = PricerConfig.from_settings()
        self.portfolio = demo_portfolio(size=20)

    def test_deterministic_super_senior_never_pays(self):
        tranche = Tranche.from_percent(self.portfolio, 60.0, 100.0, 5.0)
        estimate, error = mc_tranche_loss(
            self.portfolio, tranche, 5.0, DETERMINISTIC, 0.4, McConfig(paths=5_000, seed=1), self.config
        )
        self.assertLess(abs(estimate), 1e-9)
        self.assertLess(error, 1e-9)

    def test_single_path(self):
        tranche = Tranche.from_percent(self.portfolio, 0.0, 100.0, 5.0)
        estimate, error = mc_tranche_loss(
            self.portfolio, tranche, 5.0, CONSTANT_ONE, 0.4, McConfig(paths=1, seed=5), self.config
        )
        self.assertEqual(error, 0.0)
        self.assertGreaterEqual(estimate, 0.0)
        self.assertLessEqual(estimate, tranche.notional)

    def test_seed_reproducibility(self):
        tranche = Tranche.from_percent(self.portfolio, 3.0, 15.0, 5.0)

        def run(seed):
            return mc_tranche_loss(
                self.portfolio, tranche, 5.0, CONSTANT_ONE, 0.4,
                McConfig(paths=3_000, seed=seed, batch_size=1_000), self.config,
            )

        self.assertEqual(run(9), run(9))
        self.assertNotEqual(run(9), run(10))

    def test_agrees_with_semi_analytic(self):
        mc_config = McConfig(paths=40_000, seed=2024)
        for model in (DETERMINISTIC, CONSTANT_ONE):
            for attach, detach in ((0.0, 100.0), (3.0, 15.0)):
                tranche = Tranche.from_percent(self.portfolio, attach, detach, 5.0)
                with self.subTest(model=model.spec, attach=attach):
                    estimate, error = mc_tranche_loss(
                        self.portfolio, tranche, 5.0, model, 0.4, mc_config, self.config
                    )
                    semi_analytic = expected_tranche_loss(self.portfolio, tranche, 5.0, model, 0.4, self.config)
                    self.assertAlmostEqual(estimate, semi_analytic, delta=3.0 * error)

    @patch('oracles.engines.mc_tranche_loss')
    def test_comparison_allows_three_standard_errors(self, mc):
        tranche = Tranche.from_percent(self.portfolio, 3.0, 15.0, 5.0)
        semi_analytic = expected_tranche_loss(self.portfolio, tranche, 5.0, DETERMINISTIC, 0.4, self.config)
        error = 1e-4
        for offset, ok in ((2.9, True), (3.1, False)):
            mc.return_value = (semi_analytic + offset * error, error)
            with self.subTest(offset=offset):
                row, = compare_engines(self.portfolio, [tranche], 5.0, DETERMINISTIC, 0.4,
                                       McConfig(paths=10), self.config, enumeration=False)
                self.assertEqual(row['monte_carlo_ok'], ok)
                self.assertGreater(row['grid_unit'], offset * error)

    def test_invalid_config(self):
        for kwargs in ({'paths': 0}, {'paths': 2.5}, {'paths': 10, 'seed': -1}, {'paths': 10, 'batch_size': 0}):
            with self.subTest(**kwargs):
                with self.assertRaises(DomainError):
                    McConfig(**kwargs)
