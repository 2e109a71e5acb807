from unittest.mock import MagicMock, patch

import numpy as np
from django.test import SimpleTestCase
from rest_framework import status
from rest_framework.test import APIClient

from pricing.exceptions import DomainError, InvariantViolation, PortfolioError, UnknownNameError
from pricing.market import CreditName, Portfolio, Tranche, demo_portfolio
from pricing.pricer import PricerConfig
from pricing.recovery import RecoveryModel

from .engine import (
    ContinuityGap,
    RiskContext,
    RiskEngine,
    RiskReport,
    continuity_gap,
    continuity_ladder,
    credit_spread01,
    default_probability_grid,
    distinct_names,
    recovery01,
    vod,
)
from .payloads import portfolio_from_payload, portfolio_payload, trio_case_from_payload, trio_case_payload
from .sweep import trio_sweep
from .tasks import evaluate_trio_case
from .trio import (
    EXPECTED_PATTERN,
    TrioFlags,
    TrioThresholds,
    check_trio_report,
    evaluate_model,
    super_senior_tranche,
    trio_report,
)

DETERMINISTIC = RecoveryModel.deterministic()
CONSTANT_ONE = RecoveryModel.constant(1.0, alpha=1.0)
REGULARIZED = RecoveryModel.regularized(alpha=1.0)
TRIO_MODELS = (DETERMINISTIC, CONSTANT_ONE, REGULARIZED)


def small_context(model, attach_pct=15.0, detach_pct=30.0, size=20, rho=0.4):
    portfolio = demo_portfolio(size=size)
    tranche = Tranche.from_percent(portfolio, attach_pct, detach_pct, 5.0)
    return RiskContext(portfolio=portfolio, tranche=tranche, model=model, rho=rho,
                       config=PricerConfig.from_settings())


class RiskEngineTestCase(SimpleTestCase):
    """Test cases for CreditSpread01, VOD and Recovery01"""

    def test_full_tranche_cs01_is_positive(self):
        for model in TRIO_MODELS:
            context = small_context(model, 0.0, 100.0)
            with self.subTest(model=model.spec):
                self.assertGreater(credit_spread01('N01', context), 0.0)

    def test_deterministic_cs01_is_nonnegative(self):
        context = small_context(DETERMINISTIC)
        engine = RiskEngine(context)
        for p in default_probability_grid(context.p_max):
            spread = engine.spread_for('N01', p)
            with self.subTest(p=p):
                self.assertGreaterEqual(engine.credit_spread01('N01', spread) / context.tranche.notional, -1e-12)

    def test_zero_spread_name_vod_is_full_loss(self):
        portfolio = Portfolio.from_names([
            CreditName('A', 0.0, 0.4, 0.8),
            CreditName('B', 0.02, 0.4, 0.8),
            CreditName('C', 0.03, 0.4, 0.8),
        ])
        tranche = Tranche.from_percent(portfolio, 0.0, 100.0, 5.0)
        context = RiskContext(portfolio=portfolio, tranche=tranche, model=CONSTANT_ONE, rho=0.3)
        self.assertAlmostEqual(vod('A', context), 0.48, places=10)

    def test_recovery01(self):
        context = small_context(CONSTANT_ONE, 0.0, 100.0)
        self.assertAlmostEqual(recovery01('N01', context), -0.008, places=10)
        equity = small_context(CONSTANT_ONE, 0.0, 3.0)
        self.assertLessEqual(recovery01('N01', equity), 0.0)

    def test_recovery01_domain(self):
        portfolio = Portfolio.from_names([CreditName('A', 0.01, 0.995, 1.0), CreditName('B', 0.01, 0.4, 1.0)])
        tranche = Tranche.from_percent(portfolio, 0.0, 100.0, 5.0)
        context = RiskContext(portfolio=portfolio, tranche=tranche, model=DETERMINISTIC, rho=0.3)
        with self.assertRaises(DomainError):
            recovery01('A', context)

    def test_unknown_name(self):
        with self.assertRaises(UnknownNameError):
            vod('missing', small_context(DETERMINISTIC))

    def test_cs01_vod_identity(self):
        portfolio = demo_portfolio()
        tranches = [Tranche.from_percent(portfolio, a, d, 5.0) for a, d in ((15.0, 30.0), (60.0, 100.0))]
        probabilities = np.linspace(0.02, 0.999, 20)
        for model in TRIO_MODELS:
            engine = RiskEngine(RiskContext(portfolio=portfolio, tranche=tranches[0], model=model, rho=0.4))
            spreads = [engine.spread_for('N001', p) for p in probabilities]
            for tranche in tranches:
                with self.subTest(model=model.spec, attach=tranche.attach):
                    residual = engine.cs01_vod_identity_residual('N001', spreads, tranche=tranche)
                    self.assertLess(residual, 1e-9 * tranche.notional)

    def test_cs01_vod_identity_sees_spread_dependent_default_pv(self):
        engine = RiskEngine(small_context(DETERMINISTIC))
        spreads = [engine.spread_for('N01', p) for p in (0.2, 0.6)]

        def leaky(portfolio, tranche, name_id, *args):
            return 100.0 * portfolio.name(name_id).spread

        with patch('risk.engine.pricer.pv_after_default', side_effect=leaky):
            residual = engine.cs01_vod_identity_residual('N01', spreads)
        self.assertAlmostEqual(residual, 100.0 * 1e-4, places=9)

    def test_distinct_names(self):
        portfolio = Portfolio.from_names([
            CreditName('A', 0.01, 0.4, 1.0),
            CreditName('B', 0.02, 0.4, 1.0),
            CreditName('C', 0.01, 0.4, 1.0),
        ])
        groups = distinct_names(portfolio)
        self.assertEqual([ids for _, ids in groups], [('A', 'C'), ('B',)])


class ContinuityTestCase(SimpleTestCase):
    """Test cases for VOD curves and the continuity-on-default gap"""

    def test_deterministic_is_continuous(self):
        context = small_context(DETERMINISTIC)
        notional = context.tranche.notional
        self.assertLess(abs(continuity_gap('N01', context).gap), 1e-4 * notional)
        gap = RiskEngine(context).continuity_gap('N01', p_max=1.0 - 1e-7).gap
        self.assertLess(abs(gap), 1e-6 * notional)

    def test_constant_cap_is_discontinuous(self):
        context = small_context(CONSTANT_ONE, size=125)
        self.assertGreater(abs(continuity_gap('N001', context).gap), 5e-4 * context.tranche.notional)
        super_senior = super_senior_tranche(context.portfolio, 5.0)
        gap = RiskEngine(context).continuity_gap('N001', tranche=super_senior).gap
        self.assertLess(gap, 0.0)

    def test_regularized_gap_shrinks(self):
        engine = RiskEngine(small_context(REGULARIZED))
        gaps = [abs(engine.continuity_gap('N01', p_max=p).gap) for p in (0.99, 0.999, 0.9999)]
        self.assertTrue(all(b < a for a, b in zip(gaps, gaps[1:])))

    def test_continuity_ladder(self):
        self.assertEqual(len(continuity_ladder(0.9999)), 3)
        for got, want in zip(continuity_ladder(0.9999), (0.99, 0.999, 0.9999)):
            self.assertAlmostEqual(got, want, places=12)
        self.assertEqual(continuity_ladder(0.9), (0.9,))

    def test_super_senior_gaps_across_caps(self):
        portfolio = demo_portfolio()
        super_senior = Tranche.from_percent(portfolio, 60.0, 100.0, 5.0)
        notional = super_senior.notional
        ladder = (0.99, 0.999, 0.9999)
        gaps = {}
        for model in TRIO_MODELS:
            engine = RiskEngine(RiskContext(portfolio=portfolio, tranche=super_senior, model=model, rho=0.4))
            gaps[model.label] = [abs(engine.continuity_gap('N001', p_max=p).gap) / notional for p in ladder]

        self.assertLess(max(gaps['deterministic']), 1e-9)
        regularized = gaps['regularized']
        self.assertTrue(all(b < a for a, b in zip(regularized, regularized[1:])))
        self.assertLess(regularized[-1], 1e-4)
        # The constant cap leaves a gap that does not close as the cap tightens
        unregularized = gaps['unregularized']
        self.assertGreater(unregularized[-1], 1e-5)
        self.assertGreater(unregularized[-1], 0.9 * unregularized[0])
        thresholds = TrioThresholds()
        self.assertFalse(thresholds.gap_converges(unregularized))
        self.assertTrue(thresholds.gap_converges(regularized))
        self.assertTrue(thresholds.gap_converges(gaps['deterministic']))

    def test_vod_curve_shapes(self):
        probabilities = default_probability_grid(0.9999)
        curves = {}
        for model in TRIO_MODELS:
            context = small_context(model, size=125)
            super_senior = super_senior_tranche(context.portfolio, 5.0)
            curve = RiskEngine(context).vod_curve('N001', probabilities, tranche=super_senior)
            curves[model.label] = [point.vod for point in curve]
        notional = super_senior.notional
        self.assertLess(max(abs(value) for value in curves['deterministic']), 1e-9 * notional)
        unregularized = curves['unregularized']
        self.assertLess(unregularized[-1], -1e-6 * notional)
        regularized = curves['regularized']
        self.assertLess(abs(regularized[-1]), abs(unregularized[-1]))
        self.assertLess(min(regularized), regularized[-1])

    def test_vod_curve_spreads_increase(self):
        curve = RiskEngine(small_context(REGULARIZED)).vod_curve('N01', (0.1, 0.5, 0.9))
        spreads = [point.spread for point in curve]
        self.assertEqual(spreads, sorted(spreads))

    def test_invalid_probability_grid(self):
        engine = RiskEngine(small_context(DETERMINISTIC))
        for grid in ((), (0.5, 0.4), (0.0, 0.5), (0.5, 0.99999)):
            with self.subTest(grid=grid):
                with self.assertRaises(DomainError):
                    engine.vod_curve('N01', grid)

    def test_negative_vod_search(self):
        context = small_context(CONSTANT_ONE, size=125)
        super_senior = super_senior_tranche(context.portfolio, 5.0)
        found = RiskEngine(context).negative_vod_search((0.5, 0.9999), tranche=super_senior)
        self.assertTrue(found)
        self.assertEqual(len(found[0]['name_ids']), 125)
        self.assertTrue(all(item['vod'] < 0.0 for item in found))


class RiskReportTestCase(SimpleTestCase):
    """Test cases for the per-tranche risk report"""

    def test_report_on_super_senior(self):
        context = small_context(CONSTANT_ONE, 60.0, 100.0)
        report = RiskEngine(context).report('N05', (0.5, 0.9, 0.99999))
        self.assertEqual(set(report.cs01), set(context.portfolio.ids))
        self.assertEqual(report.cs01['N01'], report.cs01['N20'])
        self.assertEqual([point.probability for point in report.vod_curve], [0.5, 0.9, 0.9999])
        self.assertEqual(report.continuity_gap.p_max, 0.9999)
        self.assertTrue(report.negative_vods)
        self.assertEqual(len(report.negative_vods[0]['name_ids']), 20)
        self.assertIsNone(report.trio_flags)

        payload = report.as_dict()
        self.assertEqual(payload['name_id'], 'N05')
        self.assertEqual(len(payload['vod_curve']), 3)
        self.assertEqual(payload['continuity_gap']['gap'], report.continuity_gap.gap)
        self.assertIsNone(payload['trio_flags'])

    def test_report_carries_trio_flags(self):
        context = small_context(DETERMINISTIC)
        super_senior = super_senior_tranche(context.portfolio, 5.0)
        flags = evaluate_model(context, super_senior, DETERMINISTIC).flags
        report = RiskEngine(context).report('N01', (0.5,), trio_flags=flags)
        self.assertEqual(report.as_dict()['trio_flags'], ('No', 'Yes', 'Yes'))

    def test_report_rejects_all_three_properties(self):
        gap = ContinuityGap(p_max=0.9999, spread=1.0, gap=0.0)
        with self.assertRaises(InvariantViolation):
            RiskReport(name_id='A', cs01={}, vod={}, continuity_gap=gap, vod_curve=(),
                       trio_flags=TrioFlags(True, True, True))


class DefaultWalkTestCase(SimpleTestCase):
    """Test cases for the sequential-default walk"""

    def setUp(self):
        self.portfolio = demo_portfolio(size=20)
        self.super_senior = super_senior_tranche(self.portfolio, 5.0)

    def context(self, model, tranche):
        return RiskContext(portfolio=self.portfolio, tranche=tranche, model=model, rho=0.4)

    def test_stochastic_super_senior_has_negative_vod(self):
        engine = RiskEngine(self.context(CONSTANT_ONE, self.super_senior))
        rng = np.random.default_rng(7)
        for trial in range(5):
            order = [str(name_id) for name_id in rng.permutation(self.portfolio.ids)]
            with self.subTest(trial=trial):
                walk = engine.sequential_default_walk(order)
                self.assertGreater(walk.initial_pv, 1e-9)
                self.assertAlmostEqual(walk.total_vod, -walk.initial_pv, delta=1e-9 * self.super_senior.notional)
                self.assertLess(min(walk.vods), 0.0)

    def test_deterministic_super_senior_walk_is_flat(self):
        walk = RiskEngine(self.context(DETERMINISTIC, self.super_senior)).sequential_default_walk(self.portfolio.ids)
        for step in walk.steps:
            with self.subTest(name=step.name_id):
                self.assertLess(abs(step.vod), 1e-12)

    def test_full_tranche_walk_telescopes(self):
        tranche = Tranche.from_percent(self.portfolio, 0.0, 100.0, 5.0)
        walk = RiskEngine(self.context(REGULARIZED, tranche)).sequential_default_walk(self.portfolio.ids)
        self.assertAlmostEqual(walk.total_vod, 9.6 - walk.initial_pv, delta=1e-9 * tranche.notional)
        self.assertLess(walk.residual, 1e-9 * tranche.notional)

    def test_order_must_be_permutation(self):
        engine = RiskEngine(self.context(DETERMINISTIC, self.super_senior))
        for order in (self.portfolio.ids[:-1], self.portfolio.ids[:-1] + ('N01',)):
            with self.subTest(order=order[-1]):
                with self.assertRaises(PortfolioError):
                    engine.sequential_default_walk(order)


class TrioReportTestCase(SimpleTestCase):
    """Test cases for the risky super senior / positive CS01 / continuity classification"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        context = small_context(DETERMINISTIC, size=125)
        cls.report = trio_report(context, TRIO_MODELS)

    def test_pattern(self):
        self.assertEqual(self.report.pattern(), EXPECTED_PATTERN)
        self.assertEqual(check_trio_report(self.report, EXPECTED_PATTERN), [])

    def test_impossible_trio(self):
        self.assertTrue(self.report.impossible_trio_holds)

    def test_regularized_cs01_turns_negative(self):
        row = self.report.rows[2]
        self.assertEqual(row.model, 'regularized')
        self.assertLess(row.min_cs01, 0.0)

    def test_check_reports_mismatches(self):
        expected = {**EXPECTED_PATTERN, 'deterministic': ('Yes', 'Yes', 'Yes')}
        failures = check_trio_report(self.report, expected)
        self.assertEqual(failures, ['deterministic.risky_super_senior: expected Yes, got No'])

    def test_as_dict(self):
        payload = self.report.as_dict()
        self.assertEqual([row['model'] for row in payload['rows']], list(EXPECTED_PATTERN))
        self.assertTrue(payload['impossible_trio_holds'])
        self.assertEqual(payload['alpha'], 1.0)
        ladder = payload['rows'][1]['gap_ladder_per_notional']
        self.assertEqual(len(ladder), 3)
        self.assertEqual(payload['rows'][1]['max_gap_per_notional'], ladder[-1][1])


class SuperSeniorTrioTestCase(SimpleTestCase):
    """Test cases for the trio classification with the super senior as the configured tranche"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        portfolio = demo_portfolio()
        cls.super_senior = Tranche.from_percent(portfolio, 60.0, 100.0, 5.0)
        context = RiskContext(portfolio=portfolio, tranche=cls.super_senior, model=DETERMINISTIC, rho=0.4)
        cls.report = trio_report(context, TRIO_MODELS)

    def test_pattern(self):
        self.assertEqual(self.report.pattern(), EXPECTED_PATTERN)
        self.assertEqual(check_trio_report(self.report, EXPECTED_PATTERN), [])
        self.assertTrue(self.report.impossible_trio_holds)

    def test_constant_cap_gap_stalls_below_threshold(self):
        row = self.report.rows[1]
        self.assertEqual(row.model, 'unregularized')
        self.assertLess(row.max_gap, TrioThresholds().continuity)
        self.assertEqual(row.stalled_gap_at['name_id'], 'N001')
        self.assertAlmostEqual(row.stalled_gap_at['attach'], self.super_senior.attach, places=9)

    def test_converging_models_have_no_stall(self):
        for row in (self.report.rows[0], self.report.rows[2]):
            with self.subTest(model=row.model):
                self.assertIsNone(row.stalled_gap_at)


class SweepTestCase(SimpleTestCase):
    """Test cases for Celery-dispatched trio sweeps"""

    def test_payload_round_trip(self):
        context = small_context(REGULARIZED, size=4)
        super_senior = super_senior_tranche(context.portfolio, 5.0)
        payload = trio_case_payload(context, super_senior, TRIO_MODELS, 2.0, 0.3, TrioThresholds())
        restored, restored_super_senior, models, thresholds = trio_case_from_payload(payload)
        self.assertEqual(restored.portfolio, context.portfolio)
        self.assertEqual(restored.tranche, context.tranche)
        self.assertEqual(restored.rho, 0.3)
        self.assertEqual(restored_super_senior, super_senior)
        self.assertEqual([model.alpha for model in models[1:]], [2.0, 2.0])
        self.assertEqual(thresholds, TrioThresholds())

    def test_settled_portfolio_round_trip(self):
        portfolio = Portfolio(
            names=(CreditName('B', 0.01, 0.4, 1.0),),
            cumulative_loss=0.6, cumulative_recovered=0.4, original_notional=2.0, defaulted={'A'},
        )
        self.assertEqual(portfolio_from_payload(portfolio_payload(portfolio)), portfolio)

    def test_task_evaluates_case(self):
        context = small_context(DETERMINISTIC, size=4)
        super_senior = super_senior_tranche(context.portfolio, 5.0)
        payload = trio_case_payload(context, super_senior, (DETERMINISTIC,), 1.0, 0.4, TrioThresholds())
        result = evaluate_trio_case(payload)
        self.assertEqual(result['rows'][0]['model'], 'deterministic')
        self.assertEqual(result['rows'][0]['risky_super_senior'], 'No')

    @patch('risk.sweep.evaluate_trio_case')
    def test_sweep_gathers_in_order(self, task):
        reports = iter([
            {'rho': 0.2, 'impossible_trio_holds': True},
            {'rho': 0.4, 'impossible_trio_holds': False},
            {'rho': 0.2, 'impossible_trio_holds': True},
            {'rho': 0.4, 'impossible_trio_holds': True},
        ])
        task.delay.side_effect = lambda payload: MagicMock(get=MagicMock(return_value=next(reports)))
        context = small_context(REGULARIZED, size=4)
        cases, violations = trio_sweep(context, TRIO_MODELS, alphas=(0.5, 2.0), rhos=(0.2, 0.4))
        self.assertEqual(task.delay.call_count, 4)
        self.assertEqual([(case['alpha'], case['rho']) for case in cases], [(0.5, 0.2), (0.5, 0.4), (2.0, 0.2), (2.0, 0.4)])
        self.assertEqual(violations, ['alpha=0.5, rho=0.4'])
        rhos = [call.args[0]['rho'] for call in task.delay.call_args_list]
        self.assertEqual(rhos, [0.2, 0.4, 0.2, 0.4])

    def test_no_model_has_all_three_properties(self):
        context = small_context(DETERMINISTIC, size=125)
        cases, violations = trio_sweep(context, TRIO_MODELS, alphas=(0.5, 2.0), rhos=(0.2, 0.6))
        self.assertEqual(len(cases), 4)
        self.assertEqual(violations, [])
        for case in cases:
            with self.subTest(alpha=case['alpha'], rho=case['rho']):
                self.assertEqual(case['rows'][0]['risky_super_senior'], 'No')
                self.assertEqual(case['rows'][1]['continuous_on_default'], 'No')


class RiskApiTestCase(SimpleTestCase):
    """Test cases for the risk endpoints"""

    def setUp(self):
        self.client = APIClient()
        self.portfolio = [
            {'id': 'A', 'spread_bp': 100, 'recovery': 0.4, 'notional': 1},
            {'id': 'B', 'spread_bp': 300, 'recovery': 0.4, 'notional': 1},
            {'id': 'C', 'spread_bp': 100, 'recovery': 0.4, 'notional': 1},
        ]
        self.base = {
            'portfolio': self.portfolio,
            'tranche': {'attach_pct': 0, 'detach_pct': 100},
            'model': 'unregularized',
            'rho': 0.3,
        }

    def test_cs01(self):
        response = self.client.post('/api/risk/cs01/', self.base, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(set(response.data['cs01']), {'A', 'B', 'C'})
        self.assertEqual(response.data['cs01']['A'], response.data['cs01']['C'])
        self.assertTrue(all(value > 0.0 for value in response.data['cs01'].values()))

    def test_cs01_selected_names(self):
        response = self.client.post('/api/risk/cs01/', {**self.base, 'names': ['B']}, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(list(response.data['vod']), ['B'])

    def test_cs01_unknown_name(self):
        response = self.client.post('/api/risk/cs01/', {**self.base, 'names': ['Z']}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('error', response.data)

    def test_vod_curve(self):
        payload = {**self.base, 'name': 'B', 'probabilities': [0.1, 0.5, 0.9]}
        response = self.client.post('/api/risk/vod-curve/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([point['probability'] for point in response.data['points']], [0.1, 0.5, 0.9])

    def test_vod_curve_rejects_bad_grid(self):
        payload = {**self.base, 'probabilities': [0.9, 0.1]}
        response = self.client.post('/api/risk/vod-curve/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

    def test_trio_report(self):
        payload = {**self.base, 'models': ['deterministic']}
        response = self.client.post('/api/risk/trio-report/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['rows']), 1)
        self.assertEqual(response.data['rows'][0]['risky_super_senior'], 'No')
        self.assertEqual(response.data['failures'], [])

    def test_invalid_p_max(self):
        response = self.client.post('/api/risk/trio-report/', {**self.base, 'p_max': 1.0}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
