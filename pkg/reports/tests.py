import json
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path
from unittest.mock import MagicMock, patch

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from appendix.lab import AppendixReport, Check
from pricing.exceptions import ConfigurationError
from pricing.recovery import RecoveryModel
from risk.trio import TrioFlags

from .config import DEFAULT_PROBABILITY_GRID, load_run_config
from .figures import cmd_figure1, recovery_variance_table, rm_table, vod_curve_table

PORTFOLIO_CSV = 'id,spread_bp,recovery,notional\n' + ''.join(
    f'C{index:02d},{100 + 20 * index},0.4,1\n' for index in range(10)
)


class ReportTestCase(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.portfolio = self.root / 'portfolio.csv'
        self.portfolio.write_text(PORTFOLIO_CSV)
        self.out = self.root / 'out'

    def tearDown(self):
        self.directory.cleanup()

    def write_config(self, text):
        path = self.root / 'run.toml'
        path.write_text(text)
        return path

    def command(self, name, /, **options):
        stdout, stderr = StringIO(), StringIO()
        call_command(name, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue()


class RunConfigTestCase(ReportTestCase):
    """Test cases for run configuration files and flag overrides"""

    def test_defaults(self):
        config = load_run_config()
        self.assertIsNone(config.portfolio_path)
        self.assertIsNone(config.models)
        self.assertEqual((config.tranche.attach_pct, config.tranche.detach_pct), (15.0, 30.0))
        self.assertEqual(config.rho, 0.4)
        self.assertEqual(config.p_max, 0.9999)
        self.assertEqual(config.pricer.factor_nodes, 96)
        self.assertEqual(config.probability_grid, DEFAULT_PROBABILITY_GRID)
        self.assertEqual(len(config.load_portfolio()), 125)

    def test_toml_file(self):
        path = self.write_config(
            'portfolio = "portfolio.csv"\n'
            'rho = 0.3\n'
            'alpha = 2.0\n'
            'models = ["deterministic", "regularized"]\n'
            '[tranche]\nattach_pct = 3\ndetach_pct = 7\n'
            '[pricer]\nfactor_nodes = 64\n'
            '[grids]\nprobabilities = [0.5, 0.1, 0.5]\n'
        )
        config = load_run_config(path)
        self.assertEqual(config.portfolio_path, self.portfolio)
        self.assertEqual(config.rho, 0.3)
        self.assertEqual([model.spec for model in config.models],
                         ['deterministic', 'stochastic:regularized,alpha=2'])
        self.assertEqual(config.tranche.detach_pct, 7.0)
        self.assertEqual(config.pricer.factor_nodes, 64)
        self.assertEqual(config.probability_grid, (0.1, 0.5))
        self.assertEqual(len(config.load_portfolio()), 10)

    def test_recovery_table(self):
        path = self.write_config('[recovery]\nkind = "stochastic"\nrm = "constant:0.8"\nalpha = 0.5\n')
        config = load_run_config(path)
        self.assertEqual([model.spec for model in config.models], ['stochastic:constant:0.8,alpha=0.5'])

    def test_flags_override_file(self):
        path = self.write_config('seed = 3\nmodels = ["deterministic"]\n')
        config = load_run_config(path, models=['unregularized'], seed=8, nodes=48, pmax=0.999, out=str(self.out))
        self.assertEqual(config.models[0].label, 'unregularized')
        self.assertEqual(config.seed, 8)
        self.assertEqual(config.pricer.factor_nodes, 48)
        self.assertEqual(config.p_max, 0.999)
        self.assertEqual(config.out_dir, self.out)

    def test_invalid_configs(self):
        cases = {
            'syntax': 'rho = = 1\n',
            'unknown key': 'colour = "red"\n',
            'rho': 'rho = 1.0\n',
            'p_max': 'p_max = 1.5\n',
            'model': 'models = ["stochastic:nothing"]\n',
            'tranche': '[tranche]\nattach_pct = 30\ndetach_pct = 15\n',
            'nodes': '[pricer]\nfactor_nodes = 8\n',
            'portfolio': 'portfolio = "missing.csv"\n',
        }
        for label, text in cases.items():
            with self.subTest(case=label):
                with self.assertRaises(ConfigurationError):
                    load_run_config(self.write_config(text))

    def test_missing_config_file(self):
        with self.assertRaises(ConfigurationError):
            load_run_config(self.root / 'absent.toml')


class FigureTestCase(ReportTestCase):
    """Test cases for the figure tables"""

    def config(self, **changes):
        return replace(load_run_config(portfolio=str(self.portfolio), out=str(self.out)), **changes)

    def test_recovery_variance_table(self):
        table = recovery_variance_table(self.config(probability_grid=(0.2, 0.5, 0.8, 0.999)))
        self.assertEqual(list(table.columns), ['p', 'var_unregularized', 'var_regularized'])
        rows = table.set_index('p')
        for p in (0.2, 0.5):
            with self.subTest(p=p):
                self.assertEqual(rows.loc[p, 'var_regularized'], rows.loc[p, 'var_unregularized'])
        self.assertLess(rows.loc[0.999, 'var_regularized'], rows.loc[0.8, 'var_regularized'])
        self.assertLess(rows.loc[0.8, 'var_regularized'], rows.loc[0.8, 'var_unregularized'])

    def test_deterministic_variance_is_zero(self):
        config = self.config(models=(RecoveryModel.deterministic(),), probability_grid=(0.1, 0.5, 0.9))
        table = recovery_variance_table(config)
        self.assertEqual(list(table['var_deterministic']), [0.0, 0.0, 0.0])

    def test_rm_table(self):
        table = rm_table(self.config()).set_index('p')
        self.assertEqual(len(table), 101)
        self.assertEqual(table.loc[0.5, 'rm'], 1.0)
        self.assertAlmostEqual(table.loc[0.8, 'rm'], 0.625, places=12)
        self.assertAlmostEqual(table.loc[1.0, 'rm'], 0.4, places=12)

    def test_vod_curve_table(self):
        table = vod_curve_table(self.config(probability_grid=(0.1, 0.5, 0.9)))
        self.assertEqual(list(table.columns), ['spread', 'vod_deterministic', 'vod_unregularized', 'vod_regularized'])
        self.assertEqual(len(table), 4)
        self.assertTrue(table['spread'].is_monotonic_increasing)

    def test_figure1_csv(self):
        path = cmd_figure1(self.config(probability_grid=(0.3, 0.7)))
        self.assertEqual(path, self.out / 'figure1.csv')
        frame = pd.read_csv(path)
        self.assertEqual(list(frame['p']), [0.3, 0.7])


class CommandTestCase(ReportTestCase):
    """Test cases for the management commands and their exit codes"""

    def test_figure4(self):
        self.command('figure4', out=str(self.out))
        frame = pd.read_csv(self.out / 'figure4.csv')
        self.assertEqual(list(frame.columns), ['p', 'rm'])
        self.assertEqual(len(frame), 101)

    def test_price(self):
        output = self.command('price', portfolio=str(self.portfolio), models=['regularized'])
        record = json.loads(output)
        self.assertEqual(set(record), {'model', 'protection_pv', 'premium_pv', 'pv', 'expected_loss'})
        self.assertEqual(record['model'], 'stochastic:regularized,alpha=1')

    def test_price_several_models(self):
        output = self.command('price', portfolio=str(self.portfolio), models=['deterministic', 'unregularized'])
        self.assertEqual([record['model'] for record in json.loads(output)],
                         ['deterministic', 'stochastic:constant:1,alpha=1'])

    def test_cs01(self):
        self.command('cs01', portfolio=str(self.portfolio), out=str(self.out))
        frame = pd.read_csv(self.out / 'cs01.csv')
        self.assertEqual(list(frame['id']), [f'C{index:02d}' for index in range(10)])
        self.assertTrue((frame['cs01'] >= 0.0).all())
        report = json.loads((self.out / 'risk_report.json').read_text())
        self.assertEqual(list(report), ['deterministic'])
        self.assertEqual(report['deterministic']['name_id'], 'C00')
        self.assertAlmostEqual(report['deterministic']['cs01']['C04'], frame.set_index('id').loc['C04', 'cs01'], places=9)
        self.assertEqual(report['deterministic']['vod_curve'][-1]['probability'], 0.9999)
        self.assertIsNone(report['deterministic']['trio_flags'])

    def test_cs01_with_trio_flags(self):
        self.command('cs01', portfolio=str(self.portfolio), out=str(self.out), name='C03', trio=True)
        report = json.loads((self.out / 'risk_report.json').read_text())['deterministic']
        self.assertEqual(report['name_id'], 'C03')
        self.assertEqual(report['trio_flags'], ['No', 'Yes', 'Yes'])
        self.assertEqual(report['negative_vods'], [])

    @patch('risk.management.commands.cs01.evaluate_model')
    def test_cs01_rejects_all_three_properties(self, evaluate):
        evaluate.return_value = MagicMock(flags=TrioFlags(True, True, True))
        with self.assertRaises(CommandError) as context:
            self.command('cs01', portfolio=str(self.portfolio), out=str(self.out), trio=True)
        self.assertEqual(context.exception.returncode, 1)

    def test_vod_curve(self):
        path = self.write_config('[grids]\nprobabilities = [0.2, 0.6]\n')
        self.command('vod_curve', config=str(path), portfolio=str(self.portfolio), out=str(self.out), name='C03')
        frame = pd.read_csv(self.out / 'vod_curve.csv')
        self.assertEqual(list(frame['probability']), [0.2, 0.6, 0.9999])

    def test_trio_report_check(self):
        output = self.command(
            'trio_report', portfolio=str(self.portfolio), models=['deterministic'], check=True, out=str(self.out)
        )
        self.assertIn('All trio checks passed', output)
        report = json.loads((self.out / 'trio_report.json').read_text())
        self.assertEqual(report['rows'][0]['risky_super_senior'], 'No')
        self.assertTrue(report['impossible_trio_holds'])

    @patch('risk.management.commands.trio_report.check_trio_report')
    def test_trio_report_failure_exits_one(self, check):
        check.return_value = ['deterministic.risky_super_senior: expected No, got Yes']
        with self.assertRaises(CommandError) as context:
            self.command('trio_report', portfolio=str(self.portfolio), models=['deterministic'],
                         check=True, out=str(self.out))
        self.assertEqual(context.exception.returncode, 1)

    def test_input_errors_exit_two(self):
        malformed = self.root / 'malformed.csv'
        malformed.write_text('id,spread_bp\nA,100\n')
        cases = [
            ('price', {'portfolio': str(self.root / 'missing.csv')}),
            ('price', {'portfolio': str(malformed)}),
            ('trio_report', {'portfolio': str(malformed)}),
            ('figure4', {'config': str(self.root / 'absent.toml')}),
            ('cs01', {'models': ['stochastic:constant:2']}),
        ]
        for name, options in cases:
            with self.subTest(command=name, options=options):
                with self.assertRaises(CommandError) as context:
                    self.command(name, **options)
                self.assertEqual(context.exception.returncode, 2)

    @patch('appendix.management.commands.appendix_verify.verify_appendix')
    def test_appendix_verify(self, verify):
        verify.return_value = AppendixReport(checks=[Check('lemma2_residual', 0.0, 1e-12, True)])
        self.command('appendix_verify', out=str(self.out))
        report = json.loads((self.out / 'appendix_report.json').read_text())
        self.assertTrue(report['passed'])

        verify.return_value = AppendixReport(checks=[Check('proposition1_minimum', -1.0, -1e-6, False)])
        with self.assertRaises(CommandError) as context:
            self.command('appendix_verify', out=str(self.out))
        self.assertEqual(context.exception.returncode, 1)

    @patch('oracles.management.commands.oracle_check.compare_engines')
    def test_oracle_check(self, compare):
        compare.return_value = [{'attach': 0.0, 'detach': 0.3, 'enumeration_ok': True, 'monte_carlo_ok': True}]
        self.command('oracle_check', portfolio=str(self.portfolio), out=str(self.out), paths=100)
        report = json.loads((self.out / 'oracle_check.json').read_text())
        self.assertEqual(set(report['deterministic']), {'enumeration', 'monte_carlo'})
        self.assertEqual(compare.call_count, 2)
        self.assertIsNone(compare.call_args_list[0].args[5])
        self.assertEqual(compare.call_args_list[1].args[5].paths, 100)

        compare.return_value = [{'attach': 0.0, 'detach': 0.3, 'enumeration_ok': False}]
        with self.assertRaises(CommandError) as context:
            self.command('oracle_check', portfolio=str(self.portfolio), out=str(self.out), paths=100)
        self.assertEqual(context.exception.returncode, 1)
