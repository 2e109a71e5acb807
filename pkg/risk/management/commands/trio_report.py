from pricing.exceptions import InvariantViolation
from reports.command_base import RunConfigCommand
from risk.sweep import DEFAULT_SWEEP_ALPHAS, DEFAULT_SWEEP_RHOS, trio_sweep
from risk.trio import EXPECTED_PATTERN, check_trio_report, trio_report

TRIO_MODELS = ('deterministic', 'unregularized', 'regularized')


class Command(RunConfigCommand):
    help = 'Classify recovery models by risky super senior, positive CS01 and continuity on default'
    check_flag = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--sweep',
            action='store_true',
            help='Also check that no model has all three properties over an alpha x rho sweep',
        )

    def run(self, config, /, **options):
        portfolio = config.load_portfolio()
        models = config.models_or(TRIO_MODELS)
        context = config.context(portfolio, models[0])
        super_senior = config.super_senior_tranche(portfolio)
        report = trio_report(context, models, super_senior=super_senior)

        self.stdout.write(f'{"model":<16}{"risky SS":>10}{"CS01 > 0":>10}{"continuous":>12}')
        for model, flags in report.pattern().items():
            self.stdout.write(f'{model:<16}{flags[0]:>10}{flags[1]:>10}{flags[2]:>12}')

        payload = report.as_dict()
        failures = check_trio_report(report, EXPECTED_PATTERN if options.get('check') else None)
        if options.get('sweep'):
            cases, violations = trio_sweep(
                context, models, DEFAULT_SWEEP_ALPHAS, DEFAULT_SWEEP_RHOS, super_senior=super_senior
            )
            payload['sweep'] = cases
            failures.extend(f'impossible_trio at {case}' for case in violations)
        self.write_json(payload, config.output_path('trio_report.json'))

        if options.get('check') and failures:
            raise InvariantViolation('trio report check failed', failures)
        if options.get('check'):
            self.stdout.write(self.style.SUCCESS('All trio checks passed'))
