from appendix.lab import verify_appendix
from pricing.exceptions import InvariantViolation
from reports.command_base import RunConfigCommand


class Command(RunConfigCommand):
    help = 'Verify value-on-default positivity, its alpha limit and the supporting lemmas (appendix_report.json)'

    def run(self, config, /, **options):
        report = verify_appendix(config.pricer.grid, seed=config.seed)
        for check in report.checks:
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(style(f'  {"✓" if check.passed else "✗"} {check.name}: {check.value:.3e}'))
        self.write_json(report.as_dict(), config.output_path('appendix_report.json'))
        if not report.passed:
            raise InvariantViolation('appendix verification failed', report.failures)
