from oracles.engines import MAX_ENUMERATION_NAMES, McConfig, compare_engines, seeded_portfolio
from pricing.exceptions import InvariantViolation
from reports.command_base import RunConfigCommand

ORACLE_TRANCHES = ((0.0, 3.0), (3.0, 15.0), (15.0, 30.0), (60.0, 100.0))


class Command(RunConfigCommand):
    help = 'Compare the semi-analytic pricer with enumeration and Monte Carlo (oracle_check.json)'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--paths', type=int, help='Monte Carlo paths (default from config)')

    def _compare(self, portfolio, config, model, mc_config, enumeration):
        spec = config.tranche
        tranches = [
            type(spec)(attach, detach, spec.maturity).build(portfolio) for attach, detach in ORACLE_TRANCHES
        ]
        return compare_engines(
            portfolio, tranches, spec.maturity, model, config.rho, mc_config, config.pricer, enumeration
        )

    def run(self, config, /, **options):
        portfolio = config.load_portfolio()
        small = portfolio if len(portfolio.names) <= MAX_ENUMERATION_NAMES else seeded_portfolio(config.seed)
        mc_config = McConfig(paths=options.get('paths') or config.monte_carlo_paths, seed=config.seed)

        report = {}
        failures = []
        for model in config.models_or(('deterministic',)):
            rows = {
                'enumeration': self._compare(small, config, model, None, True),
                'monte_carlo': self._compare(portfolio, config, model, mc_config, False),
            }
            report[model.spec] = rows
            for engine, engine_rows in rows.items():
                for row in engine_rows:
                    if row.get(f'{engine}_ok') is False:
                        failures.append(f'{model.spec} {engine} [{row["attach"]:g}, {row["detach"]:g}]')
        self.write_json(report, config.output_path('oracle_check.json'))
        if failures:
            raise InvariantViolation('engines disagree', failures)
        self.stdout.write(self.style.SUCCESS('All engines agree'))
