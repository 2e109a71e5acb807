import pandas as pd

from reports.command_base import RunConfigCommand
from reports.figures import write_csv
from risk.engine import RiskEngine, distinct_names
from risk.trio import evaluate_model


class Command(RunConfigCommand):
    help = 'Emit per-name CreditSpread01 and VOD of the configured tranche (cs01.csv, risk_report.json)'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--name', help='Name id of the VOD curve and continuity gap; the first name if omitted')
        parser.add_argument('--trio', action='store_true', help='Also classify each model by the three trio flags')

    def run(self, config, /, **options):
        portfolio = config.load_portfolio()
        name_id = options.get('name') or portfolio.names[0].id
        super_senior = config.super_senior_tranche(portfolio) if options.get('trio') else None
        rows = []
        reports = {}
        for model in config.models_or(('deterministic',)):
            context = config.context(portfolio, model)
            engine = RiskEngine(context)
            flags = evaluate_model(context, super_senior, model).flags if super_senior else None
            report = engine.report(name_id, config.probability_grid, trio_flags=flags)
            reports[model.spec] = report.as_dict()

            for name, ids in distinct_names(portfolio):
                # Recovery01 is undefined when the bumped recovery reaches 1
                recovery01 = engine.recovery01(name.id) if name.market_recovery + 0.01 < 1.0 else float('nan')
                for member in ids:
                    rows.append({
                        'model': model.spec,
                        'id': member,
                        'spread_bp': name.spread * 1e4,
                        'cs01': report.cs01[member],
                        'vod': report.vod[member],
                        'recovery01': recovery01,
                    })
        path = write_csv(pd.DataFrame(rows), config.output_path('cs01.csv'))
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
        self.write_json(reports, config.output_path('risk_report.json'))
