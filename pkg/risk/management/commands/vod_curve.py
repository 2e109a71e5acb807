import pandas as pd

from reports.command_base import RunConfigCommand
from reports.figures import write_csv
from risk.engine import RiskEngine


class Command(RunConfigCommand):
    help = 'Emit the VOD curve of one name as its default probability rises (vod_curve.csv)'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--name', help='Name id; the first name of the portfolio if omitted')

    def run(self, config, /, **options):
        portfolio = config.load_portfolio()
        name_id = options.get('name') or portfolio.names[0].id
        probabilities = [p for p in config.probability_grid if 0.0 < p < config.p_max] + [config.p_max]
        rows = []
        for model in config.models_or(('deterministic',)):
            engine = RiskEngine(config.context(portfolio, model))
            for point in engine.vod_curve(name_id, probabilities):
                rows.append({
                    'model': model.spec,
                    'probability': point.probability,
                    'spread': point.spread,
                    'vod': point.vod,
                })
        path = write_csv(pd.DataFrame(rows), config.output_path('vod_curve.csv'))
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
