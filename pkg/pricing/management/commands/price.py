from pricing.pricer import price_tranche
from reports.command_base import RunConfigCommand


class Command(RunConfigCommand):
    help = 'Price the configured tranche and print {protection_pv, premium_pv, pv, expected_loss} as JSON'

    def run(self, config, /, **options):
        portfolio = config.load_portfolio()
        tranche = config.tranche.build(portfolio)
        records = []
        for model in config.models_or(('deterministic',)):
            pricing = price_tranche(portfolio, tranche, tranche.maturity, model, config.rho, config.pricer)
            records.append({'model': model.spec, **pricing.as_dict()})
        self.write_json(records[0] if len(records) == 1 else records)
