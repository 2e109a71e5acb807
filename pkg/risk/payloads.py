"""
JSON payloads for shipping risk contexts to Celery workers.
"""
from dataclasses import asdict

from pricing.market import CreditName, Portfolio, Tranche
from pricing.pricer import PricerConfig
from pricing.recovery import parse_model_spec

from .engine import RiskContext
from .trio import TrioThresholds


def portfolio_payload(portfolio):
    """JSON-safe portfolio for the Celery broker."""
    return {
        'names': [[n.id, n.spread, n.market_recovery, n.notional] for n in portfolio.names],
        'cumulative_loss': portfolio.cumulative_loss,
        'cumulative_recovered': portfolio.cumulative_recovered,
        'original_notional': portfolio.original_notional,
        'defaulted': sorted(portfolio.defaulted),
    }


def portfolio_from_payload(payload):
    return Portfolio(
        names=tuple(
            CreditName(id=name_id, spread=spread, market_recovery=recovery, notional=notional)
            for name_id, spread, recovery, notional in payload['names']
        ),
        cumulative_loss=payload['cumulative_loss'],
        cumulative_recovered=payload['cumulative_recovered'],
        original_notional=payload['original_notional'],
        defaulted=frozenset(payload['defaulted']),
    )


def trio_case_payload(context, super_senior, models, alpha, rho, thresholds):
    return {
        'portfolio': portfolio_payload(context.portfolio),
        'tranche': asdict(context.tranche),
        'super_senior': asdict(super_senior),
        'models': [model.with_alpha(alpha).spec for model in models],
        'rho': rho,
        'p_max': context.p_max,
        'config': asdict(context.config),
        'thresholds': asdict(thresholds),
    }


def trio_case_from_payload(payload):
    context = RiskContext(
        portfolio=portfolio_from_payload(payload['portfolio']),
        tranche=Tranche(**payload['tranche']),
        model=parse_model_spec('deterministic'),
        rho=payload['rho'],
        config=PricerConfig(**payload['config']),
        p_max=payload['p_max'],
    )
    models = [parse_model_spec(spec) for spec in payload['models']]
    return context, Tranche(**payload['super_senior']), models, TrioThresholds(**payload['thresholds'])
