"""
Parameter sweeps of the trio classification, dispatched as Celery tasks.
"""
import logging
from dataclasses import replace

from .payloads import trio_case_payload
from .tasks import evaluate_trio_case
from .trio import TrioThresholds, super_senior_tranche

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_ALPHAS = (0.5, 1.0, 2.0)
DEFAULT_SWEEP_RHOS = (0.2, 0.4, 0.6)


def trio_sweep(context, models, alphas=DEFAULT_SWEEP_ALPHAS, rhos=DEFAULT_SWEEP_RHOS,
               super_senior=None, thresholds=None):
    """
    Trio reports for every (alpha, rho) pair, gathered in submission order.

    Returns (cases, violations) where violations lists the cases in which
    some model showed all three properties.
    """
    super_senior = super_senior or super_senior_tranche(context.portfolio, context.tranche.maturity)
    thresholds = thresholds or TrioThresholds.from_settings()
    pending = []
    for alpha in alphas:
        for rho in rhos:
            payload = trio_case_payload(
                replace(context, rho=rho), super_senior, models, alpha, rho, thresholds
            )
            pending.append((alpha, rho, evaluate_trio_case.delay(payload)))
    cases = []
    violations = []
    for alpha, rho, result in pending:
        report = result.get()
        report['alpha'] = alpha
        cases.append(report)
        if not report['impossible_trio_holds']:
            violations.append(f'alpha={alpha:g}, rho={rho:g}')
    logger.info(f'Trio sweep over {len(cases)} cases, {len(violations)} violations')
    return cases, violations
