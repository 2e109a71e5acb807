import logging

from celery import shared_task

from .payloads import trio_case_from_payload
from .trio import trio_report

logger = logging.getLogger(__name__)


@shared_task
def evaluate_trio_case(payload):
    """
    Evaluate the trio classification for one (alpha, rho) case
    """
    context, super_senior, models, thresholds = trio_case_from_payload(payload)
    report = trio_report(context, models, super_senior=super_senior, thresholds=thresholds)
    logger.info(f"Trio case rho={context.rho} done: {report.pattern()}")
    return report.as_dict()
