"""
CSV emitters for the recovery-variance, VOD-curve and regularized-cap
figures. Output is deterministic given the run configuration.
"""
import logging

import pandas as pd

from pricing.recovery import recovery_variance_given_default, rm_regularized
from risk.engine import RiskEngine

logger = logging.getLogger(__name__)

FIGURE1_MODELS = ('unregularized', 'regularized')
FIGURE2_MODELS = ('deterministic', 'unregularized', 'regularized')
FIGURE4_PROBABILITIES = tuple(round(0.01 * k, 2) for k in range(0, 101))
FLOAT_FORMAT = '%.12g'


def write_csv(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f'Wrote {len(frame)} rows to {path}')
    return path


def recovery_variance_table(config):
    """Variance of recovery given default against default probability."""
    models = config.models_or(FIGURE1_MODELS)
    probabilities = [p for p in config.probability_grid if 0.0 < p < 1.0]
    grid = config.pricer.grid
    columns = {'p': probabilities}
    for model in models:
        columns[f'var_{model.label}'] = [
            recovery_variance_given_default(p, config.figure_recovery, model, config.rho, grid)
            for p in probabilities
        ]
    return pd.DataFrame(columns)


def vod_curve_table(config):
    """VOD of the first name on the configured tranche, one column per model."""
    portfolio = config.load_portfolio()
    models = config.models_or(FIGURE2_MODELS)
    name_id = portfolio.names[0].id
    probabilities = [p for p in config.probability_grid if 0.0 < p < config.p_max] + [config.p_max]
    columns = {}
    for model in models:
        curve = RiskEngine(config.context(portfolio, model)).vod_curve(name_id, probabilities)
        columns.setdefault('spread', [point.spread for point in curve])
        columns[f'vod_{model.label}'] = [point.vod for point in curve]
    return pd.DataFrame(columns)


def rm_table(config):
    """The regularized recovery cap sampled on [0, 1]."""
    return pd.DataFrame({
        'p': FIGURE4_PROBABILITIES,
        'rm': [rm_regularized(p, config.figure_recovery) for p in FIGURE4_PROBABILITIES],
    })


def cmd_figure1(config):
    return write_csv(recovery_variance_table(config), config.output_path('figure1.csv'))


def cmd_figure2(config):
    return write_csv(vod_curve_table(config), config.output_path('figure2.csv'))


def cmd_figure4(config):
    return write_csv(rm_table(config), config.output_path('figure4.csv'))
