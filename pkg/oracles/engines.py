"""
Slow reference engines for expected tranche loss: Monte Carlo simulation of
the full copula and recovery model, and exact enumeration of every default
pattern for small portfolios.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from pricing.conf import tranche_risk_setting
from pricing.copula import conditional_default_prob
from pricing.exceptions import DomainError, PortfolioError
from pricing.market import BASIS_POINT, CreditName, Portfolio, name_default_probability
from pricing.numerics import norm_inv
from pricing.pricer import LossGrid, PricerConfig, expected_tranche_loss
from pricing.recovery import calibrate_model, conditional_recovery

logger = logging.getLogger(__name__)

MAX_ENUMERATION_NAMES = 12


@dataclass(frozen=True)
class McConfig:
    paths: int
    seed: int = 0
    batch_size: int = None

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise DomainError(f'paths must be a positive integer, got {self.paths!r}')
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError('seed must be an unsigned 64-bit integer')
        if self.batch_size is None:
            object.__setattr__(self, 'batch_size', tranche_risk_setting('MC_BATCH_SIZE', 10_000))
        if self.batch_size < 1:
            raise DomainError('batch_size must be positive')


def seeded_portfolio(seed=0, size=8):
    """
    Random heterogeneous portfolio: spreads 50 to 500bp, recoveries 0.2 to
    0.6, notionals 0.5 to 1.5.
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    spreads = rng.uniform(50.0, 500.0, size) * BASIS_POINT
    recoveries = rng.uniform(0.2, 0.6, size)
    notionals = rng.uniform(0.5, 1.5, size)
    return Portfolio.from_names(
        CreditName(id=f'R{i + 1:03d}', spread=float(s), market_recovery=float(r), notional=float(n))
        for i, (s, r, n) in enumerate(zip(spreads, recoveries, notionals))
    )


def _calibrations(portfolio, t, model, rho, grid):
    """(name, p, calibration) per live name."""
    calibrated = []
    for name in portfolio.names:
        p = name_default_probability(name, t)
        calibrated.append((name, p, calibrate_model(model, p, name.market_recovery, rho, grid)))
    return calibrated


def mc_tranche_loss(portfolio, tranche, t, model, rho, mc_config, config=None):
    """
    Monte Carlo estimate of expected tranche loss and its standard error.

    Paths are simulated in fixed-size batches, each with its own spawned
    substream, so the estimate depends only on the seed and path count.
    """
    config = config or PricerConfig.from_settings()
    calibrated = _calibrations(portfolio, t, model, rho, config.grid)
    thresholds = np.array([norm_inv(p) if p > 0.0 else -math.inf for _, p, _ in calibrated])
    notionals = np.array([name.notional for name, _, _ in calibrated])
    sqrt_rho, sqrt_idio = math.sqrt(rho), math.sqrt(1.0 - rho)

    batches = math.ceil(mc_config.paths / mc_config.batch_size)
    streams = np.random.SeedSequence(int(mc_config.seed)).spawn(batches)
    sums, squares = [], []
    remaining = mc_config.paths
    for stream in streams:
        size = min(mc_config.batch_size, remaining)
        remaining -= size
        rng = np.random.default_rng(stream)
        z = rng.standard_normal(size)
        idiosyncratic = rng.standard_normal((size, len(calibrated)))
        defaulted = sqrt_rho * z[:, None] + sqrt_idio * idiosyncratic < thresholds[None, :]
        loss = np.full(size, portfolio.cumulative_loss)
        for i, (_, _, cal) in enumerate(calibrated):
            if not defaulted[:, i].any():
                continue
            recovery = conditional_recovery(cal, model.alpha, z)
            loss += np.where(defaulted[:, i], (1.0 - recovery) * notionals[i], 0.0)
        payoff = tranche.loss(loss)
        sums.append(math.fsum(payoff))
        squares.append(math.fsum(payoff * payoff))

    paths = mc_config.paths
    mean = math.fsum(sums) / paths
    if paths < 2:
        return mean, 0.0
    variance = max(0.0, (math.fsum(squares) - paths * mean * mean) / (paths - 1))
    return mean, math.sqrt(variance / paths)


def enumerate_tranche_loss(portfolio, tranche, t, model, rho, grid):
    """
    Exact expected tranche loss over all 2**N default patterns at every
    factor node; no loss grid is involved.
    """
    count = len(portfolio.names)
    if count > MAX_ENUMERATION_NAMES:
        raise PortfolioError(f'enumeration supports at most {MAX_ENUMERATION_NAMES} names, got {count}')
    patterns = ((np.arange(2 ** count)[:, None] >> np.arange(count)[None, :]) & 1).astype(bool)
    probabilities = np.ones((grid.nodes.size, patterns.shape[0]))
    losses = np.full((grid.nodes.size, patterns.shape[0]), portfolio.cumulative_loss)
    for i, (name, p, cal) in enumerate(_calibrations(portfolio, t, model, rho, grid)):
        if p == 0.0:
            probabilities *= np.where(patterns[:, i], 0.0, 1.0)[None, :]
            continue
        default_prob = conditional_default_prob(p, rho, grid.nodes)[:, None]
        probabilities *= np.where(patterns[:, i][None, :], default_prob, 1.0 - default_prob)
        lgd = (1.0 - conditional_recovery(cal, model.alpha, grid.nodes)) * name.notional
        losses += np.where(patterns[:, i][None, :], lgd[:, None], 0.0)
    conditional = np.einsum('ij,ij->i', probabilities, tranche.loss(losses))
    return float(grid.expectation(conditional))


def compare_engines(portfolio, tranches, t, model, rho, mc_config, config=None, enumeration=True):
    """
    Semi-analytic, enumeration and Monte Carlo expected losses per tranche.

    Enumeration must agree within one loss grid unit and Monte Carlo within
    three standard errors.
    """
    config = config or PricerConfig.from_settings()
    unit = LossGrid.for_portfolio(portfolio, config).unit
    enumerable = enumeration and len(portfolio.names) <= MAX_ENUMERATION_NAMES
    rows = []
    for tranche in tranches:
        semi_analytic = expected_tranche_loss(portfolio, tranche, t, model, rho, config)
        row = {
            'attach': tranche.attach,
            'detach': tranche.detach,
            'semi_analytic': semi_analytic,
            'grid_unit': unit,
        }
        if enumerable:
            exact = enumerate_tranche_loss(portfolio, tranche, t, model, rho, config.grid)
            row['enumeration'] = exact
            row['enumeration_diff'] = semi_analytic - exact
            row['enumeration_ok'] = abs(semi_analytic - exact) <= unit
        if mc_config is not None:
            estimate, error = mc_tranche_loss(portfolio, tranche, t, model, rho, mc_config, config)
            row['monte_carlo'] = estimate
            row['monte_carlo_se'] = error
            row['monte_carlo_diff'] = semi_analytic - estimate
            row['monte_carlo_ok'] = abs(semi_analytic - estimate) <= 3.0 * error
        rows.append(row)
        logger.info(f'Compared engines on [{tranche.attach:g}, {tranche.detach:g}]')
    return rows
