"""
Semi-analytic tranche pricing.

Conditional on the common factor z, names default independently and each
defaulted name's recovery is a deterministic function of z, so the
conditional portfolio loss is a sum of independent two-point variables.
Its distribution is built by adding one name at a time on a loss grid,
then integrated over z with the factor grid.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .conf import tranche_risk_setting
from .copula import conditional_default_prob
from .exceptions import ConfigurationError, DomainError
from .market import Portfolio, name_default_probability
from .numerics import factor_grid
from .recovery import calibrate_model, conditional_recovery

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PricerConfig:
    factor_nodes: int = 96
    loss_buckets_per_name: int = 8
    discount_rate: float = 0.0
    premium_frequency: int = 4

    def __post_init__(self):
        if int(self.factor_nodes) != self.factor_nodes or self.factor_nodes < 32:
            raise ConfigurationError(f'factor_nodes must be an integer >= 32, got {self.factor_nodes!r}')
        if int(self.loss_buckets_per_name) != self.loss_buckets_per_name or self.loss_buckets_per_name < 1:
            raise ConfigurationError(
                f'loss_buckets_per_name must be a positive integer, got {self.loss_buckets_per_name!r}'
            )
        if int(self.premium_frequency) != self.premium_frequency or self.premium_frequency < 1:
            raise ConfigurationError(f'premium_frequency must be a positive integer, got {self.premium_frequency!r}')
        if not math.isfinite(self.discount_rate):
            raise ConfigurationError('discount_rate must be finite')

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from settings.TRANCHE_RISK, with explicit overrides."""
        values = {
            'factor_nodes': tranche_risk_setting('FACTOR_NODES', cls.factor_nodes),
            'loss_buckets_per_name': tranche_risk_setting('LOSS_BUCKETS_PER_NAME', cls.loss_buckets_per_name),
            'discount_rate': tranche_risk_setting('DISCOUNT_RATE', cls.discount_rate),
            'premium_frequency': tranche_risk_setting('PREMIUM_FREQUENCY', cls.premium_frequency),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def grid(self):
        return factor_grid(self.factor_nodes)

    def discount_factors(self, dates):
        return np.exp(-self.discount_rate * np.asarray(dates, dtype=float))


@dataclass(frozen=True)
class LossGrid:
    """
    Loss buckets shared by every settlement state of one portfolio.

    The unit and bucket count depend only on the original notional and the
    original number of names, so pre- and post-default states price on
    identical grids.
    """
    unit: float
    size: int

    @classmethod
    def for_portfolio(cls, portfolio, config):
        names = max(portfolio.size, 1)
        buckets = config.loss_buckets_per_name
        return cls(unit=portfolio.original_notional / (names * buckets), size=names * (buckets + 1) + 1)

    @property
    def levels(self):
        return self.unit * np.arange(self.size)


@dataclass(frozen=True, eq=False)
class LossDistribution:
    grid_unit: float
    probabilities: np.ndarray
    max_loss: float = None

    def __post_init__(self):
        probabilities = np.array(self.probabilities, dtype=float)
        if np.any(probabilities < -1e-15):
            raise DomainError('loss probabilities must be nonnegative')
        if abs(probabilities.sum() - 1.0) > 1e-10:
            raise DomainError(f'loss probabilities sum to {probabilities.sum()!r}')
        probabilities.setflags(write=False)
        object.__setattr__(self, 'probabilities', probabilities)

    @property
    def mean(self):
        return self.grid_unit * float(np.dot(np.arange(self.probabilities.size), self.probabilities))


@dataclass(frozen=True)
class TrancheState:
    """Effective strikes and notional of a tranche after past settlements."""
    attach: float
    detach: float
    cumulative_loss: float
    cumulative_recovered: float
    original_notional: float

    @classmethod
    def of(cls, tranche, portfolio):
        return cls(
            attach=tranche.attach,
            detach=tranche.detach,
            cumulative_loss=portfolio.cumulative_loss,
            cumulative_recovered=portfolio.cumulative_recovered,
            original_notional=portfolio.original_notional,
        )

    @property
    def subordination(self):
        return max(0.0, self.attach - self.cumulative_loss)

    @property
    def effective_detach(self):
        return max(0.0, min(self.detach, self.original_notional - self.cumulative_recovered) - self.cumulative_loss)

    @property
    def notional(self):
        top = min(self.detach, self.original_notional - self.cumulative_recovered)
        return max(0.0, top - max(self.attach, self.cumulative_loss))


@dataclass(frozen=True)
class TranchePricing:
    protection_pv: float
    premium_pv: float
    pv: float
    expected_loss: float

    def as_dict(self):
        return {
            'protection_pv': self.protection_pv,
            'premium_pv': self.premium_pv,
            'pv': self.pv,
            'expected_loss': self.expected_loss,
        }


def payment_schedule(maturity, frequency):
    """Period-end dates of equal periods, the last one ending at maturity."""
    periods = max(1, math.ceil(maturity * frequency - 1e-9))
    dates = np.arange(1, periods + 1, dtype=float) / frequency
    dates[-1] = maturity
    return dates


def pricing_dates(tranche, config, maturity=None):
    """Dates whose loss distributions a tranche price needs."""
    maturity = tranche.maturity if maturity is None else maturity
    if config.discount_rate == 0.0 and not coupon_bearing(tranche):
        return (float(maturity),)
    return tuple(float(t) for t in payment_schedule(maturity, config.premium_frequency))


def coupon_bearing(tranche):
    return not tranche.zero_coupon and tranche.coupon > 0.0


def _shift_rows(matrix, shifts):
    """Shift each row right by its own number of buckets, filling with zeros."""
    columns = np.arange(matrix.shape[1])[None, :] - shifts[:, None]
    shifted = np.take_along_axis(matrix, np.clip(columns, 0, None), axis=1)
    shifted[columns < 0] = 0.0
    return shifted


def _add_name(matrix, default_prob, units):
    """Convolve one name into each row, splitting its loss between adjacent buckets."""
    lower = np.floor(units).astype(np.intp)
    upper_weight = units - lower
    result = matrix * (1.0 - default_prob)[:, None]
    result += (default_prob * (1.0 - upper_weight))[:, None] * _shift_rows(matrix, lower)
    has_upper = upper_weight > 0.0
    if np.any(has_upper):
        result += (default_prob * upper_weight)[:, None] * _shift_rows(matrix, lower + 1)
    return result


class ConditionalLosses:
    """
    Conditional distributions of new loss and new recovered amount for a set
    of live names, one row per (date, factor node).
    """

    def __init__(self, layout, dates, model, rho, config, nodes=None, with_recovered=False):
        self.layout = layout
        self.dates = tuple(dates)
        self.model = model
        self.rho = rho
        self.config = config
        self.grid = config.grid
        self.nodes = self.grid.nodes if nodes is None else np.atleast_1d(np.asarray(nodes, dtype=float))
        self.with_recovered = with_recovered
        rows = len(self.dates) * self.nodes.size
        self.loss = np.zeros((rows, layout.size))
        self.loss[:, 0] = 1.0
        self.loss_cap = np.zeros(rows)
        if with_recovered:
            self.recovered = self.loss.copy()
            self.recovered_cap = np.zeros(rows)
        self._rows = {}

    def copy(self):
        clone = object.__new__(ConditionalLosses)
        clone.__dict__.update(self.__dict__)
        clone.loss = self.loss.copy()
        clone.loss_cap = self.loss_cap.copy()
        if self.with_recovered:
            clone.recovered = self.recovered.copy()
            clone.recovered_cap = self.recovered_cap.copy()
        clone._rows = self._rows
        return clone

    def name_rows(self, name):
        """Default probability and recovery of one name on every row."""
        key = (name.spread, name.market_recovery)
        if key not in self._rows:
            shape = (len(self.dates), self.nodes.size)
            default_prob = np.zeros(shape)
            recovery = np.full(shape, name.market_recovery)
            for k, t in enumerate(self.dates):
                p = name_default_probability(name, t)
                if p == 0.0:
                    continue
                default_prob[k] = conditional_default_prob(p, self.rho, self.nodes)
                cal = calibrate_model(self.model, p, name.market_recovery, self.rho, self.grid)
                recovery[k] = conditional_recovery(cal, self.model.alpha, self.nodes)
            self._rows[key] = (default_prob.ravel(), recovery.ravel())
        return self._rows[key]

    def add(self, names):
        """New distributions with the given names convolved in, in order."""
        result = self.copy()
        for name in names:
            default_prob, recovery = result.name_rows(name)
            if not np.any(default_prob > 0.0):
                continue
            lgd = (1.0 - recovery) * name.notional
            result.loss = _add_name(result.loss, default_prob, lgd / self.layout.unit)
            result.loss_cap = result.loss_cap + lgd
            if self.with_recovered:
                amount = recovery * name.notional
                result.recovered = _add_name(result.recovered, default_prob, amount / self.layout.unit)
                result.recovered_cap = result.recovered_cap + amount
        return result

    def _expectation(self, matrix, payoffs):
        values = np.einsum('ij,ij->i', matrix, payoffs)
        return values.reshape(len(self.dates), self.nodes.size) @ self.grid.weights

    def expected_tranche_losses(self, tranche, cumulative_loss):
        """E[T(L0 + L_t)] per date, losses capped at the conditional maximum."""
        levels = np.minimum(self.layout.levels[None, :], self.loss_cap[:, None])
        return self._expectation(self.loss, tranche.loss(cumulative_loss + levels))

    def expected_tranche_tops(self, tranche, cumulative_recovered, original_notional):
        """E[T(orig - Rec0 - Rec_t)] per date."""
        levels = np.minimum(self.layout.levels[None, :], self.recovered_cap[:, None])
        return self._expectation(
            self.recovered, tranche.loss(original_notional - cumulative_recovered - levels)
        )

    def price(self, tranche, cumulative_loss, cumulative_recovered, original_notional):
        expected_losses = self.expected_tranche_losses(tranche, cumulative_loss)
        dates = np.asarray(self.dates)
        discount = self.config.discount_factors(dates)
        crystallized = tranche.loss(cumulative_loss)
        increments = np.diff(np.concatenate(([crystallized], expected_losses)))
        protection = math.fsum(discount * increments)
        premium = 0.0
        if coupon_bearing(tranche):
            if not self.with_recovered:
                raise ConfigurationError('premium legs need recovered-amount distributions')
            outstanding = self.expected_tranche_tops(
                tranche, cumulative_recovered, original_notional
            ) - expected_losses
            accruals = np.diff(np.concatenate(([0.0], dates)))
            premium = tranche.coupon * math.fsum(accruals * discount * outstanding)
        return TranchePricing(
            protection_pv=protection,
            premium_pv=premium,
            pv=protection - premium,
            expected_loss=float(expected_losses[-1]),
        )


def conditional_losses(portfolio, tranche, model, rho, config, maturity=None):
    """Distributions for every live name of the portfolio, in portfolio order."""
    dates = pricing_dates(tranche, config, maturity)
    empty = ConditionalLosses(
        LossGrid.for_portfolio(portfolio, config), dates, model, rho, config,
        with_recovered=coupon_bearing(tranche),
    )
    return empty.add(portfolio.names)


def conditional_loss_distribution(portfolio, t, model, rho, z, config=None):
    """Distribution of new portfolio loss by time t given the factor value z."""
    config = config or PricerConfig.from_settings()
    layout = LossGrid.for_portfolio(portfolio, config)
    losses = ConditionalLosses(layout, (t,), model, rho, config, nodes=[z]).add(portfolio.names)
    return LossDistribution(
        grid_unit=layout.unit,
        probabilities=losses.loss[0],
        max_loss=float(losses.loss_cap[0]),
    )


def expected_tranche_loss(portfolio, tranche, t, model, rho, config=None):
    """Expected tranche loss by time t, including crystallized protection."""
    config = config or PricerConfig.from_settings()
    tranche.validate_against(portfolio)
    layout = LossGrid.for_portfolio(portfolio, config)
    losses = ConditionalLosses(layout, (t,), model, rho, config).add(portfolio.names)
    return float(losses.expected_tranche_losses(tranche, portfolio.cumulative_loss)[0])


def price_tranche(portfolio, tranche, t_maturity, model, rho, config=None):
    """
    Protection and premium legs of a tranche on the portfolio's current
    state, with past settlements already reflected in its strikes.
    """
    config = config or PricerConfig.from_settings()
    tranche.validate_against(portfolio)

    # Distributions of new losses from the live names only
    losses = conditional_losses(portfolio, tranche, model, rho, config, maturity=t_maturity)
    return losses.price(
        tranche, portfolio.cumulative_loss, portfolio.cumulative_recovered, portfolio.original_notional
    )


def tranche_pv(portfolio, tranche, t_maturity, model, rho, config=None):
    """Long-protection PV: protection leg minus premium leg."""
    return price_tranche(portfolio, tranche, t_maturity, model, rho, config).pv


def settle_default(portfolio, tranche, name_id, realized_recovery):
    """
    Remove a defaulted name, crystallizing its loss and recovered amount.

    Returns the post-settlement portfolio, the tranche's effective state and
    the protection payment the tranche makes on this default.
    """
    if not 0.0 <= realized_recovery < 1.0:
        raise DomainError(f'realized recovery must lie in [0, 1), got {realized_recovery!r}')
    index = portfolio.index_of(name_id)
    name = portfolio.names[index]
    settled = Portfolio(
        names=portfolio.names[:index] + portfolio.names[index + 1:],
        cumulative_loss=portfolio.cumulative_loss + (1.0 - realized_recovery) * name.notional,
        cumulative_recovered=portfolio.cumulative_recovered + realized_recovery * name.notional,
        original_notional=portfolio.original_notional,
        defaulted=portfolio.defaulted | {name_id},
    )
    payment = tranche.loss(settled.cumulative_loss) - tranche.loss(portfolio.cumulative_loss)
    logger.debug(f'Settled {name_id} at recovery {realized_recovery:.4f}: payment {payment:.6g}')
    return settled, TrancheState.of(tranche, settled), payment


def pv_after_default(portfolio, tranche, name_id, model, rho, config=None, realized_recovery=None):
    """
    Protection payment on an immediate default plus the PV of the
    post-settlement tranche. Never depends on the defaulted name's spread.
    """
    name = portfolio.name(name_id)
    recovery = name.market_recovery if realized_recovery is None else realized_recovery
    settled, _, payment = settle_default(portfolio, tranche, name_id, recovery)
    return payment + tranche_pv(settled, tranche, tranche.maturity, model, rho, config)
