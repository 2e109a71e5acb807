"""
Recovery models: deterministic recovery, stochastic recovery
R(z) = R_m * Phi(alpha * z + beta) with a constant cap R_m, and the
variance-regularized cap R_m(p) that collapses to the market recovery as
default becomes certain.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from django.db import models

from .copula import conditional_default_prob
from .exceptions import ConfigurationError, DomainError, InfeasibleCalibrationError, NoBracketError
from .numerics import find_root, norm_cdf

logger = logging.getLogger(__name__)

SENTINEL_TOLERANCE = 1e-12
SATURATION_TOLERANCE = 1e-9
CALIBRATION_TOLERANCE = 1e-14
BETA_BRACKET = (-40.0, 40.0)
MAX_BRACKET_EXPANSIONS = 6


class RecoveryKind(models.TextChoices):
    DETERMINISTIC = 'deterministic', 'Deterministic'
    STOCHASTIC = 'stochastic', 'Stochastic'


class RmRuleKind(models.TextChoices):
    CONSTANT = 'constant', 'Constant'
    REGULARIZED = 'regularized', 'Regularized'


def rm_regularized(p, market_recovery):
    """
    Recovery cap that keeps the simplified value-on-default nonnegative.

    Equal to 1 up to p = 1 - R, then decreasing to exactly R at p = 1.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f'default probability must lie in [0, 1], got {p!r}')
    if not 0.0 < market_recovery < 1.0:
        raise DomainError(f'market recovery must lie in (0, 1), got {market_recovery!r}')
    if p <= 1.0 - market_recovery:
        return 1.0
    if p >= 1.0:
        return market_recovery
    excess = (market_recovery - (1.0 - p)) / (market_recovery * p)
    return 1.0 - (1.0 - market_recovery) * excess


@dataclass(frozen=True)
class RmRule:
    kind: str
    value: float = None

    def __post_init__(self):
        if self.kind not in RmRuleKind.values:
            raise ConfigurationError(f'unknown R_m rule {self.kind!r}')
        if self.kind == RmRuleKind.CONSTANT:
            if self.value is None or not 0.0 < self.value <= 1.0:
                raise ConfigurationError(f'constant R_m must lie in (0, 1], got {self.value!r}')
        elif self.value is not None:
            raise ConfigurationError('the regularized R_m rule takes no value')

    def cap(self, p, market_recovery):
        if self.kind == RmRuleKind.CONSTANT:
            return self.value
        if market_recovery == 0.0:
            return 0.0
        return rm_regularized(p, market_recovery)

    def __str__(self):
        if self.kind == RmRuleKind.CONSTANT:
            return f'constant:{self.value:g}'
        return 'regularized'


@dataclass(frozen=True)
class RecoveryModel:
    kind: str
    alpha: float = None
    rm_rule: RmRule = None

    def __post_init__(self):
        if self.kind == RecoveryKind.DETERMINISTIC:
            if self.alpha is not None or self.rm_rule is not None:
                raise ConfigurationError('the deterministic model has no free parameters')
        elif self.kind == RecoveryKind.STOCHASTIC:
            if self.rm_rule is None:
                raise ConfigurationError('a stochastic model needs an R_m rule')
            if self.alpha is None or not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
                raise ConfigurationError(f'alpha must be finite and nonnegative, got {self.alpha!r}')
        else:
            raise ConfigurationError(f'unknown recovery kind {self.kind!r}')

    @classmethod
    def deterministic(cls):
        return cls(kind=RecoveryKind.DETERMINISTIC)

    @classmethod
    def constant(cls, value=1.0, alpha=1.0):
        return cls(kind=RecoveryKind.STOCHASTIC, alpha=alpha, rm_rule=RmRule(RmRuleKind.CONSTANT, value))

    @classmethod
    def regularized(cls, alpha=1.0):
        return cls(kind=RecoveryKind.STOCHASTIC, alpha=alpha, rm_rule=RmRule(RmRuleKind.REGULARIZED))

    @property
    def is_deterministic(self):
        return self.kind == RecoveryKind.DETERMINISTIC

    @property
    def label(self):
        """Column label used by reports."""
        if self.is_deterministic:
            return 'deterministic'
        if self.rm_rule.kind == RmRuleKind.CONSTANT:
            return 'unregularized'
        return 'regularized'

    @property
    def spec(self):
        if self.is_deterministic:
            return 'deterministic'
        return f'stochastic:{self.rm_rule},alpha={self.alpha:g}'

    def cap(self, p, market_recovery):
        if self.is_deterministic:
            return market_recovery
        return self.rm_rule.cap(p, market_recovery)

    def with_alpha(self, alpha):
        if self.is_deterministic:
            return self
        return RecoveryModel(kind=self.kind, alpha=alpha, rm_rule=self.rm_rule)


def parse_model_spec(text, default_alpha=1.0):
    """
    Parse a model spec such as ``deterministic``, ``stochastic:constant:1``
    or ``stochastic:regularized,alpha=2``.

    ``unregularized`` and ``regularized`` are accepted as shorthands for the
    constant cap of 1 and the regularized cap.
    """
    text = (text or '').strip().lower()
    alpha = default_alpha
    head, _, options = text.partition(',')
    for option in filter(None, (item.strip() for item in options.split(','))):
        key, _, value = option.partition('=')
        if key.strip() != 'alpha':
            raise ConfigurationError(f'unknown model option {key!r} in {text!r}')
        try:
            alpha = float(value)
        except ValueError:
            raise ConfigurationError(f'alpha must be a number in {text!r}')

    parts = [part.strip() for part in head.split(':')]
    try:
        if parts == ['deterministic']:
            if options:
                raise ConfigurationError('the deterministic model takes no options')
            return RecoveryModel.deterministic()
        if parts == ['unregularized']:
            return RecoveryModel.constant(1.0, alpha=alpha)
        if parts in (['regularized'], ['stochastic', 'regularized']):
            return RecoveryModel.regularized(alpha=alpha)
        if len(parts) == 3 and parts[:2] == ['stochastic', 'constant']:
            return RecoveryModel.constant(float(parts[2]), alpha=alpha)
    except ValueError:
        pass
    raise ConfigurationError(f'cannot parse recovery model spec {text!r}')


def model_from_config(recovery, default_alpha=1.0):
    """Build a model from the ``recovery`` table of a run configuration."""
    kind = recovery.get('kind', RecoveryKind.DETERMINISTIC)
    if kind == RecoveryKind.DETERMINISTIC:
        return RecoveryModel.deterministic()
    if kind != RecoveryKind.STOCHASTIC:
        raise ConfigurationError(f'recovery.kind must be deterministic or stochastic, got {kind!r}')
    alpha = float(recovery.get('alpha', default_alpha))
    rm = str(recovery.get('rm', 'constant:1'))
    return parse_model_spec(f'stochastic:{rm},alpha={alpha!r}')


@dataclass(frozen=True)
class CalibratedRecovery:
    """
    Calibrated recovery of one name at one default probability.

    ``beta`` is None when the model reverts to deterministic recovery,
    which is the limit beta -> +infinity.
    """
    beta: float
    r_m_effective: float
    p: float
    market_recovery: float

    @property
    def at_infinity(self):
        return self.beta is None


def _deterministic(p, market_recovery):
    return CalibratedRecovery(beta=None, r_m_effective=market_recovery, p=p, market_recovery=market_recovery)


@lru_cache(maxsize=8192)
def calibrate_beta(p, market_recovery, r_m, alpha, rho, grid, tol=CALIBRATION_TOLERANCE):
    """
    Solve E[p(z) * r_m * Phi(alpha * z + beta)] = p * R for beta on the
    factor grid.

    A cap equal to R returns the at-infinity sentinel. If no bracket is
    found the cap must be within ``SATURATION_TOLERANCE`` of R to get the
    sentinel; otherwise InfeasibleCalibrationError is raised.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f'calibration needs p in (0, 1), got {p!r}')
    if not 0.0 <= market_recovery < 1.0:
        raise DomainError(f'market recovery must lie in [0, 1), got {market_recovery!r}')
    if r_m > 1.0 + SENTINEL_TOLERANCE:
        raise DomainError(f'R_m cannot exceed 1, got {r_m!r}')
    if r_m < market_recovery - SENTINEL_TOLERANCE:
        raise InfeasibleCalibrationError(
            f'R_m {r_m!r} is below the market recovery {market_recovery!r}'
        )
    if alpha < 0.0:
        raise DomainError(f'alpha must be nonnegative, got {alpha!r}')
    if abs(r_m - market_recovery) <= SENTINEL_TOLERANCE or market_recovery == 0.0:
        return _deterministic(p, market_recovery)

    nodes = grid.nodes
    defaults = conditional_default_prob(p, rho, nodes) * grid.weights
    target = p * market_recovery

    def objective(beta):
        return r_m * float(np.dot(defaults, norm_cdf(alpha * nodes + beta))) - target

    lo, hi = BETA_BRACKET
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if objective(lo) < 0.0 < objective(hi):
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    try:
        beta = find_root(objective, lo, hi, tol=tol)
    except NoBracketError:
        # Only a cap within rounding of R may collapse to deterministic recovery
        if r_m - market_recovery > SATURATION_TOLERANCE:
            raise InfeasibleCalibrationError(
                f'no beta matches the market recovery for p={p!r}, R={market_recovery!r}, '
                f'r_m={r_m!r}, alpha={alpha!r}, rho={rho!r}'
            )
        logger.warning(
            f'beta saturated for p={p:.6g}, R={market_recovery:.6g}, r_m={r_m:.6g}, '
            f'alpha={alpha:.6g}, rho={rho:.6g}; reverting to deterministic recovery'
        )
        return _deterministic(p, market_recovery)
    logger.debug(f'Calibrated beta={beta:.12g} for p={p:.6g}, r_m={r_m:.6g}, alpha={alpha:.6g}')
    return CalibratedRecovery(beta=beta, r_m_effective=r_m, p=p, market_recovery=market_recovery)


def calibrate_model(model, p, market_recovery, rho, grid):
    """Calibration of any model; names that cannot default need none."""
    if model.is_deterministic or p == 0.0 or market_recovery == 0.0:
        return _deterministic(p, market_recovery)
    r_m = model.cap(p, market_recovery)
    if p >= 1.0 and abs(r_m - market_recovery) <= SENTINEL_TOLERANCE:
        return _deterministic(p, market_recovery)
    return calibrate_beta(float(p), float(market_recovery), float(r_m), float(model.alpha), float(rho), grid)


def conditional_recovery(cal, alpha, z):
    """Recovery given default and the common factor, vectorized over z."""
    if cal.at_infinity:
        if np.ndim(z) == 0:
            return cal.market_recovery
        return np.full(np.shape(z), cal.market_recovery)
    return cal.r_m_effective * norm_cdf(alpha * np.asarray(z, dtype=float) + cal.beta)


def calibration_residual(cal, alpha, rho, grid):
    """|E[p(z) R(z)] - p R| on the grid."""
    defaults = conditional_default_prob(cal.p, rho, grid.nodes)
    recoveries = conditional_recovery(cal, alpha, grid.nodes)
    return abs(float(grid.expectation(defaults * recoveries)) - cal.p * cal.market_recovery)


def recovery_variance_given_default(p, market_recovery, model, rho, grid):
    """Variance of realized recovery conditional on default."""
    if not p > 0.0:
        raise DomainError('recovery variance is undefined for p = 0')
    cal = calibrate_model(model, p, market_recovery, rho, grid)
    if cal.at_infinity:
        return 0.0
    defaults = conditional_default_prob(p, rho, grid.nodes)
    recoveries = conditional_recovery(cal, model.alpha, grid.nodes)
    second_moment = float(grid.expectation(defaults * recoveries ** 2)) / p
    return max(0.0, second_moment - market_recovery ** 2)
