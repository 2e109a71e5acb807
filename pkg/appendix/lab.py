"""
Positivity of the value-on-default of a quadratic-payoff super senior.

With payoff W(l) = l**2 on a one-name loss, the simplified VOD is
(1 - R)**2 - E[1{default} (1 - r)**2]. Its limit as alpha -> infinity has a
closed form, and the regularized recovery cap makes that limit exactly
zero once p >= 1 - R. The checks below exercise that argument numerically.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from pricing.copula import conditional_default_prob
from pricing.exceptions import DomainError, InvariantViolation
from pricing.numerics import norm_cdf, norm_inv
from pricing.recovery import (
    SENTINEL_TOLERANCE,
    CalibratedRecovery,
    calibrate_beta,
    conditional_recovery,
    rm_regularized,
)

logger = logging.getLogger(__name__)

K_R_AT_MINUS_INFINITY = -math.inf
MEAN_TOLERANCE = 1e-8

PROPOSITION_TOLERANCE = 1e-6
CLAIM1_TOLERANCE = 1e-8
CLAIM2_TOLERANCE = 1e-12
LEMMA1_TOLERANCE = 1e-8
LEMMA2_TOLERANCE = 1e-12
LEMMA3_TOLERANCE = 1e-12

SCAN_PROBABILITIES = tuple(round(0.05 * k, 2) for k in range(1, 20)) + (0.99,)
SCAN_RECOVERIES = (0.2, 0.4, 0.6)
SCAN_ALPHAS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
SCAN_RHOS = (0.01, 0.3, 0.6, 0.9)


@dataclass(frozen=True)
class SimplifiedVodParams:
    p: float
    market_recovery: float
    r_m: float
    alpha: float
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f'p must lie in [0, 1], got {self.p!r}')
        if not 0.0 <= self.market_recovery < 1.0:
            raise DomainError(f'R must lie in [0, 1), got {self.market_recovery!r}')
        if not self.market_recovery - SENTINEL_TOLERANCE <= self.r_m <= 1.0:
            raise DomainError(f'R_m must lie in [R, 1], got {self.r_m!r}')
        if not self.alpha >= 0.0:
            raise DomainError(f'alpha must be nonnegative, got {self.alpha!r}')
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f'rho must lie in [0, 1), got {self.rho!r}')

    def with_alpha(self, alpha):
        return SimplifiedVodParams(self.p, self.market_recovery, self.r_m, alpha, self.rho)


def _default_and_recovery(params, grid):
    """p(z) and r(z) on the grid nodes."""
    default_prob = conditional_default_prob(params.p, params.rho, grid.nodes)
    if abs(params.r_m - params.market_recovery) <= SENTINEL_TOLERANCE or params.market_recovery == 0.0:
        cal = CalibratedRecovery(None, params.market_recovery, params.p, params.market_recovery)
    else:
        cal = calibrate_beta(params.p, params.market_recovery, params.r_m, params.alpha, params.rho, grid)
    return default_prob, conditional_recovery(cal, params.alpha, grid.nodes)


def simplified_vod(params, grid):
    """(1 - R)^2 - E[p(z) (1 - R(z))^2], the quantity whose sign decides the sign of VOD."""
    lgd_squared = (1.0 - params.market_recovery) ** 2
    if params.p == 0.0:
        return lgd_squared
    default_prob, recovery = _default_and_recovery(params, grid)
    return lgd_squared - float(grid.expectation(default_prob * (1.0 - recovery) ** 2))


def vod_alpha_limit(p, market_recovery, r_m):
    """Closed form of the simplified VOD as alpha -> infinity."""
    if r_m == 0.0:
        raise DomainError('R_m must be positive')
    ratio = market_recovery / r_m
    return (1.0 - market_recovery) ** 2 - (1.0 - r_m) ** 2 * p * ratio - p * (1.0 - ratio)


def k_p(p):
    """Upper end of the factor interval of probability p."""
    return norm_inv(p)


def k_r(p, market_recovery, r_m):
    """
    Lower end of the factor interval carrying recovery r_m in the alpha ->
    infinity limit: P(K_r <= z <= K_p) = p R / r_m.
    """
    argument = p * (1.0 - market_recovery / r_m)
    if argument <= SENTINEL_TOLERANCE * p:
        return K_R_AT_MINUS_INFINITY
    return norm_inv(argument)


def lemma2_residual(p, market_recovery, r_m):
    """|Phi(K_p) - Phi(K_r) - p R / r_m|."""
    return abs(norm_cdf(k_p(p)) - norm_cdf(k_r(p, market_recovery, r_m)) - p * market_recovery / r_m)


def variance_of_x(params, grid):
    """Variance of X = 1{default} r(z), after checking E[X] = p R."""
    default_prob, recovery = _default_and_recovery(params, grid)
    target = params.p * params.market_recovery
    mean = float(grid.expectation(default_prob * recovery))
    if abs(mean - target) > MEAN_TOLERANCE:
        raise InvariantViolation(f'E[X] = {mean!r} differs from pR = {target!r}')
    return float(grid.expectation(default_prob * recovery ** 2)) - target ** 2


def variance_of_x_alpha_limit(p, market_recovery, r_m):
    """Two-point law on {0, r_m} with mean p R."""
    mean = p * market_recovery
    return mean * (r_m - mean)


def lemma1_residual(params, alpha1, alpha2, grid):
    first, second = params.with_alpha(alpha1), params.with_alpha(alpha2)
    vod_change = simplified_vod(first, grid) - simplified_vod(second, grid)
    variance_change = variance_of_x(second, grid) - variance_of_x(first, grid)
    return abs(vod_change - variance_change)


def lemma3_extremal_variance(a, b, m):
    """Largest variance of a distribution on [a, b] with mean m."""
    if not a <= m <= b:
        raise DomainError(f'mean {m!r} lies outside [{a!r}, {b!r}]')
    return (m - a) * (b - m)


def random_bounded_distribution(rng, a, b, m, max_points=6):
    """
    Random discrete law on [a, b] with mean m: Dirichlet weights on up to
    max_points uniform atoms, mixed with a point mass at b or a to move the
    mean onto m.
    """
    if b <= a:
        return np.array([m]), np.array([1.0])
    k = int(rng.integers(1, max_points + 1))
    values = rng.uniform(a, b, size=k)
    weights = rng.dirichlet(np.ones(k))
    mu = float(np.dot(values, weights))
    anchor = b if mu < m else a
    mix = 0.0 if mu == m else (m - mu) / (anchor - mu)
    return np.append(values, anchor), np.append(weights * (1.0 - mix), mix)


def lemma3_property_check(trials=10_000, seed=0):
    """Largest excess of a random law's variance over the extremal bound."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(trials):
        a, b = np.sort(rng.uniform(-1.0, 1.0, size=2))
        m = float(rng.uniform(a, b))
        values, weights = random_bounded_distribution(rng, a, b, m)
        mean = float(np.dot(values, weights))
        variance = float(np.dot(weights, (values - mean) ** 2))
        worst = max(worst, variance - lemma3_extremal_variance(a, b, m))
    return worst


@dataclass(frozen=True)
class Proposition1Scan:
    minimum: float
    argmin: dict
    claim1_margin: float
    claim2_minimum: float
    points: int


def proposition1_scan(p_grid, recovery_grid, alpha_grid, rho_grid, grid):
    """
    Minimum simplified VOD with the regularized cap over the grid, with the
    alpha -> infinity comparison tracked alongside.
    """
    if not (p_grid and recovery_grid and alpha_grid and rho_grid):
        raise DomainError('scan grids must be nonempty')
    minimum, argmin = math.inf, {}
    claim1 = math.inf
    claim2 = math.inf
    points = 0
    for p in p_grid:
        for recovery in recovery_grid:
            r_m = rm_regularized(p, recovery)
            limit = vod_alpha_limit(p, recovery, r_m)
            claim2 = min(claim2, limit)
            for alpha in alpha_grid:
                for rho in rho_grid:
                    value = simplified_vod(SimplifiedVodParams(p, recovery, r_m, alpha, rho), grid)
                    points += 1
                    claim1 = min(claim1, value - limit)
                    if value < minimum:
                        minimum = value
                        argmin = {'p': p, 'recovery': recovery, 'r_m': r_m, 'alpha': alpha, 'rho': rho}
    return Proposition1Scan(minimum=minimum, argmin=argmin, claim1_margin=claim1,
                            claim2_minimum=claim2, points=points)


def variance_monotonicity(params, alphas, grid):
    """Var(X) along increasing alphas and whether it never decreases."""
    variances = [variance_of_x(params.with_alpha(alpha), grid) for alpha in sorted(alphas)]
    steps = np.diff(variances)
    return variances, bool(np.all(steps >= -MEAN_TOLERANCE))


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self):
        return {'name': self.name, 'value': self.value, 'threshold': self.threshold, 'passed': self.passed}


@dataclass
class AppendixReport:
    checks: list = field(default_factory=list)
    observations: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def failures(self):
        return [check.name for check in self.checks if not check.passed]

    def as_dict(self):
        return {
            'passed': self.passed,
            'checks': [check.as_dict() for check in self.checks],
            'observations': self.observations,
        }


def verify_appendix(grid, seed=0, lemma1_draws=50, lemma3_trials=10_000,
                    p_grid=SCAN_PROBABILITIES, recovery_grid=SCAN_RECOVERIES,
                    alpha_grid=SCAN_ALPHAS, rho_grid=SCAN_RHOS):
    """Run every positivity check and collect a report."""
    report = AppendixReport()
    scan = proposition1_scan(p_grid, recovery_grid, alpha_grid, rho_grid, grid)
    report.checks.append(Check('proposition1_minimum', scan.minimum, -PROPOSITION_TOLERANCE,
                               scan.minimum >= -PROPOSITION_TOLERANCE))
    report.checks.append(Check('claim1_margin', scan.claim1_margin, -CLAIM1_TOLERANCE,
                               scan.claim1_margin >= -CLAIM1_TOLERANCE))
    report.checks.append(Check('claim2_minimum', scan.claim2_minimum, -CLAIM2_TOLERANCE,
                               scan.claim2_minimum >= -CLAIM2_TOLERANCE))
    report.observations['proposition1_argmin'] = scan.argmin
    report.observations['scan_points'] = scan.points

    rng = np.random.default_rng(seed)
    lemma1 = 0.0
    for _ in range(lemma1_draws):
        recovery = float(rng.uniform(0.1, 0.7))
        params = SimplifiedVodParams(
            p=float(rng.uniform(0.01, 0.99)),
            market_recovery=recovery,
            r_m=float(rng.uniform(recovery, 1.0)),
            alpha=0.0,
            rho=float(rng.uniform(0.0, 0.9)),
        )
        alpha1, alpha2 = (float(a) for a in rng.uniform(0.0, 5.0, size=2))
        lemma1 = max(lemma1, lemma1_residual(params, alpha1, alpha2, grid))
    report.checks.append(Check('lemma1_residual', lemma1, LEMMA1_TOLERANCE, lemma1 < LEMMA1_TOLERANCE))

    lemma2 = max(
        lemma2_residual(p, recovery, r_m)
        for p in p_grid
        for recovery in recovery_grid
        for r_m in (recovery, 0.5 * (recovery + 1.0), 1.0)
    )
    report.checks.append(Check('lemma2_residual', lemma2, LEMMA2_TOLERANCE, lemma2 < LEMMA2_TOLERANCE))

    lemma3 = lemma3_property_check(lemma3_trials, seed)
    report.checks.append(Check('lemma3_excess', lemma3, LEMMA3_TOLERANCE, lemma3 <= LEMMA3_TOLERANCE))

    monotone_cases = 0
    cases = 0
    for p in (0.1, 0.5, 0.9):
        for recovery in recovery_grid:
            params = SimplifiedVodParams(p, recovery, 1.0, 0.0, 0.3)
            _, monotone = variance_monotonicity(params, alpha_grid, grid)
            cases += 1
            monotone_cases += monotone
    report.observations['variance_monotone_in_alpha'] = f'{monotone_cases}/{cases}'
    if monotone_cases < cases:
        logger.warning(f'Var(X) decreased in alpha in {cases - monotone_cases} of {cases} cases')
    return report
