"""
Tranche risk measures: CreditSpread01, value-on-default (VOD), Recovery01,
continuity on default, the CS01/VOD identity, the sequential-default walk
and the risky-super-senior / positive-CS01 / continuity classification.
"""
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace

from pricing import pricer
from pricing.conf import tranche_risk_setting
from pricing.exceptions import ConfigurationError, DomainError, InvariantViolation, PortfolioError
from pricing.market import BASIS_POINT, Tranche, spread_for_probability
from pricing.pricer import (
    ConditionalLosses,
    LossGrid,
    PricerConfig,
    coupon_bearing,
    pricing_dates,
    settle_default,
)

logger = logging.getLogger(__name__)

CS01_WIDTH = BASIS_POINT
DEFAULT_RECOVERY_BUMP = 0.01
TRIO_PROBABILITY_GRID = (
    0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
    0.95, 0.99, 0.995, 0.999, 0.9995,
)


@dataclass(frozen=True)
class RiskContext:
    """Everything a risk measure holds fixed: portfolio, tranche, model and pricer."""
    portfolio: object
    tranche: Tranche
    model: object
    rho: float
    config: PricerConfig = field(default_factory=PricerConfig.from_settings)
    p_max: float = None

    def __post_init__(self):
        if self.p_max is None:
            object.__setattr__(self, 'p_max', tranche_risk_setting('P_MAX', 0.9999))
        if not 0.0 < self.p_max < 1.0:
            raise ConfigurationError(f'p_max must lie in (0, 1), got {self.p_max!r}')
        if not 0.0 <= self.rho < 1.0:
            raise ConfigurationError(f'correlation must lie in [0, 1), got {self.rho!r}')
        self.tranche.validate_against(self.portfolio)

    def with_tranche(self, tranche):
        return replace(self, tranche=tranche)

    def with_model(self, model):
        return replace(self, model=model)


@dataclass(frozen=True)
class VodPoint:
    probability: float
    spread: float
    vod: float


@dataclass(frozen=True)
class ContinuityGap:
    p_max: float
    spread: float
    gap: float


@dataclass(frozen=True)
class WalkStep:
    name_id: str
    vod: float
    payment: float
    pv_before: float


@dataclass(frozen=True)
class DefaultWalk:
    steps: tuple
    initial_pv: float
    terminal_pv: float

    @property
    def vods(self):
        return [step.vod for step in self.steps]

    @property
    def total_vod(self):
        return math.fsum(self.vods)

    @property
    def residual(self):
        """|sum of VODs - (terminal PV - initial PV)|."""
        return abs(self.total_vod - (self.terminal_pv - self.initial_pv))


@dataclass(frozen=True)
class RiskReport:
    """
    Per-name CS01 and VOD of one tranche, the VOD curve and continuity gap of
    one name, and every negative VOD found over the probability grid.
    """
    name_id: str
    cs01: dict
    vod: dict
    continuity_gap: ContinuityGap
    vod_curve: tuple
    negative_vods: tuple = ()
    trio_flags: object = None

    def __post_init__(self):
        spreads = [point.spread for point in self.vod_curve]
        if any(b <= a for a, b in zip(spreads, spreads[1:])):
            raise DomainError('VOD curve spreads must be strictly increasing')
        if self.trio_flags is not None and self.trio_flags.all_hold:
            raise InvariantViolation(
                'a model has all three trio properties', [f'trio flags {self.trio_flags.as_row()}']
            )

    def as_dict(self):
        gap = self.continuity_gap
        return {
            'name_id': self.name_id,
            'cs01': self.cs01,
            'vod': self.vod,
            'continuity_gap': {'p_max': gap.p_max, 'spread': gap.spread, 'gap': gap.gap},
            'vod_curve': [
                {'probability': point.probability, 'spread': point.spread, 'vod': point.vod}
                for point in self.vod_curve
            ],
            'negative_vods': list(self.negative_vods),
            'trio_flags': None if self.trio_flags is None else self.trio_flags.as_row(),
        }


def distinct_names(portfolio):
    """
    One representative per (spread, recovery, notional) profile, with the
    ids it stands for. Names sharing a profile are exchangeable.
    """
    groups = OrderedDict()
    for name in portfolio.names:
        groups.setdefault(name.profile, []).append(name)
    return [(members[0], tuple(member.id for member in members)) for members in groups.values()]


def cs01_stencil(spread):
    """1bp window centered on the spread, shifted right when it would go negative."""
    lo = max(spread - 0.5 * CS01_WIDTH, 0.0)
    return lo, lo + CS01_WIDTH


class RiskEngine:
    """
    Bump-and-reprice risk for one context.

    For each name the distribution of every other live name is built once;
    spread bumps and the name's default then reprice by a single
    convolution or none at all.
    """

    def __init__(self, context):
        self.context = context
        self.portfolio = context.portfolio
        self.tranche = context.tranche
        self.layout = LossGrid.for_portfolio(self.portfolio, context.config)
        self._backgrounds = {}

    def _empty(self, tranche):
        return ConditionalLosses(
            self.layout,
            pricing_dates(tranche, self.context.config),
            self.context.model,
            self.context.rho,
            self.context.config,
            with_recovered=coupon_bearing(tranche),
        )

    def background(self, name_id, tranche=None):
        """Distributions of all live names except one, in portfolio order."""
        tranche = tranche or self.tranche
        key = (name_id, pricing_dates(tranche, self.context.config), coupon_bearing(tranche))
        if key not in self._backgrounds:
            index = self.portfolio.index_of(name_id)
            others = self.portfolio.names[:index] + self.portfolio.names[index + 1:]
            self._backgrounds[key] = self._empty(tranche).add(others)
            logger.debug(f'Built background distribution excluding {name_id}')
        return self._backgrounds[key]

    def pv(self, name_id, spread=None, tranche=None):
        """Tranche PV with one name's spread replaced."""
        tranche = tranche or self.tranche
        name = self.portfolio.name(name_id)
        if spread is not None:
            name = replace(name, spread=spread)
        losses = self.background(name_id, tranche).add([name])
        return losses.price(
            tranche,
            self.portfolio.cumulative_loss,
            self.portfolio.cumulative_recovered,
            self.portfolio.original_notional,
        ).pv

    def pv_after_default(self, name_id, realized_recovery=None, tranche=None):
        tranche = tranche or self.tranche
        name = self.portfolio.name(name_id)
        recovery = name.market_recovery if realized_recovery is None else realized_recovery
        settled, _, payment = settle_default(self.portfolio, tranche, name_id, recovery)
        pricing = self.background(name_id, tranche).price(
            tranche, settled.cumulative_loss, settled.cumulative_recovered, settled.original_notional
        )
        return payment + pricing.pv

    def credit_spread01(self, name_id, spread=None, tranche=None):
        """Central difference of PV over a 1bp spread window, per bp."""
        current = self.portfolio.name(name_id).spread if spread is None else spread
        lo, hi = cs01_stencil(current)
        return self.pv(name_id, hi, tranche) - self.pv(name_id, lo, tranche)

    def vod(self, name_id, spread=None, tranche=None):
        return self.pv_after_default(name_id, tranche=tranche) - self.pv(name_id, spread, tranche)

    def recovery01(self, name_id, d_recovery=DEFAULT_RECOVERY_BUMP, tranche=None):
        recovery = self.portfolio.name(name_id).market_recovery
        bumped = recovery + d_recovery
        if not 0.0 <= bumped < 1.0:
            raise DomainError(f'bumped recovery {bumped!r} is outside [0, 1)')
        return (
            self.pv_after_default(name_id, bumped, tranche)
            - self.pv_after_default(name_id, recovery, tranche)
        )

    def spread_for(self, name_id, probability, tranche=None):
        tranche = tranche or self.tranche
        name = self.portfolio.name(name_id)
        return spread_for_probability(probability, name.market_recovery, tranche.maturity)

    def vod_curve(self, name_id, probability_grid, tranche=None):
        """VOD as the name's default probability to maturity sweeps the grid."""
        probabilities = [float(p) for p in probability_grid]
        if not probabilities:
            raise DomainError('probability grid is empty')
        if any(not 0.0 < p <= self.context.p_max for p in probabilities):
            raise DomainError(f'probabilities must lie in (0, {self.context.p_max}]')
        if any(b <= a for a, b in zip(probabilities, probabilities[1:])):
            raise DomainError('probability grid must be strictly increasing')
        default_pv = self.pv_after_default(name_id, tranche=tranche)
        points = []
        for p in probabilities:
            spread = self.spread_for(name_id, p, tranche)
            points.append(VodPoint(p, spread, default_pv - self.pv(name_id, spread, tranche)))
        return tuple(points)

    def continuity_gap(self, name_id, p_max=None, tranche=None):
        """VOD with the name at the near-default cap."""
        p_max = self.context.p_max if p_max is None else p_max
        if not 0.0 < p_max < 1.0:
            raise DomainError(f'p_max must lie in (0, 1), got {p_max!r}')
        spread = self.spread_for(name_id, p_max, tranche)
        return ContinuityGap(p_max=p_max, spread=spread, gap=self.vod(name_id, spread, tranche))

    def cs01_vod_identity_residual(self, name_id, spread_grid, tranche=None):
        """
        max |CS01 + dVOD/ds| over the grid, both sides on the same stencil.

        The post-default leg is fully repriced from the portfolio carrying
        each bumped spread, so a default PV that leaks the defaulted name's
        spread shows up in the residual.
        """
        tranche = tranche or self.tranche
        spreads = [float(s) for s in spread_grid]
        if not spreads or any(b <= a for a, b in zip(spreads, spreads[1:])):
            raise DomainError('spread grid must be nonempty and strictly increasing')
        context = self.context
        worst = 0.0
        for spread in spreads:
            lo, hi = cs01_stencil(spread)
            cs01 = self.credit_spread01(name_id, spread, tranche)
            vods = []
            for bumped in (lo, hi):
                default_pv = pricer.pv_after_default(
                    self.portfolio.with_spread(name_id, bumped), tranche, name_id,
                    context.model, context.rho, context.config,
                )
                vods.append(default_pv - self.pv(name_id, bumped, tranche))
            worst = max(worst, abs(cs01 + vods[1] - vods[0]))
        return worst

    def sequential_default_walk(self, order, tranche=None):
        """
        Default names one at a time at market recovery, recording each VOD
        against the tranche left by all previous defaults.
        """
        tranche = tranche or self.tranche
        order = list(order)
        if sorted(order) != sorted(self.portfolio.ids) or len(set(order)) != len(order):
            raise PortfolioError('default order must be a permutation of the live names')
        states = [self.portfolio]
        payments = []
        for name_id in order:
            name = states[-1].name(name_id)
            settled, _, payment = settle_default(states[-1], tranche, name_id, name.market_recovery)
            states.append(settled)
            payments.append(payment)
        # State k holds the names still alive after k defaults, so adding
        # names in reverse default order builds every state's distribution.
        losses = self._empty(tranche)
        pvs = [0.0] * len(states)
        for k in range(len(states) - 1, -1, -1):
            if k < len(order):
                losses = losses.add([self.portfolio.name(order[k])])
            state = states[k]
            pvs[k] = losses.price(
                tranche, state.cumulative_loss, state.cumulative_recovered, state.original_notional
            ).pv
        steps = tuple(
            WalkStep(name_id=name_id, vod=payments[k] + pvs[k + 1] - pvs[k], payment=payments[k], pv_before=pvs[k])
            for k, name_id in enumerate(order)
        )
        return DefaultWalk(steps=steps, initial_pv=pvs[0], terminal_pv=math.fsum(payments) + pvs[-1])

    def negative_vod_search(self, probability_grid, tranche=None):
        """Names and probabilities where VOD is negative; reported, never asserted."""
        found = []
        for name, ids in distinct_names(self.portfolio):
            for point in self.vod_curve(name.id, probability_grid, tranche):
                if point.vod < 0.0:
                    found.append({'name_ids': list(ids), 'probability': point.probability,
                                  'spread': point.spread, 'vod': point.vod})
        return found

    def report(self, name_id, probability_grid, trio_flags=None):
        """Full risk report of the context tranche; see ``RiskReport``."""
        grid = default_probability_grid(self.context.p_max, probability_grid)
        cs01 = {}
        vod = {}
        for name, ids in distinct_names(self.portfolio):
            name_cs01 = self.credit_spread01(name.id)
            name_vod = self.vod(name.id)
            for member in ids:
                cs01[member] = name_cs01
                vod[member] = name_vod
        return RiskReport(
            name_id=name_id,
            cs01=cs01,
            vod=vod,
            continuity_gap=self.continuity_gap(name_id),
            vod_curve=self.vod_curve(name_id, grid),
            negative_vods=tuple(self.negative_vod_search(grid)),
            trio_flags=trio_flags,
        )


def credit_spread01(name_id, context):
    return RiskEngine(context).credit_spread01(name_id)


def vod(name_id, context):
    return RiskEngine(context).vod(name_id)


def recovery01(name_id, context, d_recovery=DEFAULT_RECOVERY_BUMP):
    return RiskEngine(context).recovery01(name_id, d_recovery)


def vod_curve(name_id, context, probability_grid):
    return RiskEngine(context).vod_curve(name_id, probability_grid)


def continuity_gap(name_id, context):
    return RiskEngine(context).continuity_gap(name_id)


def cs01_vod_identity_residual(name_id, context, spread_grid):
    return RiskEngine(context).cs01_vod_identity_residual(name_id, spread_grid)


def sequential_default_walk(context, order):
    return RiskEngine(context).sequential_default_walk(order)


def default_probability_grid(p_max, probabilities=TRIO_PROBABILITY_GRID):
    """Probabilities below the near-default cap, then the cap itself."""
    return tuple(p for p in sorted(probabilities) if p < p_max) + (p_max,)


def continuity_ladder(p_max, decades=2):
    """
    Near-default caps a decade apart in 1 - p, ending at ``p_max``.

    0.9999 gives (0.99, 0.999, 0.9999). Caps at or below 0.5 are dropped.
    """
    caps = [1.0 - (1.0 - p_max) * 10 ** k for k in range(decades, 0, -1)]
    return tuple(p for p in caps if p > 0.5) + (p_max,)
