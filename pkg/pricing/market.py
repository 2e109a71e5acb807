"""
Issuers, portfolios, tranches and flat credit curves.

All types are immutable; settlement and spread bumps return new values.
"""
import math
from dataclasses import dataclass, field, replace

from .exceptions import DomainError, PortfolioError, UnknownNameError

BASIS_POINT = 1e-4
CONSERVATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CreditName:
    id: str
    spread: float
    market_recovery: float
    notional: float

    def __post_init__(self):
        if not (self.spread >= 0.0 and math.isfinite(self.spread)):
            raise DomainError(f'{self.id}: spread must be finite and nonnegative')
        if not 0.0 <= self.market_recovery < 1.0:
            raise DomainError(f'{self.id}: market recovery must lie in [0, 1)')
        if not (self.notional > 0.0 and math.isfinite(self.notional)):
            raise DomainError(f'{self.id}: notional must be positive')

    @property
    def loss_given_default(self):
        return (1.0 - self.market_recovery) * self.notional

    @property
    def profile(self):
        """Key shared by names that are exchangeable in the copula."""
        return (self.spread, self.market_recovery, self.notional)


@dataclass(frozen=True)
class CreditCurve:
    hazard: float

    def __post_init__(self):
        if not self.hazard >= 0.0:
            raise DomainError('hazard rate must be nonnegative')


def curve_from_spread(spread, market_recovery):
    """Flat curve by the credit triangle, hazard = spread / (1 - R)."""
    if market_recovery >= 1.0:
        raise DomainError(f'market recovery must be below 1, got {market_recovery!r}')
    if spread < 0.0:
        raise DomainError(f'spread must be nonnegative, got {spread!r}')
    return CreditCurve(hazard=spread / (1.0 - market_recovery))


def default_probability(curve, t):
    """Probability of default by time t under a flat hazard rate."""
    if t < 0.0:
        raise DomainError(f'time must be nonnegative, got {t!r}')
    return -math.expm1(-curve.hazard * t)


def spread_for_probability(p, market_recovery, t):
    """Flat spread whose curve reaches default probability p at time t."""
    if not 0.0 <= p < 1.0:
        raise DomainError(f'default probability must lie in [0, 1), got {p!r}')
    if t <= 0.0:
        raise DomainError(f'time must be positive, got {t!r}')
    if market_recovery >= 1.0:
        raise DomainError(f'market recovery must be below 1, got {market_recovery!r}')
    return -(1.0 - market_recovery) * math.log1p(-p) / t


def name_default_probability(name, t):
    """Default probability implied by a name's own spread and market recovery."""
    return default_probability(curve_from_spread(name.spread, name.market_recovery), t)


@dataclass(frozen=True)
class Portfolio:
    """
    Live names plus the crystallized effect of past settlements.

    Losses are written up from the bottom of the capital structure and
    recovered amounts written down from the top, so pricing after defaults
    needs nothing about the dead names beyond the two running totals.
    """
    names: tuple
    cumulative_loss: float = 0.0
    cumulative_recovered: float = 0.0
    original_notional: float = None
    defaulted: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, 'names', names)
        object.__setattr__(self, 'defaulted', frozenset(self.defaulted))
        ids = [name.id for name in names]
        if len(set(ids)) != len(ids):
            raise PortfolioError('portfolio contains duplicate name ids')
        if self.defaulted & set(ids):
            raise PortfolioError('a defaulted name cannot also be live')
        if self.cumulative_loss < 0.0 or self.cumulative_recovered < 0.0:
            raise PortfolioError('cumulative loss and recovery must be nonnegative')
        live = math.fsum(name.notional for name in names)
        if self.original_notional is None:
            object.__setattr__(
                self, 'original_notional',
                live + self.cumulative_loss + self.cumulative_recovered,
            )
        if not self.original_notional > 0.0:
            raise PortfolioError('original notional must be positive')
        accounted = math.fsum([live, self.cumulative_loss, self.cumulative_recovered])
        if abs(accounted - self.original_notional) > CONSERVATION_TOLERANCE * self.original_notional:
            raise PortfolioError(
                f'notional not conserved: live {live} + loss {self.cumulative_loss} + '
                f'recovered {self.cumulative_recovered} != {self.original_notional}'
            )

    @classmethod
    def from_names(cls, names):
        return cls(names=tuple(names))

    def __len__(self):
        return len(self.names)

    @property
    def size(self):
        """Names ever in the portfolio, live or defaulted."""
        return len(self.names) + len(self.defaulted)

    @property
    def live_notional(self):
        return math.fsum(name.notional for name in self.names)

    @property
    def ids(self):
        return tuple(name.id for name in self.names)

    def index_of(self, name_id):
        """Position of a live name; defaulted and unknown ids raise UnknownNameError."""
        for index, name in enumerate(self.names):
            if name.id == name_id:
                return index
        if name_id in self.defaulted:
            raise UnknownNameError(f'name {name_id!r} has already defaulted')
        raise UnknownNameError(f'name {name_id!r} is not in the portfolio')

    def name(self, name_id):
        return self.names[self.index_of(name_id)]

    def with_spread(self, name_id, spread):
        """Copy of the portfolio with one name's spread replaced."""
        index = self.index_of(name_id)
        names = list(self.names)
        names[index] = replace(names[index], spread=spread)
        return replace(self, names=tuple(names))

    def max_loss(self):
        """Cumulative loss if every live name defaults at market recovery."""
        return self.cumulative_loss + math.fsum(n.loss_given_default for n in self.names)


@dataclass(frozen=True)
class Tranche:
    """
    A [attach, detach] slice of the capital structure, strikes in currency
    on the original portfolio notional.
    """
    attach: float
    detach: float
    maturity: float
    coupon: float = 0.0
    zero_coupon: bool = True

    def __post_init__(self):
        if not 0.0 <= self.attach < self.detach:
            raise PortfolioError(f'tranche needs 0 <= attach < detach, got [{self.attach}, {self.detach}]')
        if not self.maturity > 0.0:
            raise PortfolioError('tranche maturity must be positive')
        if self.coupon < 0.0:
            raise PortfolioError('tranche coupon must be nonnegative')
        if self.zero_coupon and self.coupon != 0.0:
            raise PortfolioError('a zero-coupon tranche cannot carry a coupon')

    @classmethod
    def from_percent(cls, portfolio, attach_pct, detach_pct, maturity, coupon=0.0):
        """Convert percent strikes once, against the original notional."""
        scale = portfolio.original_notional / 100.0
        return cls(
            attach=attach_pct * scale,
            detach=detach_pct * scale,
            maturity=maturity,
            coupon=coupon,
            zero_coupon=coupon == 0.0,
        )

    @property
    def notional(self):
        return self.detach - self.attach

    def loss(self, portfolio_loss):
        """Tranche payoff (L - A)+ - (L - B)+, scalar or array."""
        if hasattr(portfolio_loss, 'clip'):
            return portfolio_loss.clip(self.attach, self.detach) - self.attach
        return min(max(portfolio_loss, self.attach), self.detach) - self.attach

    def validate_against(self, portfolio):
        if self.detach > portfolio.original_notional * (1.0 + CONSERVATION_TOLERANCE):
            raise PortfolioError(
                f'detachment {self.detach} exceeds portfolio notional {portfolio.original_notional}'
            )

    def is_super_senior(self, portfolio):
        """Attachment at or above the loss when every name defaults at market recovery."""
        return self.attach >= portfolio.max_loss() - CONSERVATION_TOLERANCE * portfolio.original_notional


def demo_portfolio(size=125, spread=0.01, market_recovery=0.4, notional=0.8):
    """Homogeneous index-style portfolio used by the reports by default."""
    width = len(str(size))
    return Portfolio.from_names(
        CreditName(
            id=f'N{index:0{width}d}',
            spread=spread,
            market_recovery=market_recovery,
            notional=notional,
        )
        for index in range(1, size + 1)
    )
