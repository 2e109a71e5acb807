"""
Numerical classification of recovery models by three properties: a
zero-coupon super senior tranche with positive PV, CS01 that is never
negative, and VOD that vanishes as a name approaches certain default.
No model can have all three.
"""
import logging
import math
from dataclasses import dataclass, field

from pricing.conf import tranche_risk_setting
from pricing.exceptions import ConfigurationError
from pricing.market import Tranche
from pricing.pricer import price_tranche

from .engine import RiskEngine, continuity_ladder, default_probability_grid, distinct_names

logger = logging.getLogger(__name__)

EXPECTED_PATTERN = {
    'deterministic': ('No', 'Yes', 'Yes'),
    'unregularized': ('Yes', 'Yes', 'No'),
    'regularized': ('Yes', 'No', 'Yes'),
}
FLAG_NAMES = ('risky_super_senior', 'positive_cs01', 'continuous_on_default')


@dataclass(frozen=True)
class TrioThresholds:
    """
    Per-notional thresholds of the classification.

    A model is continuous on default when every gap converges: from the
    coarsest to the finest near-default cap it must shrink to at most
    ``convergence_ratio`` of its size, unless it is already below
    ``negligible_gap``. The finest gap must also stay under ``continuity``.
    With a single cap there is nothing to compare and only the threshold
    applies.
    """
    risky_super_senior: float = 1e-6
    continuity: float = 1e-4
    cs01_tolerance: float = 1e-12
    convergence_ratio: float = 0.5
    negligible_gap: float = 1e-7

    @classmethod
    def from_settings(cls):
        return cls(
            risky_super_senior=tranche_risk_setting('RISKY_SUPER_SENIOR_THRESHOLD', cls.risky_super_senior),
            continuity=tranche_risk_setting('CONTINUITY_THRESHOLD', cls.continuity),
            cs01_tolerance=tranche_risk_setting('CS01_TOLERANCE', cls.cs01_tolerance),
            convergence_ratio=tranche_risk_setting('CONTINUITY_CONVERGENCE_RATIO', cls.convergence_ratio),
            negligible_gap=tranche_risk_setting('NEGLIGIBLE_GAP', cls.negligible_gap),
        )

    def gap_converges(self, gaps):
        """Whether per-notional |gaps|, coarsest cap first, are heading to zero."""
        finest = gaps[-1]
        if finest < self.negligible_gap or len(gaps) < 2:
            return True
        return finest <= self.convergence_ratio * gaps[0]


@dataclass(frozen=True)
class TrioFlags:
    risky_super_senior: bool
    positive_cs01: bool
    continuous_on_default: bool

    def as_row(self):
        return tuple('Yes' if getattr(self, flag) else 'No' for flag in FLAG_NAMES)

    @property
    def all_hold(self):
        return self.risky_super_senior and self.positive_cs01 and self.continuous_on_default


@dataclass(frozen=True)
class TrioRow:
    model: str
    spec: str
    flags: TrioFlags
    super_senior_pv: float
    min_cs01: float
    min_cs01_at: dict = field(default_factory=dict)
    max_gap: float = 0.0
    gap_ladder: tuple = ()
    stalled_gap_at: dict = None

    def as_dict(self):
        risky, positive, continuous = self.flags.as_row()
        return {
            'model': self.model,
            'spec': self.spec,
            'risky_super_senior': risky,
            'positive_cs01': positive,
            'continuous_on_default': continuous,
            'super_senior_pv': self.super_senior_pv,
            'min_cs01_per_notional': self.min_cs01,
            'min_cs01_at': self.min_cs01_at,
            'max_gap_per_notional': self.max_gap,
            'gap_ladder_per_notional': [list(point) for point in self.gap_ladder],
            'stalled_gap_at': self.stalled_gap_at,
        }


@dataclass(frozen=True)
class TrioReport:
    rows: tuple
    alpha: float = None
    rho: float = None

    @property
    def impossible_trio_holds(self):
        return not any(row.flags.all_hold for row in self.rows)

    def pattern(self):
        return {row.model: row.flags.as_row() for row in self.rows}

    def as_dict(self):
        return {
            'alpha': self.alpha,
            'rho': self.rho,
            'rows': [row.as_dict() for row in self.rows],
            'impossible_trio_holds': self.impossible_trio_holds,
        }


def super_senior_tranche(portfolio, maturity):
    """Zero-coupon tranche attaching at the all-default loss at market recovery."""
    attach = portfolio.max_loss()
    if attach >= portfolio.original_notional:
        raise ConfigurationError('portfolio has no super senior tranche: recoveries are zero')
    return Tranche(attach=attach, detach=portfolio.original_notional, maturity=maturity)


def evaluate_model(context, super_senior, model, thresholds=None):
    """Evaluate the three flags for one model."""
    thresholds = thresholds or TrioThresholds.from_settings()
    if not super_senior.is_super_senior(context.portfolio):
        raise ConfigurationError('the risky-super-senior test needs a super senior tranche')
    if not super_senior.zero_coupon:
        raise ConfigurationError('the risky-super-senior test needs a zero-coupon tranche')
    context = context.with_model(model)
    engine = RiskEngine(context)
    portfolio = context.portfolio

    super_senior_pv = price_tranche(
        portfolio, super_senior, super_senior.maturity, model, context.rho, context.config
    ).pv
    tranches = [super_senior]
    if context.tranche != super_senior:
        tranches.append(context.tranche)

    probabilities = default_probability_grid(context.p_max)
    ladder = continuity_ladder(context.p_max)
    min_cs01 = math.inf
    min_at = {}
    worst_ladder = [0.0] * len(ladder)
    stalled_at = None
    for name, _ in distinct_names(portfolio):
        for tranche in tranches:
            spreads = [name.spread] + [engine.spread_for(name.id, p, tranche) for p in probabilities]
            for spread in spreads:
                ratio = engine.credit_spread01(name.id, spread, tranche) / tranche.notional
                if ratio < min_cs01:
                    min_cs01 = ratio
                    min_at = {'name_id': name.id, 'spread': spread, 'attach': tranche.attach,
                              'detach': tranche.detach}

            # One gap per near-default cap, coarsest first
            gaps = [
                abs(engine.continuity_gap(name.id, p_max=p, tranche=tranche).gap) / tranche.notional
                for p in ladder
            ]
            worst_ladder = [max(worst, gap) for worst, gap in zip(worst_ladder, gaps)]
            if stalled_at is None and not thresholds.gap_converges(gaps):
                stalled_at = {'name_id': name.id, 'attach': tranche.attach, 'detach': tranche.detach,
                              'gaps': gaps}
    max_gap = worst_ladder[-1]

    flags = TrioFlags(
        risky_super_senior=super_senior_pv > thresholds.risky_super_senior * super_senior.notional,
        positive_cs01=min_cs01 >= -thresholds.cs01_tolerance,
        continuous_on_default=stalled_at is None and max_gap < thresholds.continuity,
    )
    logger.info(f'{model.spec}: flags {flags.as_row()}, super senior PV {super_senior_pv:.6g}')
    return TrioRow(
        model=model.label,
        spec=model.spec,
        flags=flags,
        super_senior_pv=super_senior_pv,
        min_cs01=min_cs01,
        min_cs01_at=min_at,
        max_gap=max_gap,
        gap_ladder=tuple(zip(ladder, worst_ladder)),
        stalled_gap_at=stalled_at,
    )


def trio_report(context, models, super_senior=None, thresholds=None):
    super_senior = super_senior or super_senior_tranche(context.portfolio, context.tranche.maturity)
    rows = tuple(evaluate_model(context, super_senior, model, thresholds) for model in models)
    alphas = {model.alpha for model in models if not model.is_deterministic}
    return TrioReport(rows=rows, alpha=alphas.pop() if len(alphas) == 1 else None, rho=context.rho)


def check_trio_report(report, expected=None):
    """
    Failures of a report against the expected pattern; the impossible-trio
    invariant is always checked.
    """
    failures = []
    if not report.impossible_trio_holds:
        failures.append('impossible_trio: a model has all three properties')
    for row in report.rows if expected is not None else ():
        want = expected.get(row.model)
        if want is None:
            continue
        for flag, got, wanted in zip(FLAG_NAMES, row.flags.as_row(), want):
            if got != wanted:
                failures.append(f'{row.model}.{flag}: expected {wanted}, got {got}')
    return failures
