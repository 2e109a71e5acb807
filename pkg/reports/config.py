"""
Run configuration: a TOML file validated by DRF serializers, with command
line flags layered on top.
"""
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from rest_framework import serializers

from pricing.conf import tranche_risk_setting
from pricing.exceptions import ConfigurationError
from pricing.ingestion import read_portfolio
from pricing.market import Tranche, demo_portfolio
from pricing.pricer import PricerConfig
from pricing.recovery import model_from_config, parse_model_spec
from pricing.serializers import PricerConfigSerializer, StrictSerializer, TrancheSerializer
from risk.engine import RiskContext
from risk.trio import super_senior_tranche

logger = logging.getLogger(__name__)

DEFAULT_PROBABILITY_GRID = tuple(round(0.01 * k, 2) for k in range(1, 100)) + (0.995, 0.999)


class RecoverySpecSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=['deterministic', 'stochastic'])
    rm = serializers.CharField(required=False)
    alpha = serializers.FloatField(min_value=0, required=False)


class GridsSerializer(StrictSerializer):
    probabilities = serializers.ListField(
        child=serializers.FloatField(min_value=0, max_value=1), allow_empty=False, required=False
    )
    figure_recovery = serializers.FloatField(default=0.4)
    monte_carlo_paths = serializers.IntegerField(min_value=1, default=1_000_000)

    def validate_figure_recovery(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('figure_recovery must lie in (0, 1).')
        return value


class RunConfigSerializer(StrictSerializer):
    """
    Schema of a run configuration file
    """
    portfolio = serializers.CharField(required=False)
    out = serializers.CharField(default='out')
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=0)
    rho = serializers.FloatField(min_value=0, default=0.4)
    alpha = serializers.FloatField(min_value=0, required=False)
    p_max = serializers.FloatField(required=False)
    models = serializers.ListField(child=serializers.CharField(), allow_empty=False, required=False)
    recovery = RecoverySpecSerializer(required=False)
    tranche = TrancheSerializer(required=False)
    super_senior = TrancheSerializer(required=False)
    pricer = PricerConfigSerializer(required=False)
    grids = GridsSerializer(required=False)

    def validate_rho(self, value):
        if value >= 1:
            raise serializers.ValidationError('rho must be below 1.')
        return value

    def validate_p_max(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('p_max must lie in (0, 1).')
        return value


@dataclass(frozen=True)
class TrancheSpec:
    attach_pct: float
    detach_pct: float
    maturity: float = 5.0
    coupon: float = 0.0

    def build(self, portfolio):
        return Tranche.from_percent(portfolio, self.attach_pct, self.detach_pct, self.maturity, self.coupon)


@dataclass(frozen=True)
class RunConfig:
    portfolio_path: Path = None
    tranche: TrancheSpec = TrancheSpec(15.0, 30.0)
    super_senior: TrancheSpec = None
    models: tuple = None
    rho: float = 0.4
    alpha: float = 1.0
    p_max: float = 0.9999
    pricer: PricerConfig = field(default_factory=PricerConfig.from_settings)
    out_dir: Path = Path('out')
    probability_grid: tuple = DEFAULT_PROBABILITY_GRID
    figure_recovery: float = 0.4
    monte_carlo_paths: int = 1_000_000
    seed: int = 0

    def load_portfolio(self):
        if self.portfolio_path is None:
            return demo_portfolio()
        return read_portfolio(self.portfolio_path)

    def models_or(self, defaults):
        """Configured models, or the given default specs."""
        if self.models:
            return self.models
        return tuple(parse_model_spec(spec, default_alpha=self.alpha) for spec in defaults)

    def context(self, portfolio, model, tranche=None):
        return RiskContext(
            portfolio=portfolio,
            tranche=tranche or self.tranche.build(portfolio),
            model=model,
            rho=self.rho,
            config=self.pricer,
            p_max=self.p_max,
        )

    def super_senior_tranche(self, portfolio):
        """Configured super senior, else the tranche above the all-default loss."""
        if self.super_senior is None:
            return super_senior_tranche(portfolio, self.tranche.maturity)
        return self.super_senior.build(portfolio)

    def output_path(self, filename):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.out_dir, os.W_OK):
            raise ConfigurationError(f'output directory {self.out_dir} is not writable')
        return self.out_dir / filename


def _read_toml(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f'config file {path} does not exist')
    try:
        with path.open('rb') as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f'{path}: invalid TOML: {e}')


def load_run_config(path=None, portfolio=None, out=None, models=None, seed=None, nodes=None, pmax=None):
    """
    Build a RunConfig from an optional TOML file; explicit arguments win.
    """
    raw = _read_toml(path) if path else {}
    serializer = RunConfigSerializer(data=raw)
    if not serializer.is_valid():
        raise ConfigurationError(f'invalid run configuration: {serializer.errors}')
    data = serializer.validated_data
    base = Path(path).resolve().parent if path else Path.cwd()

    alpha = data.get('alpha', tranche_risk_setting('DEFAULT_ALPHA', 1.0))
    model_list = None
    if models:
        model_list = tuple(parse_model_spec(spec, default_alpha=alpha) for spec in models)
    elif 'models' in data:
        model_list = tuple(parse_model_spec(spec, default_alpha=alpha) for spec in data['models'])
    elif 'recovery' in data:
        model_list = (model_from_config(data['recovery'], default_alpha=alpha),)

    pricer_values = dict(data.get('pricer', {}))
    if nodes is not None:
        pricer_values['factor_nodes'] = nodes
    grids = data.get('grids', {})

    portfolio_path = portfolio or data.get('portfolio')
    if portfolio_path is not None:
        portfolio_path = Path(portfolio_path)
        if not portfolio_path.is_absolute() and not portfolio:
            portfolio_path = base / portfolio_path

    config = RunConfig(
        portfolio_path=portfolio_path,
        tranche=TrancheSpec(**data['tranche']) if 'tranche' in data else TrancheSpec(15.0, 30.0),
        super_senior=TrancheSpec(**data['super_senior']) if 'super_senior' in data else None,
        models=model_list,
        rho=data['rho'],
        alpha=alpha,
        p_max=pmax if pmax is not None else data.get('p_max', tranche_risk_setting('P_MAX', 0.9999)),
        pricer=PricerConfig.from_settings(**pricer_values),
        out_dir=Path(out or data['out']),
        probability_grid=tuple(sorted(set(grids['probabilities']))) if 'probabilities' in grids else DEFAULT_PROBABILITY_GRID,
        figure_recovery=grids.get('figure_recovery', 0.4),
        monte_carlo_paths=grids.get('monte_carlo_paths', 1_000_000),
        seed=seed if seed is not None else data['seed'],
    )
    if not 0.0 < config.p_max < 1.0:
        raise ConfigurationError(f'p_max must lie in (0, 1), got {config.p_max!r}')
    if config.portfolio_path is not None and not config.portfolio_path.is_file():
        raise ConfigurationError(f'portfolio file {config.portfolio_path} does not exist')
    logger.debug(f'Loaded run configuration from {path or "defaults"}')
    return config
