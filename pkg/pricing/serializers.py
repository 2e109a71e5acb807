from rest_framework import serializers

from .exceptions import ConfigurationError
from .market import BASIS_POINT, CreditName, Portfolio, Tranche, demo_portfolio
from .pricer import PricerConfig
from .recovery import RecoveryModel, parse_model_spec


class StrictSerializer(serializers.Serializer):
    """
    Serializer that rejects fields it does not declare
    """

    def to_internal_value(self, data):
        if hasattr(data, 'keys'):
            unknown = sorted(set(data.keys()) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({field: ['Unknown field.'] for field in unknown})
        return super().to_internal_value(data)


class CreditNameSerializer(StrictSerializer):
    """
    One issuer record, spread quoted in basis points
    """
    id = serializers.CharField(max_length=64)
    spread_bp = serializers.FloatField(min_value=0)
    recovery = serializers.FloatField(min_value=0)
    notional = serializers.FloatField()

    def validate_recovery(self, value):
        if value >= 1:
            raise serializers.ValidationError('Recovery must be below 1.')
        return value

    def validate_notional(self, value):
        if value <= 0:
            raise serializers.ValidationError('Notional must be positive.')
        return value


def portfolio_from_records(records):
    """
    Validate name records and build a portfolio; raises ValidationError
    """
    serializer = CreditNameSerializer(data=list(records), many=True)
    serializer.is_valid(raise_exception=True)
    ids = [item['id'] for item in serializer.validated_data]
    duplicates = sorted({name_id for name_id in ids if ids.count(name_id) > 1})
    if duplicates:
        raise serializers.ValidationError(f'Duplicate name ids: {", ".join(duplicates)}')
    if not ids:
        raise serializers.ValidationError('Portfolio has no names.')
    return Portfolio.from_names(
        CreditName(
            id=item['id'],
            spread=item['spread_bp'] * BASIS_POINT,
            market_recovery=item['recovery'],
            notional=item['notional'],
        )
        for item in serializer.validated_data
    )


class TrancheSerializer(StrictSerializer):
    """
    Tranche strikes in percent of original notional
    """
    attach_pct = serializers.FloatField(min_value=0, max_value=100)
    detach_pct = serializers.FloatField(min_value=0, max_value=100)
    maturity = serializers.FloatField(default=5.0)
    coupon = serializers.FloatField(min_value=0, default=0.0)

    def validate(self, attrs):
        if attrs['attach_pct'] >= attrs['detach_pct']:
            raise serializers.ValidationError('Attachment must be below detachment.')
        if attrs['maturity'] <= 0:
            raise serializers.ValidationError('Maturity must be positive.')
        return attrs


class PricerConfigSerializer(StrictSerializer):
    factor_nodes = serializers.IntegerField(min_value=32, required=False)
    loss_buckets_per_name = serializers.IntegerField(min_value=1, required=False)
    discount_rate = serializers.FloatField(required=False)
    premium_frequency = serializers.IntegerField(min_value=1, required=False)


class ModelSpecField(serializers.CharField):
    """
    Recovery model spec string, e.g. stochastic:regularized,alpha=1
    """

    def to_internal_value(self, data):
        text = super().to_internal_value(data)
        try:
            return parse_model_spec(text)
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e))

    def to_representation(self, value):
        return value.spec


class PriceRequestSerializer(StrictSerializer):
    """
    Pricing request; the demo portfolio is used when no names are given
    """
    portfolio = CreditNameSerializer(many=True, required=False)
    tranche = TrancheSerializer()
    model = ModelSpecField(default=RecoveryModel.deterministic)
    rho = serializers.FloatField(min_value=0, default=0.4)
    config = PricerConfigSerializer(required=False)

    def validate_rho(self, value):
        if value >= 1:
            raise serializers.ValidationError('Correlation must be below 1.')
        return value

    def build(self):
        """
        Validated request as (portfolio, tranche, model, rho, config)
        """
        data = self.validated_data
        records = self.initial_data.get('portfolio')
        portfolio = portfolio_from_records(records) if records else demo_portfolio()
        tranche = data['tranche']
        return (
            portfolio,
            Tranche.from_percent(
                portfolio, tranche['attach_pct'], tranche['detach_pct'], tranche['maturity'],
                coupon=tranche['coupon'],
            ),
            data['model'],
            data['rho'],
            PricerConfig.from_settings(**data.get('config', {})),
        )
