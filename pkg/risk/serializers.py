from rest_framework import serializers

from pricing.serializers import ModelSpecField, PriceRequestSerializer

from .engine import RiskContext


class RiskRequestSerializer(PriceRequestSerializer):
    """
    Pricing request plus the near-default probability cap
    """
    p_max = serializers.FloatField(required=False)

    def validate_p_max(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('p_max must lie in (0, 1).')
        return value

    def context(self):
        portfolio, tranche, model, rho, config = self.build()
        return RiskContext(
            portfolio=portfolio,
            tranche=tranche,
            model=model,
            rho=rho,
            config=config,
            p_max=self.validated_data.get('p_max'),
        )


class Cs01RequestSerializer(RiskRequestSerializer):
    names = serializers.ListField(child=serializers.CharField(), allow_empty=False, required=False)


class VodCurveRequestSerializer(RiskRequestSerializer):
    name = serializers.CharField(required=False)
    probabilities = serializers.ListField(
        child=serializers.FloatField(), allow_empty=False, required=False
    )


class TrioReportRequestSerializer(RiskRequestSerializer):
    models = serializers.ListField(child=ModelSpecField(), allow_empty=False, required=False)
    check = serializers.BooleanField(default=False)
