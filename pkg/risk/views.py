"""
Risk API: CS01, VOD curves and the trio classification
"""
import logging

from rest_framework import status
from rest_framework.decorators import api_view
from rest_framework.response import Response

from pricing.exceptions import TrancheRiskError
from pricing.recovery import parse_model_spec

from .engine import RiskEngine, default_probability_grid, distinct_names
from .serializers import Cs01RequestSerializer, TrioReportRequestSerializer, VodCurveRequestSerializer
from .trio import EXPECTED_PATTERN, check_trio_report, trio_report

logger = logging.getLogger(__name__)

TRIO_MODELS = ('deterministic', 'unregularized', 'regularized')


def _risk_response(serializer_class, request, compute, action):
    """Validate, compute and map domain errors to 400 responses."""
    # Validate request
    serializer = serializer_class(data=request.data)
    if not serializer.is_valid():
        return Response({'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)
    try:
        return Response(compute(serializer), status=status.HTTP_200_OK)
    except TrancheRiskError as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)
    except Exception as e:
        logger.error(f"Error computing {action}: {str(e)}")
        return Response(
            {'error': f'An error occurred while computing {action}'},
            status=status.HTTP_500_INTERNAL_SERVER_ERROR
        )


@api_view(['POST'])
def cs01(request):
    """
    Per-name CreditSpread01 and VOD
    """
    def compute(serializer):
        engine = RiskEngine(serializer.context())
        wanted = serializer.validated_data.get('names')
        for name_id in wanted or ():
            engine.portfolio.index_of(name_id)
        result = {'cs01': {}, 'vod': {}}
        for name, ids in distinct_names(engine.portfolio):
            members = [name_id for name_id in ids if wanted is None or name_id in wanted]
            if not members:
                continue
            name_cs01 = engine.credit_spread01(name.id)
            name_vod = engine.vod(name.id)
            for name_id in members:
                result['cs01'][name_id] = name_cs01
                result['vod'][name_id] = name_vod
        return result

    return _risk_response(Cs01RequestSerializer, request, compute, 'CS01')


@api_view(['POST'])
def vod_curve(request):
    """
    VOD of one name as its default probability rises
    """
    def compute(serializer):
        context = serializer.context()
        engine = RiskEngine(context)
        name_id = serializer.validated_data.get('name') or engine.portfolio.names[0].id
        probabilities = serializer.validated_data.get('probabilities') or default_probability_grid(context.p_max)
        curve = engine.vod_curve(name_id, probabilities)
        return {
            'name': name_id,
            'points': [
                {'probability': point.probability, 'spread': point.spread, 'vod': point.vod}
                for point in curve
            ],
        }

    return _risk_response(VodCurveRequestSerializer, request, compute, 'the VOD curve')


@api_view(['POST'])
def trio(request):
    """
    Classify recovery models by risky super senior, positive CS01 and continuity
    """
    def compute(serializer):
        context = serializer.context()
        models = serializer.validated_data.get('models') or [parse_model_spec(spec) for spec in TRIO_MODELS]
        report = trio_report(context, models)
        payload = report.as_dict()
        expected = EXPECTED_PATTERN if serializer.validated_data['check'] else None
        payload['failures'] = check_trio_report(report, expected)
        return payload

    return _risk_response(TrioReportRequestSerializer, request, compute, 'the trio report')
