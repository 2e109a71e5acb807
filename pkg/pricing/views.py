"""
Pricing API
"""
import logging

from rest_framework import status
from rest_framework.decorators import api_view
from rest_framework.response import Response

from .exceptions import TrancheRiskError
from .pricer import price_tranche
from .serializers import PriceRequestSerializer

logger = logging.getLogger(__name__)


@api_view(['POST'])
def price(request):
    """
    Price one tranche under one recovery model
    """
    serializer = PriceRequestSerializer(data=request.data)
    if not serializer.is_valid():
        return Response({'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)
    try:
        portfolio, tranche, model, rho, config = serializer.build()
        pricing = price_tranche(portfolio, tranche, tranche.maturity, model, rho, config)
        return Response({'model': model.spec, **pricing.as_dict()}, status=status.HTTP_200_OK)
    except TrancheRiskError as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)
    except Exception as e:
        logger.error(f"Pricing error: {str(e)}")
        return Response(
            {'error': 'An error occurred while pricing the tranche'},
            status=status.HTTP_500_INTERNAL_SERVER_ERROR
        )
