from django.conf import settings


def tranche_risk_setting(name, default):
    """Value from settings.TRANCHE_RISK, or the default when unset."""
    return getattr(settings, 'TRANCHE_RISK', {}).get(name, default)
