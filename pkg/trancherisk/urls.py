"""
URL configuration for trancherisk project.

The HTTP surface mirrors the management commands for programmatic use.
"""
from django.urls import path, include

urlpatterns = [
    path('api/pricing/', include('pricing.urls')),
    path('api/risk/', include('risk.urls')),
]
