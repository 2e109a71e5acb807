# Loaded with Django so shared_task binds to the trancherisk app.
from .celery import app as celery_app

__all__ = ('celery_app',)
