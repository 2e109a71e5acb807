"""
WSGI entry point for the trancherisk API, served by gunicorn.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'trancherisk.settings')

application = get_wsgi_application()
