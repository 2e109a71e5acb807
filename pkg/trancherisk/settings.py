"""
Django settings for trancherisk project.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-change-this-in-production')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1,testserver', cast=lambda v: [s.strip() for s in v.split(',')])

# Application definition
INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',

    # Third party apps
    'rest_framework',

    # Local apps
    'pricing',
    'risk',
    'appendix',
    'oracles',
    'reports',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'trancherisk.urls'

WSGI_APPLICATION = 'trancherisk.wsgi.application'

# Nothing is persisted; the database only satisfies contrib.auth.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework settings
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'UNAUTHENTICATED_USER': None,
}

# Celery settings
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
# Sweeps run inline unless a broker is deliberately configured.
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True

# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('pricing', 'risk', 'appendix', 'oracles', 'reports')
    },
}

# Pricing and risk defaults
TRANCHE_RISK = {
    'FACTOR_NODES': config('TRANCHERISK_FACTOR_NODES', default=96, cast=int),
    'LOSS_BUCKETS_PER_NAME': config('TRANCHERISK_LOSS_BUCKETS_PER_NAME', default=8, cast=int),
    'DISCOUNT_RATE': config('TRANCHERISK_DISCOUNT_RATE', default=0.0, cast=float),
    'PREMIUM_FREQUENCY': config('TRANCHERISK_PREMIUM_FREQUENCY', default=4, cast=int),
    'DEFAULT_ALPHA': config('TRANCHERISK_DEFAULT_ALPHA', default=1.0, cast=float),
    'P_MAX': config('TRANCHERISK_P_MAX', default=0.9999, cast=float),
    'RISKY_SUPER_SENIOR_THRESHOLD': config('TRANCHERISK_RISKY_SUPER_SENIOR_THRESHOLD', default=1e-6, cast=float),
    'CONTINUITY_THRESHOLD': config('TRANCHERISK_CONTINUITY_THRESHOLD', default=1e-4, cast=float),
    'CS01_TOLERANCE': config('TRANCHERISK_CS01_TOLERANCE', default=1e-12, cast=float),
    'CONTINUITY_CONVERGENCE_RATIO': config('TRANCHERISK_CONTINUITY_CONVERGENCE_RATIO', default=0.5, cast=float),
    'NEGLIGIBLE_GAP': config('TRANCHERISK_NEGLIGIBLE_GAP', default=1e-7, cast=float),
    'MC_BATCH_SIZE': config('TRANCHERISK_MC_BATCH_SIZE', default=10000, cast=int),
}
