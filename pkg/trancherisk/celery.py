import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'trancherisk.settings')

app = Celery('trancherisk')

# All celery-related settings carry the CELERY_ prefix.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Trio cases are long numeric jobs: one at a time per worker process,
# on their own queue so API-triggered sweeps do not starve other work.
app.conf.task_routes = {'risk.tasks.*': {'queue': 'sweeps'}}
app.conf.worker_prefetch_multiplier = 1
app.conf.task_acks_late = True

app.autodiscover_tasks()
