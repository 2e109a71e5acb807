import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'trancherisk.settings')
django.setup()
