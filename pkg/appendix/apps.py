from django.apps import AppConfig


class AppendixConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'appendix'
    verbose_name = 'Value-on-default positivity checks'
