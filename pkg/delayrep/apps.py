from django.apps import AppConfig


class DelayrepConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'delayrep'
    verbose_name = 'Delay system representations'
