from django.apps import AppConfig


class RunTrackingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'run_tracking'
    verbose_name = 'Run ledger'
