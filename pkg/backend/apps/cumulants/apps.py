from django.apps import AppConfig


class CumulantsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.cumulants"
    verbose_name = "Cumulants and Loop Equations"
