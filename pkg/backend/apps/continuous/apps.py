from django.apps import AppConfig


class ContinuousConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.continuous"
    verbose_name = "Continuous Corners Processes"
