from django.apps import AppConfig


class StateSpaceConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.state_space"
    verbose_name = "State Space"
