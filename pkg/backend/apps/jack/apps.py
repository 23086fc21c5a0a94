from django.apps import AppConfig


class JackConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.jack"
    verbose_name = "Jack Polynomials"
