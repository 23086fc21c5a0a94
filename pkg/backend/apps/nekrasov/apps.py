from django.apps import AppConfig


class NekrasovConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.nekrasov"
    verbose_name = "Nekrasov Equations"
