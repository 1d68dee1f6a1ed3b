from django.apps import AppConfig


class SmsfpConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "smsfp"
    verbose_name = "Shape from polarization"
