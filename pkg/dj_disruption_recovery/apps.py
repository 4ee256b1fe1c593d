from django.apps import AppConfig


class DjDisruptionRecoveryConfig(AppConfig):
    """No models; the app exists to register its management commands and fixtures."""

    name = "dj_disruption_recovery"
    verbose_name = "Dj Disruption Recovery"
