"""
Device classifier application configuration.
"""

from django.apps import AppConfig


class DeviceClassifierConfig(AppConfig):
    """Configuration for the device classifier application."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'device_classifier'
    verbose_name = 'IoT Device Classifier'

    def ready(self):
        from . import signals  # noqa: F401
