"""
Django signals for the device classifier.

Files on disk follow the lifetime of the rows that point at them.
"""

import logging
import os

from django.db.models.signals import post_delete
from django.dispatch import receiver

from .models import CaptureUpload, TrainedModel

logger = logging.getLogger(__name__)


def _remove_file(path: str) -> None:
    if path and os.path.exists(path):
        os.remove(path)
        logger.info(f"Removed {path}")


@receiver(post_delete, sender=TrainedModel)
def remove_model_file(sender, instance, **kwargs):
    """Delete the saved model file when its registry row is deleted."""
    _remove_file(instance.file_path)


@receiver(post_delete, sender=CaptureUpload)
def remove_capture_file(sender, instance, **kwargs):
    """Delete the uploaded capture when its upload row is deleted."""
    _remove_file(instance.file_path)
