"""
Database models for the flowclass service.

Models:
- DeviceCategory: a semantic device category (Hubs, Cameras, ...)
- Device: a registered device MAC and its category
- TrainedModel: a saved classifier file and the featurization it expects
- ExperimentRun: a queued held-out-device experiment and its results
- CaptureUpload: an uploaded capture CSV and its classification status
- DevicePrediction: the per-device verdict of a capture classification
"""

import uuid

from django.core.validators import MinValueValidator
from django.db import models
from django.utils import timezone

from .features import FeaturizeParams
from .ingest import DeviceEntry
from .utils import featurize_params


class DeviceCategory(models.Model):
    """
    A device category.

    Attributes:
        category_id: 1-based label used by every classifier
        name: human-readable category name
    """

    category_id = models.PositiveIntegerField(
        unique=True,
        validators=[MinValueValidator(1)],
        help_text="1-based category label"
    )
    name = models.CharField(max_length=100)

    class Meta:
        verbose_name_plural = "Device categories"
        ordering = ['category_id']

    def __str__(self):
        return f"{self.category_id}: {self.name}"


class Device(models.Model):
    """
    A registered IoT device.

    Attributes:
        mac: canonical lowercase colon-separated MAC address
        name: optional human-readable name
        category: the device's category
    """

    mac = models.CharField(max_length=17, unique=True, db_index=True)
    name = models.CharField(max_length=255, blank=True, default='')
    category = models.ForeignKey(
        DeviceCategory,
        on_delete=models.PROTECT,
        related_name='devices'
    )
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['mac']

    def __str__(self):
        return self.name or self.mac

    def to_entry(self) -> DeviceEntry:
        """The device as a device-list entry for the classification pipeline."""
        return DeviceEntry(self.mac, self.category.category_id, self.name, self.category.name)


class TrainedModel(models.Model):
    """
    A trained classifier stored on disk, plus the featurization settings
    captures must be processed with before it can score them.
    """

    class Algorithm(models.TextChoices):
        CASCADE = 'cascade', 'LSTM-CNN cascade'
        LSTM = 'lstm', 'LSTM only'
        CNN = 'cnn', 'CNN only'
        KNN = 'knn', 'k-nearest neighbours'
        TREE = 'tree', 'Decision tree'

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    name = models.CharField(max_length=255, unique=True)
    algo = models.CharField(max_length=20, choices=Algorithm.choices)
    file_path = models.CharField(max_length=500)
    interval_secs = models.FloatField(default=300.0)
    window = models.PositiveIntegerField(default=6)
    overlap = models.PositiveIntegerField(default=3)
    feature_names = models.JSONField(default=list)
    config = models.JSONField(default=dict, blank=True)
    summary = models.TextField(blank=True, default='')
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.name} ({self.algo})"

    def featurize_params(self) -> FeaturizeParams:
        """Featurization settings the model was trained with."""
        return featurize_params(
            interval_secs=self.interval_secs,
            window=self.window,
            overlap=self.overlap,
            feature_names=tuple(self.feature_names) or None,
        )


class ExperimentRun(models.Model):
    """
    A held-out-device experiment queued through the API.

    Repeats run as independent Celery tasks; the run collects their reports.
    """

    class Status(models.TextChoices):
        PENDING = 'pending', 'Pending'
        RUNNING = 'running', 'Running'
        COMPLETED = 'completed', 'Completed'
        FAILED = 'failed', 'Failed'

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    status = models.CharField(
        max_length=20,
        choices=Status.choices,
        default=Status.PENDING,
        db_index=True
    )
    algo = models.CharField(max_length=20, choices=TrainedModel.Algorithm.choices)
    dataset_path = models.CharField(max_length=500)
    split_path = models.CharField(max_length=500)
    config = models.JSONField(default=dict, blank=True)
    repeats = models.PositiveIntegerField(default=5, validators=[MinValueValidator(1)])
    base_seed = models.IntegerField(default=0)
    train_ratio = models.FloatField(default=1.0)
    mean_accuracy = models.FloatField(null=True, blank=True)
    std_accuracy = models.FloatField(null=True, blank=True)
    best_accuracy = models.FloatField(null=True, blank=True)
    reports = models.JSONField(default=list, blank=True)
    error_messages = models.JSONField(default=list, blank=True)
    celery_task_id = models.CharField(max_length=255, blank=True, null=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)
    completed_at = models.DateTimeField(null=True, blank=True)
    requested_by = models.ForeignKey(
        'auth.User',
        on_delete=models.SET_NULL,
        null=True,
        blank=True,
        related_name='experiment_runs'
    )

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['status', 'created_at'], name='experiment_status_idx'),
        ]

    def __str__(self):
        return f"{self.algo} experiment ({self.status})"

    def mark_completed(self, reports, mean: float, std: float, best: float):
        self.status = self.Status.COMPLETED
        self.reports = list(reports)
        self.mean_accuracy = mean
        self.std_accuracy = std
        self.best_accuracy = best
        self.completed_at = timezone.now()
        self.save()

    def mark_failed(self, error_message: str):
        self.status = self.Status.FAILED
        self.error_messages.append({
            'timestamp': timezone.now().isoformat(),
            'message': error_message
        })
        self.completed_at = timezone.now()
        self.save()


class CaptureUpload(models.Model):
    """
    Tracks an uploaded capture CSV and its classification.

    Attributes:
        id: UUID primary key
        filename: original filename
        model: the classifier the capture is scored with
        status: current processing status
        total_rows: data rows read from the file
        record_count: rows kept after parsing
        warning_count: rows skipped while parsing
        parse_warnings: the most recent skipped-row reasons
    """

    class Status(models.TextChoices):
        PENDING = 'pending', 'Pending'
        PROCESSING = 'processing', 'Processing'
        COMPLETED = 'completed', 'Completed'
        FAILED = 'failed', 'Failed'
        PARTIALLY_COMPLETED = 'partial', 'Partially Completed'

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    filename = models.CharField(max_length=255)
    file_path = models.CharField(max_length=500)
    file_size = models.BigIntegerField(
        validators=[MinValueValidator(0)],
        help_text="File size in bytes"
    )
    model = models.ForeignKey(
        TrainedModel,
        on_delete=models.CASCADE,
        related_name='captures'
    )
    status = models.CharField(
        max_length=20,
        choices=Status.choices,
        default=Status.PENDING,
        db_index=True
    )
    total_rows = models.PositiveIntegerField(default=0)
    record_count = models.PositiveIntegerField(default=0)
    warning_count = models.PositiveIntegerField(default=0)
    parse_warnings = models.JSONField(default=list, blank=True)
    error_messages = models.JSONField(default=list, blank=True)
    celery_task_id = models.CharField(max_length=255, blank=True, null=True)
    retry_count = models.PositiveIntegerField(default=0)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)
    completed_at = models.DateTimeField(null=True, blank=True)
    uploaded_by = models.ForeignKey(
        'auth.User',
        on_delete=models.SET_NULL,
        null=True,
        blank=True,
        related_name='capture_uploads'
    )

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['status', 'created_at'], name='capture_status_idx'),
            models.Index(fields=['celery_task_id'], name='capture_task_idx'),
        ]

    def __str__(self):
        return f"{self.filename} ({self.status})"

    @property
    def kept_percentage(self) -> float:
        """Share of data rows that survived parsing."""
        if self.total_rows == 0:
            return 0.0
        return round((self.record_count / self.total_rows) * 100, 2)

    def record_parse_warnings(self, warnings, limit: int = 100):
        """Store the parse warnings of the capture, keeping only the last ``limit``."""
        self.warning_count = len(warnings)
        self.parse_warnings = [
            {'line': w.line, 'message': w.reason} for w in list(warnings)[-limit:]
        ]

    def mark_completed(self):
        self.status = self.Status.PARTIALLY_COMPLETED if self.warning_count else self.Status.COMPLETED
        self.completed_at = timezone.now()
        self.save()

    def mark_failed(self, error_message: str):
        self.status = self.Status.FAILED
        self.error_messages.append({
            'timestamp': timezone.now().isoformat(),
            'message': error_message
        })
        self.completed_at = timezone.now()
        self.save()


class DevicePrediction(models.Model):
    """Majority-vote category of one device within a classified capture."""

    upload = models.ForeignKey(
        CaptureUpload,
        on_delete=models.CASCADE,
        related_name='predictions'
    )
    device = models.ForeignKey(
        Device,
        on_delete=models.CASCADE,
        related_name='predictions'
    )
    predicted_category = models.ForeignKey(
        DeviceCategory,
        on_delete=models.SET_NULL,
        null=True,
        related_name='predictions'
    )
    window_count = models.PositiveIntegerField(default=0)
    votes = models.JSONField(default=dict, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['device__mac']
        constraints = [
            models.UniqueConstraint(fields=['upload', 'device'], name='unique_prediction_per_device'),
        ]

    def __str__(self):
        return f"{self.device} -> {self.predicted_category}"

    @property
    def is_correct(self) -> bool:
        return self.predicted_category_id is not None and self.predicted_category_id == self.device.category_id
