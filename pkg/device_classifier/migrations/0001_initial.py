# Generated by Django 4.2.17 on 2026-10-16 09:12

from django.conf import settings
import django.core.validators
from django.db import migrations, models
import django.db.models.deletion
import uuid


ALGORITHM_CHOICES = [
    ("cascade", "LSTM-CNN cascade"),
    ("lstm", "LSTM only"),
    ("cnn", "CNN only"),
    ("knn", "k-nearest neighbours"),
    ("tree", "Decision tree"),
]


class Migration(migrations.Migration):
    initial = True

    dependencies = [
        migrations.swappable_dependency(settings.AUTH_USER_MODEL),
    ]

    operations = [
        migrations.CreateModel(
            name="DeviceCategory",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "category_id",
                    models.PositiveIntegerField(
                        help_text="1-based category label",
                        unique=True,
                        validators=[django.core.validators.MinValueValidator(1)],
                    ),
                ),
                ("name", models.CharField(max_length=100)),
            ],
            options={
                "verbose_name_plural": "Device categories",
                "ordering": ["category_id"],
            },
        ),
        migrations.CreateModel(
            name="Device",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("mac", models.CharField(db_index=True, max_length=17, unique=True)),
                ("name", models.CharField(blank=True, default="", max_length=255)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
                (
                    "category",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.PROTECT,
                        related_name="devices",
                        to="device_classifier.devicecategory",
                    ),
                ),
            ],
            options={
                "ordering": ["mac"],
            },
        ),
        migrations.CreateModel(
            name="TrainedModel",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                ("name", models.CharField(max_length=255, unique=True)),
                ("algo", models.CharField(choices=ALGORITHM_CHOICES, max_length=20)),
                ("file_path", models.CharField(max_length=500)),
                ("interval_secs", models.FloatField(default=300.0)),
                ("window", models.PositiveIntegerField(default=6)),
                ("overlap", models.PositiveIntegerField(default=3)),
                ("feature_names", models.JSONField(default=list)),
                ("config", models.JSONField(blank=True, default=dict)),
                ("summary", models.TextField(blank=True, default="")),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("running", "Running"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                        ],
                        db_index=True,
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("algo", models.CharField(choices=ALGORITHM_CHOICES, max_length=20)),
                ("dataset_path", models.CharField(max_length=500)),
                ("split_path", models.CharField(max_length=500)),
                ("config", models.JSONField(blank=True, default=dict)),
                (
                    "repeats",
                    models.PositiveIntegerField(
                        default=5,
                        validators=[django.core.validators.MinValueValidator(1)],
                    ),
                ),
                ("base_seed", models.IntegerField(default=0)),
                ("train_ratio", models.FloatField(default=1.0)),
                ("mean_accuracy", models.FloatField(blank=True, null=True)),
                ("std_accuracy", models.FloatField(blank=True, null=True)),
                ("best_accuracy", models.FloatField(blank=True, null=True)),
                ("reports", models.JSONField(blank=True, default=list)),
                ("error_messages", models.JSONField(blank=True, default=list)),
                (
                    "celery_task_id",
                    models.CharField(blank=True, max_length=255, null=True),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
                ("completed_at", models.DateTimeField(blank=True, null=True)),
                (
                    "requested_by",
                    models.ForeignKey(
                        blank=True,
                        null=True,
                        on_delete=django.db.models.deletion.SET_NULL,
                        related_name="experiment_runs",
                        to=settings.AUTH_USER_MODEL,
                    ),
                ),
            ],
            options={
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(
                        fields=["status", "created_at"],
                        name="experiment_status_idx",
                    )
                ],
            },
        ),
        migrations.CreateModel(
            name="CaptureUpload",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                ("filename", models.CharField(max_length=255)),
                ("file_path", models.CharField(max_length=500)),
                (
                    "file_size",
                    models.BigIntegerField(
                        help_text="File size in bytes",
                        validators=[django.core.validators.MinValueValidator(0)],
                    ),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("processing", "Processing"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                            ("partial", "Partially Completed"),
                        ],
                        db_index=True,
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("total_rows", models.PositiveIntegerField(default=0)),
                ("record_count", models.PositiveIntegerField(default=0)),
                ("warning_count", models.PositiveIntegerField(default=0)),
                ("parse_warnings", models.JSONField(blank=True, default=list)),
                ("error_messages", models.JSONField(blank=True, default=list)),
                (
                    "celery_task_id",
                    models.CharField(blank=True, max_length=255, null=True),
                ),
                ("retry_count", models.PositiveIntegerField(default=0)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
                ("completed_at", models.DateTimeField(blank=True, null=True)),
                (
                    "model",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="captures",
                        to="device_classifier.trainedmodel",
                    ),
                ),
                (
                    "uploaded_by",
                    models.ForeignKey(
                        blank=True,
                        null=True,
                        on_delete=django.db.models.deletion.SET_NULL,
                        related_name="capture_uploads",
                        to=settings.AUTH_USER_MODEL,
                    ),
                ),
            ],
            options={
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(
                        fields=["status", "created_at"],
                        name="capture_status_idx",
                    ),
                    models.Index(
                        fields=["celery_task_id"],
                        name="capture_task_idx",
                    ),
                ],
            },
        ),
        migrations.CreateModel(
            name="DevicePrediction",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("window_count", models.PositiveIntegerField(default=0)),
                ("votes", models.JSONField(blank=True, default=dict)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                (
                    "device",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="predictions",
                        to="device_classifier.device",
                    ),
                ),
                (
                    "predicted_category",
                    models.ForeignKey(
                        null=True,
                        on_delete=django.db.models.deletion.SET_NULL,
                        related_name="predictions",
                        to="device_classifier.devicecategory",
                    ),
                ),
                (
                    "upload",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="predictions",
                        to="device_classifier.captureupload",
                    ),
                ),
            ],
            options={
                "ordering": ["device__mac"],
            },
        ),
        migrations.AddConstraint(
            model_name="deviceprediction",
            constraint=models.UniqueConstraint(
                fields=("upload", "device"), name="unique_prediction_per_device"
            ),
        ),
    ]
