"""
Celery tasks for the flowclass service.

Tasks:
- process_capture_file: classify the registered devices of an uploaded capture
- run_experiment_task: fan an experiment's repeats out as a chord
- run_experiment_repeat: one seeded held-out-device repeat
- finalize_experiment: collect the repeat reports onto the ExperimentRun
"""

import logging
import os
from typing import Any, Dict, List

import numpy as np
from celery import chord, shared_task
from celery.exceptions import MaxRetriesExceededError
from django.db import transaction

from .cascade import CascadeConfig
from .evaluation import classify_devices, load_split, run_repeat
from .exceptions import FlowclassError
from .features import read_dataset
from .ingest import parse_capture, separate_streams
from .models import CaptureUpload, Device, DevicePrediction, DeviceCategory, ExperimentRun
from .serialization import load_model
from .utils import pipeline_setting

logger = logging.getLogger(__name__)


class CaptureProcessingError(FlowclassError):
    """The upload record or its file is gone."""

    code = 'CAPTURE_PROCESSING'


@shared_task(
    bind=True,
    max_retries=3,
    acks_late=True,
    reject_on_worker_lost=True,
)
def process_capture_file(self, upload_id: str) -> Dict[str, Any]:
    """
    Classify every registered device seen in an uploaded capture.

    This task:
    1. Parses the capture, keeping the last skipped-row warnings on the upload
    2. Separates one stream per registered device
    3. Featurizes the streams with the settings the model was trained with
    4. Stores a majority-vote DevicePrediction per device

    Pipeline errors fail the upload at once; anything else is retried with backoff.
    """
    logger.info(f"Starting capture classification for upload {upload_id}")

    try:
        upload = CaptureUpload.objects.select_related('model').get(id=upload_id)
    except CaptureUpload.DoesNotExist:
        logger.error(f"CaptureUpload {upload_id} not found")
        raise CaptureProcessingError(f"CaptureUpload {upload_id} not found")

    upload.status = CaptureUpload.Status.PROCESSING
    upload.celery_task_id = self.request.id
    upload.save(update_fields=['status', 'celery_task_id', 'updated_at'])

    try:
        if not os.path.exists(upload.file_path):
            raise CaptureProcessingError(f"File not found: {upload.file_path}")

        capture = parse_capture(upload.file_path, pipeline_setting('INGEST_CHUNK_SIZE'))
        upload.total_rows = capture.total_rows
        upload.record_count = len(capture)
        upload.record_parse_warnings(capture.parse_warnings, pipeline_setting('MAX_STORED_WARNINGS'))
        upload.save(update_fields=[
            'total_rows', 'record_count', 'warning_count', 'parse_warnings', 'updated_at'
        ])

        devices = {device.mac: device for device in Device.objects.select_related('category')}
        streams = separate_streams(capture, devices.keys())
        active = {mac: stream for mac, stream in streams.items() if len(stream)}

        classifier = load_model(upload.model.file_path)
        verdicts = classify_devices(classifier, active, upload.model.featurize_params())
        categories = {c.category_id: c for c in DeviceCategory.objects.all()}

        with transaction.atomic():
            upload.predictions.all().delete()
            DevicePrediction.objects.bulk_create([
                DevicePrediction(
                    upload=upload,
                    device=devices[mac],
                    predicted_category=categories.get(verdict.predicted),
                    window_count=verdict.window_count,
                    votes={str(c): n for c, n in verdict.votes.items()},
                )
                for mac, verdict in verdicts.items()
            ])

        upload.mark_completed()
        logger.info(
            f"Capture {upload_id} classified: {len(verdicts)} of {len(active)} active devices, "
            f"{upload.warning_count} skipped rows"
        )
        return {
            'status': upload.status,
            'upload_id': str(upload_id),
            'record_count': upload.record_count,
            'warning_count': upload.warning_count,
            'devices': {mac: verdict.predicted for mac, verdict in verdicts.items()},
        }

    except FlowclassError as e:
        logger.error(f"Capture {upload_id} failed: {e}")
        upload.mark_failed(str(e))
        raise

    except Exception as e:
        logger.exception(f"Error processing capture {upload_id}: {e}")
        upload.refresh_from_db()
        upload.retry_count += 1
        upload.save(update_fields=['retry_count', 'updated_at'])
        try:
            raise self.retry(exc=e, countdown=min(300, 30 * 2 ** self.request.retries))
        except MaxRetriesExceededError:
            upload.mark_failed(str(e))
            raise


def experiment_config(run: ExperimentRun):
    """(CascadeConfig, baseline options) of a run; baseline keys are split off the cascade keys."""
    values = dict(run.config)
    options = {key: int(values.pop(key)) for key in ('k', 'max_depth') if key in values}
    return CascadeConfig.from_mapping(values), options


@shared_task(bind=True, acks_late=True)
def run_experiment_repeat(self, run_id: str, repeat: int) -> Dict[str, Any]:
    """One seeded repeat of an experiment; returns the report as a dict."""
    run = ExperimentRun.objects.get(id=run_id)
    seed = run.base_seed + repeat
    try:
        samples = read_dataset(run.dataset_path)
        split = load_split(run.split_path)
        split.validate({s.device_mac: s.label for s in samples})
        config, options = experiment_config(run)
        report = run_repeat(
            samples, split, run.algo, config, seed, options, train_fraction=run.train_ratio
        )
    except FlowclassError as e:
        logger.error(f"Experiment {run_id} repeat {repeat} failed: {e}")
        run.mark_failed(f"repeat {repeat}: {e}")
        raise
    except Exception as e:
        # the chord callback never runs once a header task fails
        logger.exception(f"Error in experiment {run_id} repeat {repeat}: {e}")
        run.mark_failed(f"repeat {repeat}: {type(e).__name__}: {e}")
        raise
    return report.to_dict()


@shared_task(bind=True)
def finalize_experiment(self, reports: List[Dict[str, Any]], run_id: str) -> Dict[str, Any]:
    """Chord callback: store per-repeat reports and their mean, std and best accuracy."""
    run = ExperimentRun.objects.get(id=run_id)
    accuracies = np.array([report['accuracy'] for report in reports], dtype=np.float64)
    run.mark_completed(
        reports,
        mean=float(accuracies.mean()),
        std=float(accuracies.std()),
        best=float(accuracies.max()),
    )
    logger.info(
        f"Experiment {run_id} completed: mean accuracy {run.mean_accuracy:.4f} "
        f"over {len(reports)} repeats"
    )
    return {
        'run_id': str(run_id),
        'mean_accuracy': run.mean_accuracy,
        'std_accuracy': run.std_accuracy,
        'best_accuracy': run.best_accuracy,
    }


@shared_task(bind=True)
def run_experiment_task(self, run_id: str) -> str:
    """Queue every repeat of an experiment; finalize_experiment runs when all have finished."""
    run = ExperimentRun.objects.get(id=run_id)
    run.status = ExperimentRun.Status.RUNNING
    run.celery_task_id = self.request.id
    run.save(update_fields=['status', 'celery_task_id', 'updated_at'])
    logger.info(f"Experiment {run_id}: {run.repeats} repeats of {run.algo} queued")

    result = chord(
        run_experiment_repeat.s(str(run.id), repeat) for repeat in range(run.repeats)
    )(finalize_experiment.s(str(run.id)))
    return result.id
