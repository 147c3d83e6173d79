"""
Tests for the device classifier models.
"""

import pytest
from django.db import IntegrityError

from device_classifier.ingest import ParseWarning
from device_classifier.models import CaptureUpload, DeviceCategory, DevicePrediction, ExperimentRun

from .factories import (
    CaptureUploadFactory,
    DeviceCategoryFactory,
    DeviceFactory,
    ExperimentRunFactory,
    TrainedModelFactory,
)


@pytest.mark.django_db
class TestDeviceModels:
    """Tests for DeviceCategory and Device."""

    def test_category_str(self):
        category = DeviceCategoryFactory(category_id=3, name='Cameras')
        assert str(category) == '3: Cameras'

    def test_category_id_unique(self):
        DeviceCategoryFactory(category_id=1)
        with pytest.raises(IntegrityError):
            DeviceCategory.objects.create(category_id=1, name='Again')

    def test_device_str_falls_back_to_mac(self):
        device = DeviceFactory(mac='02:00:00:00:00:aa', name='')
        assert str(device) == '02:00:00:00:00:aa'

    def test_device_to_entry(self):
        category = DeviceCategoryFactory(category_id=2, name='Plugs')
        device = DeviceFactory(mac='02:00:00:00:00:bb', name='plug-1', category=category)

        entry = device.to_entry()

        assert (entry.mac, entry.category_id, entry.name, entry.category_name) == (
            '02:00:00:00:00:bb', 2, 'plug-1', 'Plugs'
        )


@pytest.mark.django_db
class TestTrainedModel:
    """Tests for the model registry."""

    def test_str(self):
        model = TrainedModelFactory(name='cascade-a', algo='cascade')
        assert str(model) == 'cascade-a (cascade)'

    def test_featurize_params(self):
        model = TrainedModelFactory(interval_secs=60.0, window=4, overlap=2)

        params = model.featurize_params()

        assert params.interval_secs == 60.0
        assert params.window == 4
        assert params.overlap == 2
        assert params.feature_names[0] == 'user_packets'
        assert len(params.feature_names) == 6


@pytest.mark.django_db
class TestCaptureUploadModel:
    """Tests for capture upload status tracking."""

    def test_kept_percentage(self):
        upload = CaptureUploadFactory(total_rows=8, record_count=6)
        assert upload.kept_percentage == 75.0

    def test_kept_percentage_without_rows(self):
        assert CaptureUploadFactory().kept_percentage == 0.0

    def test_record_parse_warnings_keeps_last(self):
        upload = CaptureUploadFactory()
        warnings = [ParseWarning(line, f'bad row {line}') for line in range(2, 7)]

        upload.record_parse_warnings(warnings, limit=2)

        assert upload.warning_count == 5
        assert upload.parse_warnings == [
            {'line': 5, 'message': 'bad row 5'},
            {'line': 6, 'message': 'bad row 6'},
        ]

    def test_mark_completed(self):
        upload = CaptureUploadFactory()
        upload.mark_completed()

        upload.refresh_from_db()
        assert upload.status == CaptureUpload.Status.COMPLETED
        assert upload.completed_at is not None

    def test_mark_completed_with_warnings_is_partial(self):
        upload = CaptureUploadFactory(warning_count=1)
        upload.mark_completed()
        assert upload.status == CaptureUpload.Status.PARTIALLY_COMPLETED

    def test_mark_failed(self):
        upload = CaptureUploadFactory()

        upload.mark_failed('broken file')

        upload.refresh_from_db()
        assert upload.status == CaptureUpload.Status.FAILED
        assert upload.error_messages[0]['message'] == 'broken file'


@pytest.mark.django_db
class TestExperimentRunModel:
    """Tests for experiment run bookkeeping."""

    def test_defaults(self):
        run = ExperimentRunFactory()
        assert run.status == ExperimentRun.Status.PENDING
        assert run.train_ratio == 1.0
        assert str(run) == 'knn experiment (pending)'

    def test_mark_completed(self):
        run = ExperimentRunFactory()

        run.mark_completed([{'accuracy': 0.5}, {'accuracy': 1.0}], mean=0.75, std=0.25, best=1.0)

        run.refresh_from_db()
        assert run.status == ExperimentRun.Status.COMPLETED
        assert run.reports == [{'accuracy': 0.5}, {'accuracy': 1.0}]
        assert (run.mean_accuracy, run.std_accuracy, run.best_accuracy) == (0.75, 0.25, 1.0)

    def test_mark_failed(self):
        run = ExperimentRunFactory()
        run.mark_failed('repeat 0: no windows')
        assert run.status == ExperimentRun.Status.FAILED
        assert run.error_messages[-1]['message'] == 'repeat 0: no windows'


@pytest.mark.django_db
class TestDevicePrediction:
    """Tests for per-device verdicts."""

    def test_is_correct(self):
        hubs = DeviceCategoryFactory(category_id=1)
        cameras = DeviceCategoryFactory(category_id=2)
        device = DeviceFactory(category=hubs)
        upload = CaptureUploadFactory()

        right = DevicePrediction.objects.create(upload=upload, device=device, predicted_category=hubs)
        assert right.is_correct

        right.predicted_category = cameras
        assert not right.is_correct

        right.predicted_category = None
        assert not right.is_correct

    def test_one_prediction_per_device_and_upload(self):
        device = DeviceFactory()
        upload = CaptureUploadFactory()
        DevicePrediction.objects.create(upload=upload, device=device)

        with pytest.raises(IntegrityError):
            DevicePrediction.objects.create(upload=upload, device=device)
