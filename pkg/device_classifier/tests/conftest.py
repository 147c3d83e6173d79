"""
Pytest fixtures for flowclass tests.
"""

import numpy as np
import pytest
from django.contrib.auth.models import User
from django.core.cache import cache
from rest_framework.test import APIClient
from rest_framework_simplejwt.tokens import RefreshToken

from config.celery import app as celery_app
from device_classifier.baselines import make_classifier
from device_classifier.evaluation import SplitSpec, write_split
from device_classifier.features import WindowedSample, featurize_streams, write_dataset
from device_classifier.ingest import parse_capture, separate_streams
from device_classifier.models import Device, DeviceCategory, TrainedModel
from device_classifier.serialization import save_model

from .sample_data import CAPTURE_ROWS, DEVICE_A, DEVICE_B, SMALL_PARAMS


@pytest.fixture(autouse=True)
def eager_celery():
    """Run Celery tasks inline and let their exceptions reach the test."""
    # settings use the CELERY namespace, so the prefixed keys take precedence
    celery_app.conf.update(CELERY_TASK_ALWAYS_EAGER=True, CELERY_TASK_EAGER_PROPAGATES=True)
    yield


@pytest.fixture(autouse=True)
def flowclass_dirs(settings, tmp_path):
    """Point the pipeline directories at a per-test location."""
    settings.FLOWCLASS = {
        **settings.FLOWCLASS,
        'MODEL_DIR': tmp_path / 'models',
        'UPLOAD_DIR': tmp_path / 'uploads',
        'DATASET_DIR': tmp_path / 'datasets',
        'REPORT_DIR': tmp_path / 'reports',
    }
    cache.clear()
    return settings.FLOWCLASS


@pytest.fixture
def api_client():
    """Return an API client instance."""
    return APIClient()


@pytest.fixture
def user(db):
    """Create a test user."""
    return User.objects.create_user(
        username='testuser',
        email='test@example.com',
        password='testpass123'
    )


@pytest.fixture
def authenticated_client(api_client, user):
    """Return an authenticated API client."""
    refresh = RefreshToken.for_user(user)
    api_client.credentials(HTTP_AUTHORIZATION=f'Bearer {refresh.access_token}')
    return api_client


@pytest.fixture
def capture_csv_content():
    """A 20-row capture export of two devices talking to a gateway and to each other."""
    lines = ['No.,Time,Protocol,Length,eth.src,eth.dst,Info']
    for number, (time, protocol, length, src, dst) in enumerate(CAPTURE_ROWS, start=1):
        lines.append(f'{number},{time},{protocol},{length},{src},{dst},frame {number}')
    return '\n'.join(lines) + '\n'


@pytest.fixture
def capture_file(tmp_path, capture_csv_content):
    path = tmp_path / 'capture.csv'
    path.write_text(capture_csv_content)
    return path


@pytest.fixture
def capture(capture_file):
    return parse_capture(capture_file)


@pytest.fixture
def streams(capture):
    return separate_streams(capture, [DEVICE_A, DEVICE_B])


@pytest.fixture
def device_list_file(tmp_path):
    path = tmp_path / 'devices.txt'
    path.write_text(
        'mac,category_id,device_name,category_name\n'
        f'{DEVICE_A},1,hub-1,Hubs\n'
        f'{DEVICE_B.upper()},2,camera-1,Cameras\n'
    )
    return path


@pytest.fixture
def categories(db):
    """Two device categories."""
    return [
        DeviceCategory.objects.create(category_id=1, name='Hubs'),
        DeviceCategory.objects.create(category_id=2, name='Cameras'),
    ]


@pytest.fixture
def devices(categories):
    """The two capture devices, registered under categories 1 and 2."""
    return [
        Device.objects.create(mac=DEVICE_A, name='hub-1', category=categories[0]),
        Device.objects.create(mac=DEVICE_B, name='camera-1', category=categories[1]),
    ]


@pytest.fixture
def registered_model(db, streams, flowclass_dirs):
    """A 1-NN model trained on the capture fixture itself, registered for the capture API."""
    samples = featurize_streams(streams, {DEVICE_A: 1, DEVICE_B: 2}, SMALL_PARAMS)
    classifier = make_classifier('knn', k=1).fit(samples)
    path = save_model(classifier.model, flowclass_dirs['MODEL_DIR'] / 'knn-capture.model')
    return TrainedModel.objects.create(
        name='knn-capture',
        algo=TrainedModel.Algorithm.KNN,
        file_path=str(path),
        interval_secs=SMALL_PARAMS.interval_secs,
        window=SMALL_PARAMS.window,
        overlap=SMALL_PARAMS.overlap,
        feature_names=list(SMALL_PARAMS.feature_names),
    )


@pytest.fixture
def sample_factory():
    """Build a WindowedSample from a (t, F) array-like."""
    def make(features, label=1, mac=DEVICE_A, schema=None):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        schema = schema or tuple(f'f{k}' for k in range(features.shape[1]))
        return WindowedSample(features, label, mac, schema)
    return make


@pytest.fixture
def category_dataset():
    """
    8 devices in 4 well-separated categories, 5 windows of 3 x 2 features each.

    Device 02:00:00:00:0c:0d belongs to category c; d = 1 devices train, d = 2 test.
    """
    rng = np.random.default_rng(7)
    samples = []
    for category in range(1, 5):
        for device in (1, 2):
            mac = f'02:00:00:00:{category:02x}:{device:02x}'
            for _ in range(5):
                features = category * 10.0 + rng.uniform(-1.0, 1.0, size=(3, 2))
                samples.append(WindowedSample(features, category, mac, ('f0', 'f1')))
    return samples


@pytest.fixture
def category_split():
    return SplitSpec(
        train=tuple(f'02:00:00:00:{c:02x}:01' for c in range(1, 5)),
        test=tuple(f'02:00:00:00:{c:02x}:02' for c in range(1, 5)),
    )


@pytest.fixture
def experiment_files(flowclass_dirs, category_dataset, category_split):
    """The category dataset and its split written to DATASET_DIR, as the experiment API expects."""
    dataset = write_dataset(category_dataset, flowclass_dirs['DATASET_DIR'] / 'dataset.csv')
    split = write_split(category_split, flowclass_dirs['DATASET_DIR'] / 'split.txt')
    return dataset, split
