"""
factory-boy factories for the device classifier models.
"""

import factory

from device_classifier.models import (
    CaptureUpload,
    Device,
    DeviceCategory,
    ExperimentRun,
    TrainedModel,
)
from device_classifier.traffic_model import normalize_mac


class DeviceCategoryFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = DeviceCategory
        django_get_or_create = ('category_id',)

    category_id = factory.Sequence(lambda n: n + 1)
    name = factory.LazyAttribute(lambda o: f'Category {o.category_id}')


class DeviceFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = Device

    mac = factory.Sequence(lambda n: normalize_mac(f'02000000{n:04x}'))
    name = factory.Sequence(lambda n: f'device-{n}')
    category = factory.SubFactory(DeviceCategoryFactory)


class TrainedModelFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = TrainedModel

    name = factory.Sequence(lambda n: f'model-{n}')
    algo = TrainedModel.Algorithm.KNN
    file_path = factory.LazyAttribute(lambda o: f'/tmp/{o.name}.model')
    interval_secs = 300.0
    window = 6
    overlap = 3
    feature_names = factory.LazyFunction(lambda: [
        'user_packets', 'user_length_mean', 'user_length_max',
        'control_packets', 'control_length_mean', 'control_length_max',
    ])


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRun

    algo = TrainedModel.Algorithm.KNN
    dataset_path = '/tmp/dataset.csv'
    split_path = '/tmp/split.txt'
    repeats = 2


class CaptureUploadFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = CaptureUpload

    filename = factory.Sequence(lambda n: f'capture-{n}.csv')
    file_path = factory.LazyAttribute(lambda o: f'/tmp/{o.filename}')
    file_size = 1024
    model = factory.SubFactory(TrainedModelFactory)
