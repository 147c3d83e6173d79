"""
Serializers for the device classifier API.

Provides serialization/deserialization for:
- Device categories and the device registry
- Trained models
- Capture uploads and their per-device predictions
- Experiment runs
- User registration
"""

from rest_framework import serializers
from django.contrib.auth.models import User
from django.contrib.auth.password_validation import validate_password

from .cascade import CascadeConfig
from .exceptions import ConfigurationError, MacAddressError
from .models import (
    CaptureUpload,
    Device,
    DeviceCategory,
    DevicePrediction,
    ExperimentRun,
    TrainedModel,
)
from .traffic_model import normalize_mac
from .utils import pipeline_dir

MAX_CAPTURE_SIZE = 500 * 1024 * 1024  # 500 MB


def experiment_file(value: str, kind: str) -> str:
    """
    Resolve an experiment input path.

    Relative paths are taken from DATASET_DIR; the resolved file must sit under
    DATASET_DIR or UPLOAD_DIR.
    """
    roots = [pipeline_dir(name).resolve() for name in ('DATASET_DIR', 'UPLOAD_DIR')]
    path = (roots[0] / value).resolve()
    if not any(path.is_relative_to(root) for root in roots):
        raise serializers.ValidationError(f"{kind} file must be inside the dataset or upload directory.")
    if not path.is_file():
        raise serializers.ValidationError(f"{kind} file does not exist.")
    return str(path)


class DeviceCategorySerializer(serializers.ModelSerializer):
    device_count = serializers.SerializerMethodField()

    class Meta:
        model = DeviceCategory
        fields = ['category_id', 'name', 'device_count']

    def get_device_count(self, obj):
        return obj.devices.count()


class DeviceSerializer(serializers.ModelSerializer):
    """Registry entry; the category is written by its 1-based id."""

    category = serializers.SlugRelatedField(
        slug_field='category_id',
        queryset=DeviceCategory.objects.all()
    )
    category_name = serializers.CharField(source='category.name', read_only=True)

    class Meta:
        model = Device
        fields = ['mac', 'name', 'category', 'category_name', 'created_at', 'updated_at']
        read_only_fields = ['created_at', 'updated_at']

    def validate_mac(self, value):
        """Store MACs in canonical lowercase colon form."""
        try:
            mac = normalize_mac(value)
        except MacAddressError as e:
            raise serializers.ValidationError(str(e))
        if Device.objects.filter(mac=mac).exists():
            raise serializers.ValidationError(f"Device {mac} is already registered")
        return mac


class TrainedModelSerializer(serializers.ModelSerializer):
    class Meta:
        model = TrainedModel
        fields = [
            'id', 'name', 'algo', 'interval_secs', 'window', 'overlap',
            'feature_names', 'config', 'summary', 'created_at'
        ]
        read_only_fields = fields


class DevicePredictionSerializer(serializers.ModelSerializer):
    mac = serializers.CharField(source='device.mac', read_only=True)
    true_category = serializers.IntegerField(source='device.category.category_id', read_only=True)
    predicted_category = serializers.IntegerField(
        source='predicted_category.category_id', read_only=True, allow_null=True
    )
    predicted_name = serializers.CharField(
        source='predicted_category.name', read_only=True, allow_null=True
    )

    class Meta:
        model = DevicePrediction
        fields = [
            'mac', 'true_category', 'predicted_category', 'predicted_name',
            'window_count', 'votes', 'is_correct'
        ]
        read_only_fields = fields


class CaptureUploadSerializer(serializers.ModelSerializer):
    """Status and results of a capture classification."""

    kept_percentage = serializers.FloatField(read_only=True)
    uploaded_by = serializers.StringRelatedField(read_only=True)
    model = serializers.CharField(source='model.name', read_only=True)
    predictions = DevicePredictionSerializer(many=True, read_only=True)

    class Meta:
        model = CaptureUpload
        fields = [
            'id', 'filename', 'file_size', 'model', 'status', 'total_rows',
            'record_count', 'kept_percentage', 'warning_count', 'parse_warnings',
            'error_messages', 'retry_count', 'predictions', 'created_at',
            'updated_at', 'completed_at', 'uploaded_by'
        ]
        read_only_fields = fields


class CaptureUploadRequestSerializer(serializers.Serializer):
    """A capture CSV and the registered model to classify it with."""

    file = serializers.FileField(
        help_text="Packet-analyzer CSV export (time, length, protocol, eth.src, eth.dst, info)"
    )
    model = serializers.PrimaryKeyRelatedField(queryset=TrainedModel.objects.all())

    def validate_file(self, value):
        if not value.name.lower().endswith(('.csv', '.tsv', '.txt')):
            raise serializers.ValidationError("Only CSV capture exports are accepted.")
        if value.size > MAX_CAPTURE_SIZE:
            raise serializers.ValidationError("File size exceeds maximum allowed size of 500 MB.")
        return value


class ExperimentRunSerializer(serializers.ModelSerializer):
    requested_by = serializers.StringRelatedField(read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'status', 'algo', 'dataset_path', 'split_path', 'config',
            'repeats', 'base_seed', 'train_ratio', 'mean_accuracy', 'std_accuracy',
            'best_accuracy', 'reports', 'error_messages', 'created_at',
            'completed_at', 'requested_by'
        ]
        read_only_fields = [
            'id', 'status', 'mean_accuracy', 'std_accuracy', 'best_accuracy',
            'reports', 'error_messages', 'created_at', 'completed_at', 'requested_by'
        ]

    def validate_dataset_path(self, value):
        return experiment_file(value, 'Dataset')

    def validate_split_path(self, value):
        return experiment_file(value, 'Split')

    def validate_train_ratio(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError("train_ratio must be in (0, 1].")
        return value

    def validate_config(self, value):
        """Classifier hyperparameters; baseline options k and max_depth are allowed too."""
        if not isinstance(value, dict):
            raise serializers.ValidationError("config must be an object of key/value pairs.")
        cascade_keys = {k: v for k, v in value.items() if k not in ('k', 'max_depth')}
        try:
            CascadeConfig.from_mapping(cascade_keys)
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e))
        return value


class UserRegistrationSerializer(serializers.ModelSerializer):
    """Serializer for user registration."""

    password = serializers.CharField(
        write_only=True,
        required=True,
        validators=[validate_password],
        style={'input_type': 'password'}
    )
    password_confirm = serializers.CharField(
        write_only=True,
        required=True,
        style={'input_type': 'password'}
    )
    email = serializers.EmailField(required=True)

    class Meta:
        model = User
        fields = ['username', 'email', 'password', 'password_confirm', 'first_name', 'last_name']
        extra_kwargs = {
            'first_name': {'required': False},
            'last_name': {'required': False},
        }

    def validate(self, attrs):
        if attrs['password'] != attrs['password_confirm']:
            raise serializers.ValidationError({
                "password_confirm": "Password fields didn't match."
            })
        return attrs

    def validate_email(self, value):
        if User.objects.filter(email=value).exists():
            raise serializers.ValidationError("A user with this email already exists.")
        return value

    def create(self, validated_data):
        validated_data.pop('password_confirm')
        return User.objects.create_user(
            username=validated_data['username'],
            email=validated_data['email'],
            password=validated_data['password'],
            first_name=validated_data.get('first_name', ''),
            last_name=validated_data.get('last_name', '')
        )
