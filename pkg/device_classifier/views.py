"""
API views for the device classifier.

Provides endpoints for:
- Device categories and the device registry
- The trained model registry
- Capture upload and classification status
- Held-out-device experiments
- User registration
"""

import logging
import os
import uuid

from django.core.exceptions import ValidationError
from rest_framework import mixins, permissions, status, viewsets
from rest_framework.parsers import FormParser, MultiPartParser
from rest_framework.response import Response
from rest_framework.views import APIView

from .models import CaptureUpload, Device, DeviceCategory, ExperimentRun, TrainedModel
from .serializers import (
    CaptureUploadRequestSerializer,
    CaptureUploadSerializer,
    DeviceCategorySerializer,
    DeviceSerializer,
    ExperimentRunSerializer,
    TrainedModelSerializer,
    UserRegistrationSerializer,
)
from .tasks import process_capture_file, run_experiment_task
from .utils import pipeline_dir

logger = logging.getLogger(__name__)


class HealthCheckView(APIView):
    """Health check endpoint for container orchestration."""

    permission_classes = [permissions.AllowAny]

    def get(self, request):
        return Response({
            'status': 'healthy',
            'service': 'flowclass',
            'version': '1.0.0'
        })


class UserRegistrationView(APIView):
    """Allows new users to register for API access."""

    permission_classes = [permissions.AllowAny]

    def post(self, request):
        serializer = UserRegistrationSerializer(data=request.data)

        if serializer.is_valid():
            user = serializer.save()
            logger.info(f"New user registered: {user.username}")
            return Response({
                'message': 'User registered successfully',
                'username': user.username,
                'email': user.email
            }, status=status.HTTP_201_CREATED)

        return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)


class DeviceCategoryViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = DeviceCategory.objects.all()
    serializer_class = DeviceCategorySerializer
    lookup_field = 'category_id'


class DeviceViewSet(
    mixins.ListModelMixin,
    mixins.RetrieveModelMixin,
    mixins.CreateModelMixin,
    viewsets.GenericViewSet,
):
    """
    The device registry.

    GET /api/devices/ lists registered devices; POST registers one
    (``mac``, ``name``, ``category`` as the 1-based category id).
    """

    queryset = Device.objects.select_related('category')
    serializer_class = DeviceSerializer
    lookup_field = 'mac'
    lookup_value_regex = '[^/]+'

    def get_queryset(self):
        queryset = super().get_queryset()
        category = self.request.query_params.get('category')
        if category:
            queryset = queryset.filter(category__category_id=category)
        return queryset


class TrainedModelViewSet(viewsets.ReadOnlyModelViewSet):
    """Models registered with ``flowclass train --register``."""

    queryset = TrainedModel.objects.all()
    serializer_class = TrainedModelSerializer


class CaptureUploadView(APIView):
    """
    POST /api/captures/

    Accepts a capture CSV plus the id of a registered model. The file is saved
    and classified asynchronously; poll the status URL for per-device verdicts.
    """

    parser_classes = [MultiPartParser, FormParser]

    def get(self, request):
        uploads = CaptureUpload.objects.select_related('model')
        if not request.user.is_staff:
            uploads = uploads.filter(uploaded_by=request.user)
        serializer = CaptureUploadSerializer(uploads[:100], many=True)
        return Response({
            'count': uploads.count(),
            'results': serializer.data
        })

    def post(self, request):
        serializer = CaptureUploadRequestSerializer(data=request.data)

        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)

        uploaded_file = serializer.validated_data['file']
        model = serializer.validated_data['model']

        upload_id = uuid.uuid4()
        file_extension = os.path.splitext(uploaded_file.name)[1]
        file_path = pipeline_dir('UPLOAD_DIR') / f"{upload_id}{file_extension}"

        with open(file_path, 'wb+') as destination:
            for chunk in uploaded_file.chunks():
                destination.write(chunk)

        upload = CaptureUpload.objects.create(
            id=upload_id,
            filename=uploaded_file.name,
            file_path=str(file_path),
            file_size=uploaded_file.size,
            model=model,
            uploaded_by=request.user if request.user.is_authenticated else None
        )

        task = process_capture_file.delay(str(upload.id))

        CaptureUpload.objects.filter(id=upload.id).update(celery_task_id=task.id)

        logger.info(
            f"Capture upload initiated: {upload.filename} "
            f"(ID: {upload.id}, model: {model.name}, Task: {task.id})"
        )

        return Response({
            'message': 'Capture uploaded successfully. Classification started.',
            'upload_id': str(upload.id),
            'task_id': task.id,
            'status_url': f'/api/captures/{upload.id}/status/'
        }, status=status.HTTP_202_ACCEPTED)


class CaptureUploadStatusView(APIView):
    """GET /api/captures/{upload_id}/status/"""

    def get(self, request, upload_id: str):
        try:
            upload = CaptureUpload.objects.select_related('model').get(id=upload_id)
        except (CaptureUpload.DoesNotExist, ValueError, ValidationError):
            return Response(
                {'error': 'Capture upload not found'},
                status=status.HTTP_404_NOT_FOUND
            )

        serializer = CaptureUploadSerializer(upload)
        return Response(serializer.data)


class ExperimentRunViewSet(
    mixins.ListModelMixin,
    mixins.RetrieveModelMixin,
    mixins.CreateModelMixin,
    viewsets.GenericViewSet,
):
    """
    Held-out-device experiments over a windowed dataset and a split file.

    POST queues the run; its repeats execute as a Celery chord.
    """

    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer

    def create(self, request, *args, **kwargs):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        run = serializer.save(
            requested_by=request.user if request.user.is_authenticated else None
        )

        task = run_experiment_task.delay(str(run.id))
        logger.info(f"Experiment {run.id} queued ({run.algo}, {run.repeats} repeats, task {task.id})")

        run.refresh_from_db()
        return Response(
            {**self.get_serializer(run).data, 'task_id': task.id},
            status=status.HTTP_202_ACCEPTED
        )
