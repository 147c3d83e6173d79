"""
URL routing for the device classifier API.
"""

from django.urls import path, include
from rest_framework.routers import DefaultRouter

from .views import (
    CaptureUploadStatusView,
    CaptureUploadView,
    DeviceCategoryViewSet,
    DeviceViewSet,
    ExperimentRunViewSet,
    HealthCheckView,
    TrainedModelViewSet,
    UserRegistrationView,
)

router = DefaultRouter()
router.register(r'categories', DeviceCategoryViewSet, basename='category')
router.register(r'devices', DeviceViewSet, basename='device')
router.register(r'models', TrainedModelViewSet, basename='trained-model')
router.register(r'experiments', ExperimentRunViewSet, basename='experiment')

urlpatterns = [
    # Health check (no auth required)
    path('health/', HealthCheckView.as_view(), name='health-check'),

    # User registration (no auth required)
    path('auth/register/', UserRegistrationView.as_view(), name='user-register'),

    path('', include(router.urls)),

    # Capture classification
    path('captures/', CaptureUploadView.as_view(), name='capture-upload'),
    path(
        'captures/<str:upload_id>/status/',
        CaptureUploadStatusView.as_view(),
        name='capture-status'
    ),
]
