"""
Django Admin configuration for the device classifier.
"""

from django.contrib import admin
from django.utils.html import format_html

from .models import (
    CaptureUpload,
    Device,
    DeviceCategory,
    DevicePrediction,
    ExperimentRun,
    TrainedModel,
)

STATUS_COLORS = {
    'pending': 'orange',
    'processing': 'blue',
    'running': 'blue',
    'completed': 'green',
    'failed': 'red',
    'partial': 'purple',
}


def status_badge(obj):
    color = STATUS_COLORS.get(obj.status, 'gray')
    return format_html(
        '<span style="background-color: {}; color: white; padding: 3px 8px; '
        'border-radius: 3px;">{}</span>',
        color,
        obj.get_status_display()
    )


status_badge.short_description = 'Status'


@admin.register(DeviceCategory)
class DeviceCategoryAdmin(admin.ModelAdmin):
    list_display = ['category_id', 'name', 'device_count']
    ordering = ['category_id']

    def device_count(self, obj):
        return obj.devices.count()

    device_count.short_description = 'Devices'


@admin.register(Device)
class DeviceAdmin(admin.ModelAdmin):
    list_display = ['mac', 'name', 'category', 'created_at']
    list_filter = ['category']
    search_fields = ['mac', 'name']
    ordering = ['mac']
    readonly_fields = ['created_at', 'updated_at']


@admin.register(TrainedModel)
class TrainedModelAdmin(admin.ModelAdmin):
    list_display = ['name', 'algo', 'interval_secs', 'window', 'overlap', 'created_at']
    list_filter = ['algo']
    search_fields = ['name']
    readonly_fields = ['id', 'created_at', 'summary']


class DevicePredictionInline(admin.TabularInline):
    model = DevicePrediction
    extra = 0
    readonly_fields = ['device', 'predicted_category', 'window_count', 'votes']
    can_delete = False


@admin.register(CaptureUpload)
class CaptureUploadAdmin(admin.ModelAdmin):
    list_display = [
        'filename', status_badge, 'file_size_display', 'model',
        'record_count', 'warning_count', 'uploaded_by', 'created_at'
    ]
    list_filter = ['status', 'created_at', 'model']
    search_fields = ['filename', 'id', 'celery_task_id']
    readonly_fields = [
        'id', 'file_size', 'total_rows', 'record_count', 'warning_count',
        'parse_warnings', 'error_messages', 'celery_task_id', 'retry_count',
        'created_at', 'updated_at', 'completed_at'
    ]
    ordering = ['-created_at']
    inlines = [DevicePredictionInline]

    fieldsets = (
        ('File Information', {
            'fields': ('id', 'filename', 'file_path', 'file_size', 'model')
        }),
        ('Processing Status', {
            'fields': ('status', 'total_rows', 'record_count', 'warning_count', 'retry_count')
        }),
        ('Task Information', {
            'fields': ('celery_task_id',)
        }),
        ('Warnings and Errors', {
            'fields': ('parse_warnings', 'error_messages'),
            'classes': ('collapse',)
        }),
        ('Timestamps', {
            'fields': ('created_at', 'updated_at', 'completed_at', 'uploaded_by')
        }),
    )

    def file_size_display(self, obj):
        size = obj.file_size
        for unit in ['B', 'KB', 'MB', 'GB']:
            if size < 1024:
                return f"{size:.1f} {unit}"
            size /= 1024
        return f"{size:.1f} TB"

    file_size_display.short_description = 'Size'


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = [
        'id', status_badge, 'algo', 'repeats', 'mean_accuracy',
        'best_accuracy', 'requested_by', 'created_at'
    ]
    list_filter = ['status', 'algo']
    readonly_fields = [
        'id', 'mean_accuracy', 'std_accuracy', 'best_accuracy', 'reports',
        'error_messages', 'celery_task_id', 'created_at', 'updated_at', 'completed_at'
    ]
    ordering = ['-created_at']


admin.site.site_header = "flowclass Administration"
admin.site.site_title = "flowclass"
admin.site.index_title = "IoT device classification"
