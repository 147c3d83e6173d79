"""
Celery configuration for the flowclass service.

Capture classification and held-out-device experiments run as Celery tasks;
experiment repeats fan out across workers.
"""

import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

app = Celery('flowclass')

app.config_from_object('django.conf:settings', namespace='CELERY')

app.autodiscover_tasks()

app.conf.task_routes = {
    'device_classifier.tasks.process_capture_file': {'queue': 'captures'},
    'device_classifier.tasks.run_experiment_task': {'queue': 'experiments'},
    'device_classifier.tasks.run_experiment_repeat': {'queue': 'training'},
    'device_classifier.tasks.finalize_experiment': {'queue': 'experiments'},
}

app.conf.task_default_priority = 5
app.conf.task_queue_max_priority = 10

app.conf.task_annotations = {
    'device_classifier.tasks.process_capture_file': {
        'rate_limit': '10/m',
    },
}
