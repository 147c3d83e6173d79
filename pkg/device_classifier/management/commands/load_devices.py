"""
flowclass load_devices --devices <device-list>
"""

from django.db import transaction

from device_classifier.ingest import categories_of, load_device_list
from device_classifier.models import Device, DeviceCategory

from ._base import FlowclassCommand


class Command(FlowclassCommand):
    help = "Create or update device categories and devices from a device list file."

    def add_arguments(self, parser):
        parser.add_argument('--devices', required=True)

    def run(self, *args, **options):
        entries = load_device_list(options['devices'])
        with transaction.atomic():
            categories = {}
            for category in categories_of(entries):
                row, _ = DeviceCategory.objects.update_or_create(
                    category_id=category.id, defaults={'name': category.name}
                )
                categories[category.id] = row
            created = 0
            for entry in entries:
                _, is_new = Device.objects.update_or_create(
                    mac=entry.mac,
                    defaults={'name': entry.name, 'category': categories[entry.category_id]},
                )
                created += is_new
        self.success(
            f"{len(categories)} categories, {len(entries)} devices ({created} new)"
        )
