"""
flowclass featurize --streams <dir> --interval-secs 300 --window 6 --overlap 3
                    --features <file|default6|all> --out <dataset.csv>
"""

from pathlib import Path

from device_classifier.features import featurize_streams, write_dataset
from device_classifier.ingest import load_device_list, load_streams
from device_classifier.utils import featurize_params

from ._base import DEVICE_LIST_NAME, FlowclassCommand, feature_names


class Command(FlowclassCommand):
    help = "Segment device streams, extract features and write windowed samples."

    def add_arguments(self, parser):
        parser.add_argument('--streams', required=True, help="Stream directory written by ingest")
        parser.add_argument(
            '--devices', default=None,
            help=f"Device list with the category labels (default: <streams>/{DEVICE_LIST_NAME})"
        )
        parser.add_argument('--interval-secs', type=float, default=None)
        parser.add_argument('--window', type=int, default=None)
        parser.add_argument('--overlap', type=int, default=None)
        parser.add_argument('--features', default=None, help="Feature list file, 'default6' or 'all'")
        parser.add_argument('--out', required=True, help="Dataset file to write")

    def run(self, *args, **options):
        stream_dir = Path(options['streams'])
        devices = options['devices'] or stream_dir / DEVICE_LIST_NAME
        labels = {entry.mac: entry.category_id for entry in load_device_list(devices)}
        params = featurize_params(
            interval_secs=options['interval_secs'],
            window=options['window'],
            overlap=options['overlap'],
            feature_names=feature_names(options['features']),
        )
        samples = featurize_streams(load_streams(stream_dir), labels, params)
        if not samples:
            self.stderr.write("No device produced a full window; nothing written")
            return
        path = write_dataset(samples, options['out'])
        self.success(f"{len(samples)} windows of {params.window}x{len(params.feature_names)} -> {path}")
