"""
flowclass ingest --input <capture.csv> --devices <device-list> --out <stream-dir> [--profile]
"""

from pathlib import Path

from device_classifier.features import activity_profile
from device_classifier.ingest import (
    load_device_list,
    parse_capture,
    separate_streams,
    write_device_list,
    write_streams,
)
from device_classifier.utils import pipeline_setting

from ._base import DEVICE_LIST_NAME, FlowclassCommand


class Command(FlowclassCommand):
    help = "Parse a capture export and write one stream file per listed device."

    def add_arguments(self, parser):
        parser.add_argument('--input', required=True, help="Capture CSV export")
        parser.add_argument('--devices', required=True, help="MAC,category_id,device_name list")
        parser.add_argument('--out', required=True, help="Stream directory to create")
        parser.add_argument('--chunk-size', type=int, default=None)
        parser.add_argument(
            '--profile', action='store_true',
            help="Print peak and average packets per minute per device"
        )

    def run(self, *args, **options):
        chunk_size = options['chunk_size'] or pipeline_setting('INGEST_CHUNK_SIZE')
        capture = parse_capture(options['input'], chunk_size)
        entries = load_device_list(options['devices'])
        streams = separate_streams(capture, [entry.mac for entry in entries])

        out_dir = Path(options['out'])
        write_streams(streams, out_dir)
        write_device_list(entries, out_dir / DEVICE_LIST_NAME)

        self.info(
            f"{len(capture)} records ({len(capture.parse_warnings)} rows skipped) -> "
            f"{len(streams)} streams in {out_dir}"
        )
        if options['profile']:
            self.info(f"{'device':<19} {'max/min':>8} {'mean/min':>9} {'active':>7}")
            for mac, stream in sorted(streams.items()):
                profile = activity_profile(stream, 60.0)
                self.info(
                    f"{mac:<19} {profile.max_per_bin:>8.0f} {profile.mean_per_bin:>9.2f} "
                    f"{profile.active_fraction:>7.1%}"
                )
