"""
Shared plumbing for the flowclass management commands.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

from django.core.management.base import BaseCommand, CommandError

from device_classifier.evaluation import (
    SplitSpec,
    StreamCorpus,
    eligible_devices,
    load_split,
    restrict_categories,
)
from device_classifier.exceptions import FlowclassError, UsageError
from device_classifier.features import (
    FULL_SCHEMA,
    DEFAULT_FEATURES,
    FeaturizeParams,
    WindowedSample,
    read_dataset,
)
from device_classifier.ingest import categories_of, load_device_list, load_streams, parse_capture
from device_classifier.textfiles import read_token_list
from device_classifier.utils import featurize_params, pipeline_setting

logger = logging.getLogger('device_classifier.commands')

DEVICE_LIST_NAME = 'devices.txt'

FEATURE_PRESETS = {
    'default6': DEFAULT_FEATURES,
    'all': FULL_SCHEMA,
}

ExperimentSource = Union[StreamCorpus, List[WindowedSample]]


class FlowclassCommand(BaseCommand):
    """
    Base for pipeline commands: subclasses implement ``run`` and raise library errors
    freely; they leave the command as a one-line CommandError.
    """

    def run(self, *args, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except FlowclassError as e:
            logger.debug(f"{type(e).__name__} in {self.__module__}", exc_info=True)
            raise CommandError(f"{type(e).__name__}: {e}") from e
        except OSError as e:
            raise CommandError(str(e)) from e

    def info(self, message: str) -> None:
        self.stdout.write(message)

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))


def feature_names(spec: Optional[str]) -> Optional[Tuple[str, ...]]:
    """``default6``, ``all``, or a file listing one feature name per line."""
    if spec is None:
        return None
    if spec.strip().lower() in FEATURE_PRESETS:
        return FEATURE_PRESETS[spec.strip().lower()]
    return tuple(read_token_list(Path(spec)))


def float_list(text: str) -> Tuple[float, ...]:
    """Comma- or space-separated numbers."""
    try:
        return tuple(float(v) for v in text.replace(',', ' ').split())
    except ValueError as e:
        raise CommandError(f"Expected a list of numbers, got '{text}'") from e


def add_experiment_arguments(parser):
    """Source, split and classifier options shared by eval and sweep."""
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--dataset', help="Windowed dataset written by featurize")
    source.add_argument('--streams', help="Stream directory written by ingest")
    source.add_argument('--capture', help="Capture CSV export (needs --devices)")
    parser.add_argument('--devices', default=None, help="Device list for --streams or --capture")
    parser.add_argument('--split', required=True, help="Split file with [train] and [test] sections")
    parser.add_argument('--algo', default='cascade', help="cascade, knn, tree, lstm or cnn")
    parser.add_argument('--config', default=None, help="key = value classifier config file")
    parser.add_argument('--repeats', type=int, default=None)
    parser.add_argument('--base-seed', type=int, default=None)
    parser.add_argument('--interval-secs', type=float, default=None)
    parser.add_argument('--window', type=int, default=None)
    parser.add_argument('--overlap', type=int, default=None)
    parser.add_argument('--features', default=None, help="Feature list file, 'default6' or 'all'")
    parser.add_argument(
        '--categories', default=None,
        help="Keep only these category ids (comma-separated), renumbered 1..n"
    )
    parser.add_argument(
        '--filter-devices', action='store_true',
        help="Drop rarely active devices and single-device categories (streams or capture only)"
    )


def _stream_corpus(options) -> StreamCorpus:
    devices = options['devices']
    if devices is None and options['streams']:
        devices = Path(options['streams']) / DEVICE_LIST_NAME
    if devices is None:
        raise UsageError("--capture needs --devices")
    entries = load_device_list(devices)
    if options['capture']:
        return StreamCorpus.from_capture(parse_capture(options['capture']), entries)
    labels = {entry.mac: entry.category_id for entry in entries}
    streams = {mac: s for mac, s in load_streams(options['streams']).items() if mac in labels}
    return StreamCorpus(streams, {mac: labels[mac] for mac in streams}, categories_of(entries))


def load_experiment_source(options) -> Tuple[ExperimentSource, SplitSpec, FeaturizeParams]:
    """
    (source, split, params) for an experiment command. The split is restricted to the
    devices left after filtering or category restriction.
    """
    params = featurize_params(
        interval_secs=options['interval_secs'],
        window=options['window'],
        overlap=options['overlap'],
        feature_names=feature_names(options['features']),
    )
    split = load_split(options['split'])

    if options['dataset']:
        if options['filter_devices']:
            raise UsageError("--filter-devices needs --streams or --capture")
        source: ExperimentSource = read_dataset(options['dataset'])
    else:
        source = _stream_corpus(options)
        if options['filter_devices']:
            source = eligible_devices(
                source, params.interval_secs, float(pipeline_setting('MIN_ACTIVE_FRACTION'))
            )
            split = split.restricted_to(source.streams)

    if options['categories']:
        ids = [int(v) for v in options['categories'].replace(',', ' ').split()]
        source, _ = restrict_categories(source, ids)
        if isinstance(source, StreamCorpus):
            split = split.restricted_to(source.labels)
        else:
            split = split.restricted_to({s.device_mac for s in source})
    return source, split, params
