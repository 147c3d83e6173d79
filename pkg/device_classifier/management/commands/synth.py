"""
flowclass synth --scenario <file|default|binary> --duration-days 19 --seed <n>
                --out <capture.csv> --labels-out <device-list>
"""

from pathlib import Path

from device_classifier.exceptions import ConfigurationError
from device_classifier.ingest import write_capture, write_device_list
from device_classifier.synth import bundled_scenario, generate_scenario, load_scenario

from ._base import FlowclassCommand


def scenario_path(spec: str) -> Path:
    """A scenario file, or the name of a bundled one ('default', 'binary')."""
    path = Path(spec)
    if path.is_file():
        return path
    try:
        return bundled_scenario(spec if spec.endswith('.scenario') else f"{spec}.scenario")
    except ConfigurationError:
        raise ConfigurationError(f"Scenario '{spec}' is neither a file nor a bundled scenario")


class Command(FlowclassCommand):
    help = "Generate a synthetic multi-device capture from a scenario file."

    def add_arguments(self, parser):
        parser.add_argument('--scenario', default='default')
        parser.add_argument('--duration-days', type=float, default=None)
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--out', required=True, help="Capture CSV to write")
        parser.add_argument('--labels-out', required=True, help="Device list to write")
        parser.add_argument(
            '--split-out', default=None,
            help="Also copy the scenario's bundled split file here, when it has one"
        )

    def run(self, *args, **options):
        path = scenario_path(options['scenario'])
        scenario = load_scenario(path)
        capture, _ = generate_scenario(scenario, options['duration_days'], options['seed'])
        write_capture(capture, options['out'])
        write_device_list(scenario.device_entries(), options['labels_out'])

        if options['split_out']:
            split = path.with_suffix('.split')
            if not split.is_file():
                raise ConfigurationError(f"Scenario {path} has no split file next to it")
            split_out = Path(options['split_out'])
            split_out.parent.mkdir(parents=True, exist_ok=True)
            split_out.write_text(split.read_text(encoding='utf-8'), encoding='utf-8')

        self.success(
            f"{len(capture)} packets from {len(scenario.devices)} devices -> {options['out']}"
        )
