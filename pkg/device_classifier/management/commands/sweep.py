"""
flowclass sweep --param {interval|window|ratio} --values <list> --streams <dir> --split <file> ...
"""

from pathlib import Path

from device_classifier.baselines import read_classifier_config
from device_classifier.evaluation import sweep
from device_classifier.utils import pipeline_dir, pipeline_setting

from ._base import FlowclassCommand, add_experiment_arguments, float_list, load_experiment_source


class Command(FlowclassCommand):
    help = (
        "Mean accuracy of repeated experiments across values of T, t or the train ratio. "
        "Window sweeps use an overlap of half the window."
    )

    def add_arguments(self, parser):
        parser.add_argument('--param', required=True, choices=['interval', 'window', 'ratio'])
        parser.add_argument('--values', required=True, help="Comma-separated values")
        add_experiment_arguments(parser)
        parser.add_argument('--out', default=None, help="Results table (default: REPORT_DIR/sweep-<param>.csv)")

    def run(self, *args, **options):
        source, split, params = load_experiment_source(options)
        config, baseline_options = read_classifier_config(options['config'])
        repeats = options['repeats'] or int(pipeline_setting('EXPERIMENT_REPEATS'))
        base_seed = options['base_seed'] if options['base_seed'] is not None else int(pipeline_setting('BASE_SEED'))

        result = sweep(
            options['param'], float_list(options['values']), source, split,
            options['algo'], config, repeats, base_seed, params, baseline_options,
        )
        out = Path(options['out']) if options['out'] else pipeline_dir('REPORT_DIR') / f"sweep-{options['param']}.csv"
        result.write(out)
        self.info(result.to_frame().to_string(index=False))
        self.success(f"Sweep table written to {out}")
