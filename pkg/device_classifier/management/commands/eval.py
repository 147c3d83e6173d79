"""
flowclass eval --dataset <file> --split <file> --algo <name> --config <file>
               --repeats 5 --out <report-dir>
"""

from pathlib import Path

from device_classifier.baselines import read_classifier_config
from device_classifier.evaluation import run_experiment
from device_classifier.utils import pipeline_dir, pipeline_setting

from ._base import FlowclassCommand, add_experiment_arguments, load_experiment_source


class Command(FlowclassCommand):
    help = "Run repeated held-out-device experiments and write the reports."

    def add_arguments(self, parser):
        add_experiment_arguments(parser)
        parser.add_argument(
            '--train-ratio', type=float, default=1.0,
            help="Fraction of the training devices' windows used for fitting"
        )
        parser.add_argument('--out', default=None, help="Report directory (default: REPORT_DIR/<algo>)")

    def run(self, *args, **options):
        source, split, params = load_experiment_source(options)
        config, baseline_options = read_classifier_config(options['config'])
        repeats = options['repeats'] or int(pipeline_setting('EXPERIMENT_REPEATS'))
        base_seed = options['base_seed'] if options['base_seed'] is not None else int(pipeline_setting('BASE_SEED'))

        result = run_experiment(
            source, split, options['algo'], config, repeats, base_seed, params,
            baseline_options, options['train_ratio'],
        )

        out_dir = Path(options['out']) if options['out'] else pipeline_dir('REPORT_DIR') / options['algo']
        result.write(out_dir)
        best = max(result.reports, key=lambda report: report.accuracy)
        self.info(best.to_text())
        self.info(f"leaked test-device samples: {result.leaked_samples}")
        self.success(f"{options['algo']}: {result.summary()}; reports in {out_dir}")
