"""
flowclass train --dataset <file> [--config <file>] [--algo cascade|knn|tree|lstm|cnn]
                --model-out <file> [--register <name>]
"""

from device_classifier.baselines import ALGORITHMS, make_classifier, read_classifier_config
from device_classifier.features import read_dataset
from device_classifier.models import TrainedModel
from device_classifier.serialization import model_summary, save_model
from device_classifier.utils import pipeline_dir, pipeline_setting

from ._base import FlowclassCommand


class Command(FlowclassCommand):
    help = "Fit a classifier on a windowed dataset and save it."

    def add_arguments(self, parser):
        parser.add_argument('--dataset', required=True)
        parser.add_argument('--config', default=None, help="key = value classifier config file")
        parser.add_argument('--algo', choices=ALGORITHMS, default='cascade')
        parser.add_argument('--seed', type=int, default=None, help="Overrides the config seed")
        parser.add_argument('--model-out', default=None, help="Model file (default: MODEL_DIR/<name>.model)")
        parser.add_argument(
            '--register', metavar='NAME', default=None,
            help="Add the model to the registry used by the capture API"
        )
        parser.add_argument(
            '--interval-secs', type=float, default=None,
            help="Segmentation interval the dataset was built with (recorded on registration)"
        )
        parser.add_argument('--overlap', type=int, default=None, help="Recorded on registration")

    def run(self, *args, **options):
        samples = read_dataset(options['dataset'])
        config, baseline_options = read_classifier_config(options['config'])
        if options['seed'] is not None:
            config = config.with_changes(seed=options['seed'])

        classifier = make_classifier(options['algo'], config, **baseline_options)
        classifier.fit(samples)
        model = classifier.model

        name = options['register'] or f"{options['algo']}-seed{config.seed}"
        path = options['model_out'] or pipeline_dir('MODEL_DIR') / f"{name}.model"
        path = save_model(model, path)
        summary = model_summary(model)
        for line in summary:
            self.info(line)
        self.success(f"Saved {options['algo']} model trained on {len(samples)} windows to {path}")

        if options['register']:
            registered, created = TrainedModel.objects.update_or_create(
                name=options['register'],
                defaults={
                    'algo': options['algo'],
                    'file_path': str(path.resolve()),
                    'interval_secs': options['interval_secs'] or float(pipeline_setting('INTERVAL_SECS')),
                    'window': samples[0].window,
                    'overlap': options['overlap'] if options['overlap'] is not None
                    else min(int(pipeline_setting('OVERLAP')), samples[0].window - 1),
                    'feature_names': list(samples[0].schema),
                    'config': {**config.to_mapping(), **{k: str(v) for k, v in baseline_options.items()}},
                    'summary': '\n'.join(summary),
                }
            )
            self.success(f"{'Registered' if created else 'Updated'} model '{registered.name}' ({registered.id})")
