"""
flowclass predict --model <file> --dataset <file> --out <labels-file>
"""

from pathlib import Path

import numpy as np
import pandas as pd

from device_classifier.evaluation import EvalReport, majority_label
from device_classifier.features import read_dataset
from device_classifier.serialization import load_model

from ._base import FlowclassCommand


class Command(FlowclassCommand):
    help = "Predict the category of every window in a dataset with a saved model."

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True)
        parser.add_argument('--dataset', required=True)
        parser.add_argument('--out', required=True, help="Per-window labels file")

    def run(self, *args, **options):
        model = load_model(options['model'])
        samples = read_dataset(options['dataset'])
        predicted = np.asarray(model.predict(samples), dtype=np.int64)

        frame = pd.DataFrame({
            'device_mac': [s.device_mac for s in samples],
            'label': [s.label for s in samples],
            'predicted': predicted,
        })
        frame.insert(1, 'window', frame.groupby('device_mac').cumcount())
        out = Path(options['out'])
        out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, lineterminator='\n')

        for mac, group in frame.groupby('device_mac', sort=True):
            self.info(f"{mac}: category {majority_label(group['predicted'].to_numpy())} "
                      f"({len(group)} windows)")
        labelled = frame['label'].to_numpy() > 0
        if labelled.all():
            report = EvalReport.from_predictions(frame['label'], predicted, frame['device_mac'])
            self.info(f"window accuracy {report.accuracy:.4f}")
        self.success(f"{len(frame)} predictions written to {out}")
