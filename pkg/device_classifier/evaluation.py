"""
Held-out-device evaluation: splits, repeated seeded runs, reports and sweeps.

Every test device is absent from training. A LeakageAudit counts, per device, the
samples that classifier fitting, model training and normalization statistics
actually consumed, so a run can prove no test-device sample was ever seen.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .baselines import make_classifier
from .cascade import CascadeConfig, Classifier
from .exceptions import ConfigurationError, DataError, ParameterError, SplitValidationError
from .features import (
    FeaturizeParams,
    WindowedSample,
    featurize_streams,
    observe_fits,
    segment_ids,
    shuffle_samples,
)
from .ingest import CaptureFile, DeviceEntry, categories_of, separate_streams
from .textfiles import read_sections
from .traffic_model import DeviceCategory, DeviceStream, normalize_mac

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
ClassifierFactory = Callable[[int], Classifier]

RATIO_NOTE = (
    'train_ratio is a sample-level fraction of the windows of the training devices; '
    'test devices stay held out'
)
SWEEP_PARAMETERS = {
    'interval': 'interval', 'interval_t': 'interval', 't_interval': 'interval',
    'window': 'window', 'window_t': 'window',
    'ratio': 'ratio', 'train_ratio': 'ratio',
}


@dataclass(frozen=True)
class SplitSpec:
    train: Tuple[str, ...]
    test: Tuple[str, ...]

    def __post_init__(self):
        train = tuple(normalize_mac(mac) for mac in self.train)
        test = tuple(normalize_mac(mac) for mac in self.test)
        object.__setattr__(self, 'train', train)
        object.__setattr__(self, 'test', test)
        if not train or not test:
            raise SplitValidationError("A split needs at least one train and one test device")
        overlap = sorted(set(train) & set(test))
        if overlap:
            raise SplitValidationError(f"Test devices also listed for training: {overlap}")

    def validate(self, labels: Mapping[str, int]) -> None:
        """
        Check the split against device labels.

        Raises:
            SplitValidationError: if a split device has no label or a test category
                has no training device
        """
        unknown = sorted(mac for mac in self.train + self.test if mac not in labels)
        if unknown:
            raise SplitValidationError(f"Split devices without a category label: {unknown}")
        trained = {labels[mac] for mac in self.train}
        untrained = sorted({labels[mac] for mac in self.test} - trained)
        if untrained:
            raise SplitValidationError(f"Categories {untrained} have test devices but no training device")

    def restricted_to(self, macs: Iterable[str]) -> 'SplitSpec':
        keep = set(macs)
        return SplitSpec(
            tuple(mac for mac in self.train if mac in keep),
            tuple(mac for mac in self.test if mac in keep),
        )


def load_split(path: PathLike) -> SplitSpec:
    """Read a split file with ``[train]`` and ``[test]`` sections of one MAC per line."""
    groups: Dict[str, List[str]] = {'train': [], 'test': []}
    for section in read_sections(path):
        if section.kind not in groups or section.argument:
            raise ConfigurationError(f"{path}:{section.start_line}: expected [train] or [test]")
        groups[section.kind].extend(text for _, text in section.lines)
    return SplitSpec(tuple(groups['train']), tuple(groups['test']))


def write_split(split: SplitSpec, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ['[train]', *split.train, '', '[test]', *split.test]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path


@dataclass
class LeakageAudit:
    """
    Per-stage, per-device count of samples consumed while fitting.

    Stages: 'classifier' (what Classifier.fit received), 'training' (what the model's
    fit routine trained on) and 'normalization' (what scaler statistics came from).
    The last two are reported from inside the fit code through observe_fits.
    """

    test_devices: frozenset = frozenset()
    fit_samples: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def record(self, stage: str, samples: Sequence[WindowedSample]) -> None:
        counts = self.fit_samples.setdefault(stage, {})
        for sample in samples:
            counts[sample.device_mac] = counts.get(sample.device_mac, 0) + 1

    def fit(self, classifier: Classifier, samples: Sequence[WindowedSample]) -> Classifier:
        with observe_fits(self.record):
            self.record('classifier', samples)
            classifier.fit(samples)
        return classifier

    def stage_devices(self, stage: str) -> FrozenSet[str]:
        return frozenset(self.fit_samples.get(stage, {}))

    @property
    def leaked_samples(self) -> int:
        """Test-device samples seen by the worst stage."""
        return max(
            (sum(count for mac, count in counts.items() if mac in self.test_devices)
             for counts in self.fit_samples.values()),
            default=0,
        )

    @property
    def clean(self) -> bool:
        return self.leaked_samples == 0

    def summary(self) -> str:
        stages = ', '.join(
            f"{stage} {sum(counts.values())} from {len(counts)} devices"
            for stage, counts in self.fit_samples.items()
        )
        return f"fit samples: {stages or 'none'}; test-device samples in fit: {self.leaked_samples}"


def majority_label(labels: Sequence[int]) -> int:
    """Most frequent label; ties go to the lowest id."""
    return int(np.argmax(np.bincount(np.asarray(labels, dtype=np.int64))))


@dataclass(frozen=True)
class DeviceVerdict:
    """Window predictions of one device and their majority vote."""

    device_mac: str
    predicted: int
    votes: Dict[int, int]
    window_labels: Tuple[int, ...]

    @property
    def window_count(self) -> int:
        return len(self.window_labels)


def classify_devices(
    model, streams: Mapping[str, DeviceStream], params: FeaturizeParams = FeaturizeParams()
) -> Dict[str, DeviceVerdict]:
    """
    Predict every window of every stream with a trained model and take a per-device
    majority vote. Streams too short for a single window are left out.
    """
    placeholder = {mac: 0 for mac in streams}
    samples = featurize_streams(streams, placeholder, params)
    if not samples:
        return {}
    predicted = np.asarray(model.predict(samples), dtype=np.int64)
    by_device: Dict[str, List[int]] = {}
    for sample, label in zip(samples, predicted):
        by_device.setdefault(sample.device_mac, []).append(int(label))
    verdicts = {}
    for mac, labels in sorted(by_device.items()):
        counts = np.bincount(labels)
        votes = {int(c): int(n) for c, n in enumerate(counts) if n}
        verdicts[mac] = DeviceVerdict(mac, majority_label(labels), votes, tuple(labels))
    for mac in sorted(set(streams) - set(verdicts)):
        logger.info(f"{mac}: not enough segments for one window; no verdict")
    return verdicts


@dataclass
class EvalReport:
    """
    Outcome of one train/test run.

    ``confusion`` rows are true categories and columns predicted ones, both ordered by
    ``category_ids``.
    """

    accuracy: float
    category_ids: Tuple[int, ...]
    confusion: np.ndarray
    precision: Dict[int, float]
    recall: Dict[int, float]
    device_votes: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)
    category_names: Dict[int, str] = field(default_factory=dict)
    metadata: Dict[str, str] = field(default_factory=dict)
    audit: Optional[LeakageAudit] = None

    @classmethod
    def from_predictions(
        cls,
        true_labels: Sequence[int],
        predicted: Sequence[int],
        device_macs: Sequence[str] = (),
        category_ids: Optional[Sequence[int]] = None,
        category_names: Optional[Mapping[int, str]] = None,
        metadata: Optional[Mapping[str, str]] = None,
        audit: Optional[LeakageAudit] = None,
    ) -> 'EvalReport':
        y_true = np.asarray(true_labels, dtype=np.int64)
        y_pred = np.asarray(predicted, dtype=np.int64)
        if len(y_true) == 0 or len(y_true) != len(y_pred):
            raise DataError(f"Cannot score {len(y_pred)} predictions against {len(y_true)} labels")
        if category_ids is None:
            category_ids = range(1, int(max(y_true.max(), y_pred.max())) + 1)
        ids = tuple(int(c) for c in category_ids)
        position = {cid: k for k, cid in enumerate(ids)}
        missing = sorted(set(y_true.tolist() + y_pred.tolist()) - set(ids))
        if missing:
            raise DataError(f"Labels {missing} are not among the report categories {list(ids)}")
        confusion = np.zeros((len(ids), len(ids)), dtype=np.int64)
        np.add.at(confusion, ([position[v] for v in y_true], [position[v] for v in y_pred]), 1)

        diagonal = np.diag(confusion)
        predicted_totals = confusion.sum(axis=0)
        true_totals = confusion.sum(axis=1)
        precision = {
            cid: float(diagonal[k] / predicted_totals[k]) if predicted_totals[k] else 0.0
            for k, cid in enumerate(ids)
        }
        recall = {
            cid: float(diagonal[k] / true_totals[k]) if true_totals[k] else 0.0
            for k, cid in enumerate(ids)
        }

        votes: Dict[str, Tuple[int, int, int]] = {}
        if len(device_macs):
            by_device: Dict[str, List[int]] = {}
            truth: Dict[str, int] = {}
            for mac, label, guess in zip(device_macs, y_true, y_pred):
                by_device.setdefault(mac, []).append(int(guess))
                truth[mac] = int(label)
            votes = {
                mac: (truth[mac], majority_label(guesses), len(guesses))
                for mac, guesses in sorted(by_device.items())
            }
        return cls(
            accuracy=float(diagonal.sum() / confusion.sum()),
            category_ids=ids,
            confusion=confusion,
            precision=precision,
            recall=recall,
            device_votes=votes,
            category_names=dict(category_names or {}),
            metadata=dict(metadata or {}),
            audit=audit,
        )

    @property
    def support(self) -> Dict[int, int]:
        return {cid: int(row.sum()) for cid, row in zip(self.category_ids, self.confusion)}

    def name_of(self, category_id: int) -> str:
        return self.category_names.get(category_id, str(category_id))

    def confusion_frame(self) -> pd.DataFrame:
        names = [self.name_of(cid) for cid in self.category_ids]
        return pd.DataFrame(self.confusion, index=pd.Index(names, name='true'),
                            columns=pd.Index(names, name='predicted'))

    def class_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'category_id': list(self.category_ids),
            'category': [self.name_of(cid) for cid in self.category_ids],
            'precision': [self.precision[cid] for cid in self.category_ids],
            'recall': [self.recall[cid] for cid in self.category_ids],
            'support': [self.support[cid] for cid in self.category_ids],
        })

    def to_text(self) -> str:
        lines = [f'{key}: {value}' for key, value in self.metadata.items()]
        lines += ['', f'accuracy: {self.accuracy:.4f}', '', 'confusion matrix (rows = true, columns = predicted):']
        lines.append(self.confusion_frame().to_string())
        lines += ['', self.class_frame().to_string(index=False, float_format=lambda v: f'{v:.4f}')]
        if self.device_votes:
            lines += ['', 'device verdicts (majority of window predictions):']
            for mac, (true, predicted, windows) in self.device_votes.items():
                mark = 'ok' if true == predicted else 'WRONG'
                lines.append(
                    f'  {mac}  true={self.name_of(true)}  predicted={self.name_of(predicted)}  '
                    f'windows={windows}  {mark}'
                )
        if self.audit is not None:
            lines += ['', f'leakage audit: {self.audit.summary()}']
        return '\n'.join(lines) + '\n'

    def to_rows(self) -> List[List[str]]:
        """Delimited form: one row per (true, predicted) cell, then per-class scores."""
        rows = [['section', 'true', 'predicted', 'value']]
        rows.append(['accuracy', '', '', repr(self.accuracy)])
        for i, true in enumerate(self.category_ids):
            for j, predicted in enumerate(self.category_ids):
                rows.append(['confusion', str(true), str(predicted), str(int(self.confusion[i, j]))])
        for cid in self.category_ids:
            rows.append(['precision', str(cid), '', repr(self.precision[cid])])
            rows.append(['recall', str(cid), '', repr(self.recall[cid])])
        return rows

    def write(self, out_dir: PathLike, stem: str = 'report') -> Tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        text_path = out_dir / f'{stem}.txt'
        text_path.write_text(self.to_text(), encoding='utf-8')
        rows = self.to_rows()
        csv_path = out_dir / f'{stem}.csv'
        pd.DataFrame(rows[1:], columns=rows[0]).to_csv(csv_path, index=False, lineterminator='\n')
        return text_path, csv_path

    def to_dict(self) -> dict:
        return {
            'accuracy': self.accuracy,
            'category_ids': list(self.category_ids),
            'confusion': self.confusion.tolist(),
            'precision': {str(k): v for k, v in self.precision.items()},
            'recall': {str(k): v for k, v in self.recall.items()},
            'device_votes': {mac: list(v) for mac, v in self.device_votes.items()},
            'metadata': dict(self.metadata),
            'leaked_samples': self.audit.leaked_samples if self.audit else 0,
        }


@dataclass
class ExperimentResult:
    reports: List[EvalReport]

    @property
    def accuracies(self) -> List[float]:
        return [report.accuracy for report in self.reports]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        """Population standard deviation over repeats."""
        return float(np.std(self.accuracies))

    @property
    def best_accuracy(self) -> float:
        return float(np.max(self.accuracies))

    @property
    def leaked_samples(self) -> int:
        return sum(report.audit.leaked_samples for report in self.reports if report.audit)

    def summary(self) -> str:
        return (
            f"mean accuracy {self.mean_accuracy:.4f} (std {self.std_accuracy:.4f}, "
            f"best {self.best_accuracy:.4f}) over {len(self.reports)} repeats"
        )

    def write(self, out_dir: PathLike) -> Path:
        out_dir = Path(out_dir)
        for report in self.reports:
            report.write(out_dir, f"report-seed{report.metadata.get('seed', 'x')}")
        summary = pd.DataFrame({
            'seed': [report.metadata.get('seed', '') for report in self.reports],
            'accuracy': self.accuracies,
        })
        path = out_dir / 'summary.csv'
        summary.to_csv(path, index=False, lineterminator='\n')
        (out_dir / 'summary.txt').write_text(self.summary() + '\n', encoding='utf-8')
        return path


@dataclass
class StreamCorpus:
    """Per-device streams with their category labels, the input of featurization."""

    streams: Dict[str, DeviceStream]
    labels: Dict[str, int]
    categories: List[DeviceCategory] = field(default_factory=list)

    @classmethod
    def from_capture(cls, capture: CaptureFile, entries: Sequence[DeviceEntry]) -> 'StreamCorpus':
        streams = separate_streams(capture, [entry.mac for entry in entries])
        return cls(streams, {entry.mac: entry.category_id for entry in entries}, categories_of(entries))

    @property
    def category_names(self) -> Dict[int, str]:
        return {category.id: category.name for category in self.categories}

    def featurize(self, params: FeaturizeParams) -> List[WindowedSample]:
        return featurize_streams(self.streams, self.labels, params)


Source = Union[StreamCorpus, Sequence[WindowedSample]]


def eligible_devices(
    corpus: StreamCorpus, interval_secs: float = 300.0, min_active_fraction: float = 0.05
) -> StreamCorpus:
    """
    Keep devices active in at least ``min_active_fraction`` of the capture's segments,
    then drop categories left with a single device.
    """
    spans = [stream.timestamps for stream in corpus.streams.values() if len(stream)]
    if not spans:
        raise DataError("No device in the corpus has any traffic")
    first = min(ts[0] for ts in spans)
    last = max(ts[-1] for ts in spans)
    total = int(segment_ids(np.array([last]), interval_secs)[0] - segment_ids(np.array([first]), interval_secs)[0]) + 1

    active = {}
    for mac, stream in corpus.streams.items():
        ids = segment_ids(stream.timestamps, interval_secs)
        fraction = len(np.unique(ids)) / total
        if fraction >= min_active_fraction:
            active[mac] = stream
        else:
            logger.info(f"Dropping {mac}: active in {fraction:.1%} of segments")

    per_category: Dict[int, int] = {}
    for mac in active:
        per_category[corpus.labels[mac]] = per_category.get(corpus.labels[mac], 0) + 1
    keep = {mac: stream for mac, stream in active.items() if per_category[corpus.labels[mac]] >= 2}
    for category, count in sorted(per_category.items()):
        if count < 2:
            logger.info(f"Dropping category {category}: only one eligible device")
    return StreamCorpus(keep, {mac: corpus.labels[mac] for mac in keep}, list(corpus.categories))


def restrict_categories(
    source: Source, category_ids: Sequence[int]
) -> Tuple[Source, Dict[int, int]]:
    """
    Keep only the given categories and renumber them 1..n in the given order.

    Returns:
        the restricted source and the old -> new id map
    """
    mapping = {int(old): new for new, old in enumerate(category_ids, start=1)}
    if len(mapping) < 2:
        raise ParameterError("Restriction needs at least two distinct categories")
    if isinstance(source, StreamCorpus):
        labels = {mac: mapping[cid] for mac, cid in source.labels.items() if cid in mapping}
        names = source.category_names
        categories = [DeviceCategory(new, names.get(old, str(old))) for old, new in mapping.items()]
        return StreamCorpus({mac: source.streams[mac] for mac in labels if mac in source.streams},
                            labels, categories), mapping
    samples = [
        WindowedSample(s.features, mapping[s.label], s.device_mac, s.schema, s.start_index)
        for s in source if s.label in mapping
    ]
    return samples, mapping


def _resolve_factory(
    algo: Union[str, ClassifierFactory], config: Optional[CascadeConfig], options: Mapping[str, int]
) -> Tuple[str, ClassifierFactory]:
    if callable(algo):
        return getattr(algo, 'name', getattr(algo, '__name__', 'custom')), algo
    base = config or CascadeConfig()

    def factory(seed: int) -> Classifier:
        return make_classifier(algo, base.with_changes(seed=seed), **options)

    return str(algo), factory


def _draw_train_fraction(samples: List[WindowedSample], fraction: float, seed: int) -> List[WindowedSample]:
    if not 0 < fraction <= 1:
        raise ParameterError(f"train_ratio must be in (0, 1], got {fraction}")
    if fraction == 1:
        return samples
    keep = max(1, int(round(fraction * len(samples))))
    order = np.sort(np.random.default_rng([seed, 1]).permutation(len(samples))[:keep])
    return [samples[i] for i in order]


def run_repeat(
    samples: Sequence[WindowedSample],
    split: SplitSpec,
    algo: Union[str, ClassifierFactory] = 'cascade',
    config: Optional[CascadeConfig] = None,
    seed: int = 0,
    options: Optional[Mapping[str, int]] = None,
    train_fraction: float = 1.0,
    category_names: Optional[Mapping[int, str]] = None,
    metadata: Optional[Mapping[str, str]] = None,
) -> EvalReport:
    """One seeded fit on the train devices and one scored prediction on the test devices."""
    name, factory = _resolve_factory(algo, config, options or {})
    train_macs, test_macs = set(split.train), set(split.test)
    train_samples = [s for s in samples if s.device_mac in train_macs]
    test_samples = [s for s in samples if s.device_mac in test_macs]
    if not train_samples or not test_samples:
        raise DataError(
            f"Split yields {len(train_samples)} training and {len(test_samples)} test windows"
        )
    train_samples = shuffle_samples(_draw_train_fraction(train_samples, train_fraction, seed), seed)

    audit = LeakageAudit(frozenset(test_macs))
    classifier = audit.fit(factory(seed), train_samples)
    predicted = classifier.predict(test_samples)

    labels = sorted({s.label for s in train_samples} | {s.label for s in test_samples}
                    | {int(p) for p in predicted})
    report_metadata = {
        'algorithm': name,
        'seed': str(seed),
        'train_devices': ' '.join(sorted(train_macs)),
        'test_devices': ' '.join(sorted(test_macs)),
        'train_windows': str(len(train_samples)),
        'test_windows': str(len(test_samples)),
    }
    if train_fraction != 1.0:
        report_metadata['train_ratio'] = repr(train_fraction)
        report_metadata['train_ratio_note'] = RATIO_NOTE
    if config is not None and not callable(algo):
        report_metadata['config'] = ' '.join(f'{k}={v}' for k, v in config.with_changes(seed=seed).to_mapping().items())
    report_metadata.update(metadata or {})
    report = EvalReport.from_predictions(
        [s.label for s in test_samples],
        predicted,
        [s.device_mac for s in test_samples],
        category_ids=range(1, max(labels) + 1),
        category_names=category_names,
        metadata=report_metadata,
        audit=audit,
    )
    if not audit.clean:
        raise SplitValidationError(f"{audit.leaked_samples} test-device samples reached training")
    logger.info(f"{name} seed {seed}: accuracy {report.accuracy:.4f}")
    return report


def prepare_samples(
    source: Source, split: SplitSpec, params: FeaturizeParams = FeaturizeParams()
) -> Tuple[List[WindowedSample], Dict[int, str]]:
    """Featurize a corpus (or take a dataset as is) and validate the split against its labels."""
    if isinstance(source, StreamCorpus):
        split.validate(source.labels)
        return source.featurize(params), source.category_names
    samples = list(source)
    labels = {s.device_mac: s.label for s in samples}
    split.validate(labels)
    return samples, {}


def run_experiment(
    source: Source,
    split: SplitSpec,
    algo: Union[str, ClassifierFactory] = 'cascade',
    config: Optional[CascadeConfig] = None,
    repeats: int = 5,
    base_seed: int = 0,
    params: FeaturizeParams = FeaturizeParams(),
    options: Optional[Mapping[str, int]] = None,
    train_fraction: float = 1.0,
) -> ExperimentResult:
    """
    Repeat a held-out-device run with seeds base_seed .. base_seed + repeats - 1.

    Raises:
        SplitValidationError: if the split breaks the unseen-device constraint
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    samples, names = prepare_samples(source, split, params)
    metadata = {}
    if isinstance(source, StreamCorpus):
        metadata = {
            'interval_secs': repr(params.interval_secs),
            'window': str(params.window),
            'overlap': str(params.overlap),
            'features': ' '.join(params.feature_names),
        }
    reports = [
        run_repeat(samples, split, algo, config, base_seed + r, options, train_fraction, names, metadata)
        for r in range(repeats)
    ]
    result = ExperimentResult(reports)
    logger.info(f"Experiment {algo if isinstance(algo, str) else 'custom'}: {result.summary()}")
    return result


@dataclass
class SweepResult:
    parameter: str
    rows: List[Tuple[float, float, float, float]]
    experiments: List[ExperimentResult] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=[self.parameter, 'mean_accuracy', 'std_accuracy', 'best_accuracy'])

    def write(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator='\n')
        return path


def sweep(
    parameter: str,
    values: Sequence[float],
    source: Source,
    split: SplitSpec,
    algo: Union[str, ClassifierFactory] = 'cascade',
    config: Optional[CascadeConfig] = None,
    repeats: int = 5,
    base_seed: int = 0,
    params: FeaturizeParams = FeaturizeParams(),
    options: Optional[Mapping[str, int]] = None,
) -> SweepResult:
    """
    One run_experiment per value of the segmentation interval T, the window t or
    the training ratio.

    Interval and window sweeps re-featurize the corpus, so they need a StreamCorpus.
    A window sweep keeps a 50% overlap, floor(t / 2), whatever params.overlap says.
    """
    kind = SWEEP_PARAMETERS.get(str(parameter).strip().lower())
    if kind is None:
        raise ParameterError(f"Unknown sweep parameter '{parameter}', expected interval, window or ratio")
    if not values:
        raise ParameterError("A sweep needs at least one value")
    if kind in ('interval', 'window') and not isinstance(source, StreamCorpus):
        raise ParameterError(f"A {kind} sweep needs device streams, not a windowed dataset")

    rows = []
    experiments = []
    for value in values:
        run_params = params
        fraction = 1.0
        if kind == 'interval':
            run_params = params.with_changes(interval_secs=float(value))
        elif kind == 'window':
            window = int(value)
            run_params = params.with_changes(window=window, overlap=window // 2)
        else:
            fraction = float(value)
        result = run_experiment(source, split, algo, config, repeats, base_seed, run_params, options, fraction)
        rows.append((float(value), result.mean_accuracy, result.std_accuracy, result.best_accuracy))
        experiments.append(result)
        logger.info(f"sweep {kind}={value}: {result.summary()}")
    return SweepResult(kind, rows, experiments)
