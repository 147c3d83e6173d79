"""
Segmentation, per-segment feature extraction, normalization and windowing.

A device stream is cut into fixed intervals [iT, (i+1)T); each interval becomes one
FeatureVector of packet counts and packet-length statistics; consecutive vectors are
grouped into overlapping windows of length t, the classifier's input unit.

Length statistics use population (biased) moments: std = sqrt(m2),
skewness = m3 / m2**1.5, kurtosis = m4 / m2**2 (not excess). Whenever m2 == 0 both
skewness and kurtosis are 0, and an empty population yields eight zeros.
"""

from __future__ import annotations

import csv
import logging
import math
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, replace
from pathlib import Path
from typing import (
    Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union,
)

import numpy as np
import pandas as pd

from .exceptions import DataError, ParameterError, SchemaError
from .traffic_model import (
    DEFAULT_CONTROL_PROTOCOLS,
    DeviceStream,
    PacketRecord,
    frame_to_records,
    normalize_mac,
    normalize_protocol,
    packet_class_masks,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

COUNT_POPULATIONS = ('total', 'user', 'control', 'received', 'transmitted')
LENGTH_POPULATIONS = ('all', 'user', 'control', 'received', 'transmitted')
LENGTH_STATISTICS = ('max', 'min', 'mean', 'sum', 'std', 'var', 'skew', 'kurt')
DEFAULT_COUNTED_PROTOCOLS = ('TCP', 'UDP', 'HTTP', 'DNS', 'ARP', 'NTP', 'ICMP')


def build_schema(counted_protocols: Sequence[str] = DEFAULT_COUNTED_PROTOCOLS) -> Tuple[str, ...]:
    """Feature names of the full vector, in extraction order."""
    names = [f'{population}_packets' for population in COUNT_POPULATIONS]
    names += [f'{normalize_protocol(proto).lower()}_packets' for proto in counted_protocols]
    names += [
        f'{population}_length_{statistic}'
        for population in LENGTH_POPULATIONS
        for statistic in LENGTH_STATISTICS
    ]
    return tuple(names)


FULL_SCHEMA = build_schema()

DEFAULT_FEATURES = (
    'user_packets',
    'user_length_mean',
    'user_length_max',
    'control_packets',
    'control_length_mean',
    'control_length_max',
)

FEATURE_ALIASES = {
    'user packet number': 'user_packets',
    'user packet length average': 'user_length_mean',
    'user packet length peak': 'user_length_max',
    'control packet number': 'control_packets',
    'control packet average': 'control_length_mean',
    'control packet peak': 'control_length_max',
}

STATISTIC_ALIASES = {
    'peak': 'max',
    'maximum': 'max',
    'minimum': 'min',
    'average': 'mean',
    'avg': 'mean',
    'stddev': 'std',
    'variance': 'var',
    'skewness': 'skew',
    'kurtosis': 'kurt',
}


def resolve_feature_name(name: str, schema: Sequence[str] = FULL_SCHEMA) -> str:
    """
    Map a feature name or alias onto a schema name.

    "peak" resolves to the max statistic and "average" to mean; the six descriptive
    names of the default selection are accepted verbatim.

    Raises:
        SchemaError: if the name matches nothing in the schema
    """
    key = ' '.join(str(name).strip().lower().split())
    if key in FEATURE_ALIASES and FEATURE_ALIASES[key] in schema:
        return FEATURE_ALIASES[key]
    key = key.replace(' ', '_')
    if key in schema:
        return key
    head, _, statistic = key.rpartition('_')
    if head and statistic in STATISTIC_ALIASES:
        candidate = f'{head}_{STATISTIC_ALIASES[statistic]}'
        if candidate in schema:
            return candidate
    raise SchemaError(str(name))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        schema = tuple(self.schema)
        if values.ndim != 1 or len(values) != len(schema):
            raise ParameterError(
                f"Feature vector has {values.size} values for {len(schema)} schema names"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("Feature vector contains non-finite values")
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'schema', schema)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.schema.index(name)])

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.values, other.values)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.schema, self.values.tolist()))


@dataclass(frozen=True, eq=False)
class Segment:
    """All records of one device inside [iT, (i+1)T)."""

    device_mac: str
    interval_index: int
    frame: pd.DataFrame

    @property
    def records(self) -> Tuple[PacketRecord, ...]:
        return frame_to_records(self.frame)

    def __len__(self) -> int:
        return len(self.frame)


def _check_interval(interval_secs: float) -> float:
    interval = float(interval_secs)
    if not (math.isfinite(interval) and interval > 0):
        raise ParameterError(f"Segmentation interval must be > 0 seconds, got {interval_secs}")
    return interval


def segment_ids(timestamps: np.ndarray, interval_secs: float) -> np.ndarray:
    """Interval index floor(t / T) of every timestamp."""
    interval = _check_interval(interval_secs)
    return np.floor(np.asarray(timestamps, dtype=np.float64) / interval).astype(np.int64)


def segment_stream(stream: DeviceStream, interval_secs: float) -> List[Segment]:
    """
    Partition a stream into half-open intervals of length T.

    Empty intervals between the first and the last non-empty one are kept as empty
    segments so that segment positions track real time.

    Raises:
        ParameterError: if T <= 0
    """
    ids = segment_ids(stream.timestamps, interval_secs)
    if len(ids) == 0:
        return []
    first, last = int(ids[0]), int(ids[-1])
    indices = np.arange(first, last + 1)
    bounds = np.searchsorted(ids, np.append(indices, last + 1), side='left')
    frame = stream.frame
    return [
        Segment(stream.device_mac, int(index), frame.iloc[bounds[k]:bounds[k + 1]])
        for k, index in enumerate(indices)
    ]


def _grouped_length_statistics(lengths: np.ndarray, ids: np.ndarray, n_groups: int) -> np.ndarray:
    """
    The eight length statistics for every group at once.

    ``ids`` must be non-decreasing (segment order). Two-pass moments: the group
    mean first, then central sums of the deviations.
    """
    out = np.zeros((n_groups, len(LENGTH_STATISTICS)), dtype=np.float64)
    if len(lengths) == 0:
        return out

    counts = np.bincount(ids, minlength=n_groups).astype(np.float64)
    sums = np.bincount(ids, weights=lengths, minlength=n_groups)
    present = counts > 0
    means = np.zeros(n_groups)
    means[present] = sums[present] / counts[present]

    deviations = lengths - means[ids]
    m2 = np.zeros(n_groups)
    m3 = np.zeros(n_groups)
    m4 = np.zeros(n_groups)
    m2[present] = np.bincount(ids, weights=deviations ** 2, minlength=n_groups)[present] / counts[present]
    m3[present] = np.bincount(ids, weights=deviations ** 3, minlength=n_groups)[present] / counts[present]
    m4[present] = np.bincount(ids, weights=deviations ** 4, minlength=n_groups)[present] / counts[present]

    group_ids, starts = np.unique(ids, return_index=True)
    maxima = np.zeros(n_groups)
    minima = np.zeros(n_groups)
    maxima[group_ids] = np.maximum.reduceat(lengths, starts)
    minima[group_ids] = np.minimum.reduceat(lengths, starts)

    spread = m2 > 0
    skewness = np.zeros(n_groups)
    kurtosis = np.zeros(n_groups)
    skewness[spread] = m3[spread] / m2[spread] ** 1.5
    kurtosis[spread] = m4[spread] / m2[spread] ** 2

    out[:, 0] = maxima
    out[:, 1] = minima
    out[:, 2] = means
    out[:, 3] = sums
    out[:, 4] = np.sqrt(m2)
    out[:, 5] = m2
    out[:, 6] = skewness
    out[:, 7] = kurtosis
    return out


def _feature_matrix(
    frame: pd.DataFrame,
    device_mac: str,
    ids: np.ndarray,
    n_groups: int,
    control_protocols: FrozenSet[str],
    counted_protocols: Sequence[str],
) -> np.ndarray:
    """Full-schema feature rows for ``n_groups`` segments; row k holds segment id k."""
    lengths = frame['length'].to_numpy(dtype=np.float64)
    protocols = frame['protocol'].astype(str).str.strip().str.upper().to_numpy()
    is_control, is_transmitted = packet_class_masks(frame, device_mac, control_protocols)
    populations = {
        'all': np.ones(len(frame), dtype=bool),
        'user': ~is_control,
        'control': is_control,
        'received': ~is_transmitted,
        'transmitted': is_transmitted,
    }

    columns = []
    for name in COUNT_POPULATIONS:
        mask = populations['all' if name == 'total' else name]
        columns.append(np.bincount(ids[mask], minlength=n_groups).astype(np.float64))
    for proto in counted_protocols:
        mask = protocols == normalize_protocol(proto)
        columns.append(np.bincount(ids[mask], minlength=n_groups).astype(np.float64))
    blocks = [np.column_stack(columns)] if columns else []
    for name in LENGTH_POPULATIONS:
        mask = populations[name]
        blocks.append(_grouped_length_statistics(lengths[mask], ids[mask], n_groups))
    return np.hstack(blocks)


def extract_features(
    segment: Segment,
    device_mac: Optional[str] = None,
    control_protocols: FrozenSet[str] = DEFAULT_CONTROL_PROTOCOLS,
    counted_protocols: Sequence[str] = DEFAULT_COUNTED_PROTOCOLS,
) -> FeatureVector:
    """Full-schema feature vector of one segment; an empty segment gives all zeros."""
    mac = normalize_mac(device_mac or segment.device_mac)
    ids = np.zeros(len(segment.frame), dtype=np.int64)
    row = _feature_matrix(segment.frame, mac, ids, 1, control_protocols, counted_protocols)[0]
    return FeatureVector(row, build_schema(counted_protocols))


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Feature rows for consecutive segments of one stream, starting at ``first_index``."""

    device_mac: str
    first_index: int
    matrix: np.ndarray
    schema: Tuple[str, ...]

    def vectors(self) -> List[FeatureVector]:
        return [FeatureVector(row, self.schema) for row in self.matrix]

    def __len__(self) -> int:
        return len(self.matrix)


def featurize_stream(
    stream: DeviceStream,
    interval_secs: float,
    control_protocols: FrozenSet[str] = DEFAULT_CONTROL_PROTOCOLS,
    counted_protocols: Sequence[str] = DEFAULT_COUNTED_PROTOCOLS,
) -> FeatureTable:
    """segment_stream followed by extract_features on every segment, in one pass."""
    schema = build_schema(counted_protocols)
    ids = segment_ids(stream.timestamps, interval_secs)
    if len(ids) == 0:
        return FeatureTable(stream.device_mac, 0, np.zeros((0, len(schema))), schema)
    first = int(ids[0])
    relative = ids - first
    n_groups = int(relative[-1]) + 1
    matrix = _feature_matrix(
        stream.frame, stream.device_mac, relative, n_groups, control_protocols, counted_protocols
    )
    return FeatureTable(stream.device_mac, first, matrix, schema)


def select_indices(schema: Sequence[str], names: Iterable[str]) -> List[int]:
    schema = tuple(schema)
    return [schema.index(resolve_feature_name(name, schema)) for name in names]


def select_schema(full: FeatureVector, names: Sequence[str]) -> FeatureVector:
    """
    Project a vector onto the requested names, in the requested order.

    Raises:
        SchemaError: naming the first unknown feature
    """
    resolved = [resolve_feature_name(name, full.schema) for name in names]
    indices = [full.schema.index(name) for name in resolved]
    return FeatureVector(full.values[indices], tuple(resolved))


FitObserver = Callable[[str, Sequence['WindowedSample']], None]

_fit_observers: ContextVar[Tuple[FitObserver, ...]] = ContextVar('fit_observers', default=())


@contextmanager
def observe_fits(observer: FitObserver) -> Iterator[None]:
    """
    Call ``observer(stage, samples)`` for every fit made inside the block.

    Stages are 'training' (the samples a model is fitted on) and 'normalization'
    (the samples scaler statistics are computed from).
    """
    token = _fit_observers.set(_fit_observers.get() + (observer,))
    try:
        yield
    finally:
        _fit_observers.reset(token)


def report_fit(stage: str, samples: Sequence['WindowedSample']) -> None:
    for observer in _fit_observers.get():
        observer(stage, samples)


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """
    Per-feature affine map onto [0, 1] fitted on training data.

    Features constant on the training set map to 0 everywhere; values outside the
    training range fall outside [0, 1] and are not clamped.
    """

    minimum: np.ndarray
    maximum: np.ndarray
    schema: Tuple[str, ...] = ()

    @classmethod
    def fit(cls, values: np.ndarray, schema: Sequence[str] = ()) -> 'MinMaxScaler':
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise DataError("Cannot fit normalization on an empty dataset")
        flat = values.reshape(-1, values.shape[-1])
        return cls(flat.min(axis=0), flat.max(axis=0), tuple(schema))

    @classmethod
    def fit_samples(cls, samples: Sequence['WindowedSample'], flatten: bool = False) -> 'MinMaxScaler':
        """Fit on windowed samples, per feature or (``flatten``) per window position."""
        if not samples:
            raise DataError("Cannot fit normalization on an empty dataset")
        report_fit('normalization', samples)
        features, _ = stack_samples(samples)
        if flatten:
            return cls.fit(features.reshape(len(features), -1))
        return cls.fit(features, samples[0].schema)

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        span = self.span
        varying = span > 0
        out = np.zeros_like(values)
        out[..., varying] = (values[..., varying] - self.minimum[varying]) / span[varying]
        return out

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return values * self.span + self.minimum

    def transform_samples(self, samples: Sequence['WindowedSample']) -> List['WindowedSample']:
        return [sample.with_features(self.transform(sample.features)) for sample in samples]


def normalize(dataset: Sequence[FeatureVector]) -> Tuple[List[FeatureVector], MinMaxScaler]:
    """
    Min-max scale a (training) set of vectors.

    Returns:
        the scaled vectors and the scaler to reapply verbatim to test data
    """
    if not dataset:
        raise DataError("normalize needs a non-empty dataset")
    schema = dataset[0].schema
    scaler = MinMaxScaler.fit(np.vstack([vector.values for vector in dataset]), schema)
    return [FeatureVector(scaler.transform(vector.values), schema) for vector in dataset], scaler


@dataclass(frozen=True, eq=False)
class WindowedSample:
    """
    t consecutive feature vectors of one device plus its category label.

    ``features`` has shape (t, |schema|); row k is segment ``start_index + k``.
    """

    features: np.ndarray
    label: int
    device_mac: str
    schema: Tuple[str, ...]
    start_index: int = 0

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != len(self.schema):
            raise ParameterError(
                f"Window of shape {features.shape} does not match a {len(self.schema)}-feature schema"
            )
        features.setflags(write=False)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'schema', tuple(self.schema))
        object.__setattr__(self, 'label', int(self.label))

    @property
    def window(self) -> int:
        return self.features.shape[0]

    @property
    def vectors(self) -> List[FeatureVector]:
        return [FeatureVector(row, self.schema) for row in self.features]

    def with_features(self, features: np.ndarray) -> 'WindowedSample':
        return WindowedSample(features, self.label, self.device_mac, self.schema, self.start_index)


def window_starts(n: int, window: int, overlap: int) -> range:
    if window < 1:
        raise ParameterError(f"Window size must be >= 1, got {window}")
    if not 0 <= overlap < window:
        raise ParameterError(f"Overlap must satisfy 0 <= overlap < window ({window}), got {overlap}")
    return range(0, max(n - window + 1, 0), window - overlap)


def make_windows(
    vectors: Union[Sequence[FeatureVector], np.ndarray],
    window: int,
    overlap: int,
    label: int,
    device_mac: str,
    schema: Optional[Sequence[str]] = None,
    first_index: int = 0,
) -> List[WindowedSample]:
    """
    Group consecutive vectors of one device into windows of length t.

    Windows start at 0, t - overlap, 2(t - overlap), ...; a trailing remainder
    shorter than t is discarded.

    Raises:
        ParameterError: if overlap >= t or overlap < 0
    """
    if isinstance(vectors, np.ndarray):
        matrix = vectors
        if schema is None:
            raise ParameterError("make_windows on a raw matrix needs the schema")
    else:
        vectors = list(vectors)
        if schema is None:
            schema = vectors[0].schema if vectors else ()
        matrix = np.vstack([v.values for v in vectors]) if vectors else np.zeros((0, len(schema)))
    schema = tuple(schema)
    return [
        WindowedSample(matrix[start:start + window], label, device_mac, schema, first_index + start)
        for start in window_starts(len(matrix), window, overlap)
    ]


def stack_samples(samples: Sequence[WindowedSample]) -> Tuple[np.ndarray, np.ndarray]:
    """(N, t, F) feature array and (N,) label array."""
    if not samples:
        raise DataError("No samples to stack")
    shapes = {sample.features.shape for sample in samples}
    if len(shapes) != 1:
        raise DataError(f"Samples have mixed window shapes: {sorted(shapes)}")
    features = np.stack([sample.features for sample in samples])
    labels = np.array([sample.label for sample in samples], dtype=np.int64)
    return features, labels


def shuffle_samples(samples: Sequence[WindowedSample], seed: int) -> List[WindowedSample]:
    """Seeded shuffle at window level; rows inside each window keep their order."""
    order = np.random.default_rng(seed).permutation(len(samples))
    return [samples[i] for i in order]


@dataclass(frozen=True)
class FeaturizeParams:
    """Everything that turns device streams into windowed samples."""

    interval_secs: float = 300.0
    window: int = 6
    overlap: int = 3
    feature_names: Tuple[str, ...] = DEFAULT_FEATURES
    control_protocols: FrozenSet[str] = DEFAULT_CONTROL_PROTOCOLS
    counted_protocols: Tuple[str, ...] = DEFAULT_COUNTED_PROTOCOLS

    def __post_init__(self):
        _check_interval(self.interval_secs)
        window_starts(0, self.window, self.overlap)
        schema = build_schema(self.counted_protocols)
        resolved = tuple(resolve_feature_name(name, schema) for name in self.feature_names)
        object.__setattr__(self, 'feature_names', resolved)

    def with_changes(self, **changes) -> 'FeaturizeParams':
        return replace(self, **changes)


def featurize_streams(
    streams: Mapping[str, DeviceStream],
    labels: Mapping[str, int],
    params: FeaturizeParams = FeaturizeParams(),
) -> List[WindowedSample]:
    """Windowed samples for every labelled stream, devices in MAC order."""
    samples: List[WindowedSample] = []
    labels = {normalize_mac(mac): int(label) for mac, label in labels.items()}
    for mac in sorted(streams):
        if mac not in labels:
            logger.warning(f"Stream {mac} has no category label; skipped")
            continue
        table = featurize_stream(
            streams[mac], params.interval_secs, params.control_protocols, params.counted_protocols
        )
        indices = select_indices(table.schema, params.feature_names)
        device_samples = make_windows(
            table.matrix[:, indices], params.window, params.overlap, labels[mac], mac,
            schema=params.feature_names, first_index=table.first_index,
        )
        logger.debug(f"{mac}: {len(table)} segments -> {len(device_samples)} windows")
        samples.extend(device_samples)
    logger.info(
        f"Featurized {len(streams)} streams: {len(samples)} windows "
        f"(T={params.interval_secs}s, t={params.window}, overlap={params.overlap})"
    )
    return samples


@dataclass(frozen=True)
class ActivityProfile:
    """Per-bin packet load of one device, e.g. packets per minute."""

    device_mac: str
    bin_secs: float
    bins: int
    max_per_bin: float
    mean_per_bin: float
    active_fraction: float


def activity_profile(stream: DeviceStream, bin_secs: float = 60.0) -> ActivityProfile:
    """Peak and average packets per bin, and the share of bins with any traffic."""
    ids = segment_ids(stream.timestamps, bin_secs)
    if len(ids) == 0:
        return ActivityProfile(stream.device_mac, float(bin_secs), 0, 0.0, 0.0, 0.0)
    counts = np.bincount(ids - ids[0])
    return ActivityProfile(
        device_mac=stream.device_mac,
        bin_secs=float(bin_secs),
        bins=len(counts),
        max_per_bin=float(counts.max()),
        mean_per_bin=float(counts.mean()),
        active_fraction=float(np.count_nonzero(counts) / len(counts)),
    )


def _dataset_header(window: int, schema: Sequence[str]) -> List[str]:
    return ['device_mac', 'label'] + [f'{step}:{name}' for step in range(window) for name in schema]


def write_dataset(samples: Sequence[WindowedSample], path: PathLike) -> Path:
    """
    One row per window: device_mac, label, then t x |schema| values, window-major.

    The header encodes both the schema and t as ``<step>:<feature>`` column names.
    """
    features, labels = stack_samples(samples)
    n, window, width = features.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(features.reshape(n, window * width),
                         columns=_dataset_header(window, samples[0].schema)[2:])
    frame.insert(0, 'label', labels)
    frame.insert(0, 'device_mac', [sample.device_mac for sample in samples])
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n',
                 quoting=csv.QUOTE_MINIMAL)
    logger.info(f"Wrote {n} windows (t={window}, {width} features) to {path}")
    return path


def read_dataset(path: PathLike) -> List[WindowedSample]:
    """Inverse of write_dataset."""
    frame = pd.read_csv(path, dtype={'device_mac': str}, float_precision='round_trip')
    if list(frame.columns[:2]) != ['device_mac', 'label']:
        raise DataError(f"{path}: dataset header must start with device_mac,label")
    steps: Dict[int, List[str]] = {}
    for column in frame.columns[2:]:
        step, _, name = column.partition(':')
        if not step.isdigit() or not name:
            raise DataError(f"{path}: malformed dataset column '{column}'")
        steps.setdefault(int(step), []).append(name)
    window = len(steps)
    schema = tuple(steps.get(0, []))
    if sorted(steps) != list(range(window)) or any(tuple(v) != schema for v in steps.values()):
        raise DataError(f"{path}: dataset columns are not a complete window-major layout")
    if list(frame.columns) != _dataset_header(window, schema):
        raise DataError(f"{path}: dataset columns are out of window-major order")
    values = frame.iloc[:, 2:].to_numpy(dtype=np.float64).reshape(len(frame), window, len(schema))
    samples = [
        WindowedSample(values[i], int(label), normalize_mac(mac), schema)
        for i, (mac, label) in enumerate(zip(frame['device_mac'], frame['label']))
    ]
    logger.info(f"Read {len(samples)} windows from {path}")
    return samples
