"""
Reference classifiers compared against the cascade.

- kNN (k=10): Euclidean distance on the flattened t x F window, majority vote
- decision tree (max depth 12): greedy CART growth on weighted Gini impurity
- LSTM-only and CNN-only: reduced cascades trained by the same SGD loop

All of them implement cascade.Classifier so the evaluation harness can drive any
of them by name through make_classifier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .cascade import CascadeConfig, CascadeModel, Classifier, NeuralClassifier, train
from .exceptions import ConfigurationError, DataError, ParameterError
from .features import MinMaxScaler, WindowedSample, report_fit, stack_samples
from .textfiles import read_key_values

logger = logging.getLogger(__name__)

ALGORITHMS = ('cascade', 'knn', 'tree', 'lstm', 'cnn')
BASELINE_OPTIONS = {'k': int, 'max_depth': int}
DEFAULT_K = 10
DEFAULT_MAX_DEPTH = 12


def flatten_samples(samples: Sequence[WindowedSample]) -> Tuple[np.ndarray, np.ndarray]:
    """(N, t * F) window-major vectors and (N,) labels."""
    features, labels = stack_samples(samples)
    return features.reshape(len(features), -1), labels


def _flatten_query(samples) -> np.ndarray:
    """Samples, or an array whose rows are (already flattened) query vectors."""
    if isinstance(samples, WindowedSample):
        samples = [samples]
    if isinstance(samples, np.ndarray):
        array = np.asarray(samples, dtype=np.float64)
        return array[None] if array.ndim == 1 else array.reshape(len(array), -1)
    if len(samples) == 0:
        return np.zeros((0, 0))
    return flatten_samples(samples)[0]


def _majority(counts: np.ndarray) -> np.ndarray:
    """Column index of the largest count per row; ties go to the lowest index."""
    return np.argmax(counts, axis=-1)


@dataclass
class KnnModel:
    vectors: np.ndarray
    labels: np.ndarray
    k: int = DEFAULT_K
    scaler: Optional[MinMaxScaler] = None
    schema: Tuple[str, ...] = ()
    window: int = 0

    def __post_init__(self):
        if self.k < 1 or self.k > len(self.vectors):
            raise ParameterError(f"k must be within [1, {len(self.vectors)}], got {self.k}")

    def neighbors(self, queries: np.ndarray, chunk_size: int = 256) -> np.ndarray:
        """
        Indices of the k nearest training vectors per query, nearest first.

        Equal distances keep training-set order.
        """
        k = self.k
        out = np.empty((len(queries), k), dtype=np.int64)
        for start in range(0, len(queries), chunk_size):
            distances = cdist(queries[start:start + chunk_size], self.vectors, 'sqeuclidean')
            kth = np.partition(distances, k - 1, axis=1)[:, k - 1]
            for row, (dist, bound) in enumerate(zip(distances, kth)):
                candidates = np.flatnonzero(dist <= bound)
                nearest = candidates[np.argsort(dist[candidates], kind='stable')][:k]
                out[start + row] = nearest
        return out

    def predict(self, samples) -> np.ndarray:
        queries = _flatten_query(samples)
        if len(queries) == 0:
            return np.zeros(0, dtype=np.int64)
        if self.scaler is not None:
            queries = self.scaler.transform(queries)
        neighbor_labels = self.labels[self.neighbors(queries)]
        counts = np.zeros((len(queries), int(self.labels.max()) + 1), dtype=np.int64)
        rows = np.repeat(np.arange(len(queries)), self.k)
        np.add.at(counts, (rows, neighbor_labels.ravel()), 1)
        return _majority(counts).astype(np.int64)


def knn_fit(samples: Sequence[WindowedSample], k: int = DEFAULT_K, normalize: bool = True) -> KnnModel:
    """
    Store the training vectors for Euclidean search on the flattened window.

    With normalize (the default) distances are taken after a min-max scaling fitted
    on these samples, and queries pass through the same scaler; normalize=False gives
    distances on the raw feature values.

    Raises:
        ParameterError: if k exceeds the number of training samples
    """
    report_fit('training', samples)
    vectors, labels = flatten_samples(samples)
    scaler = MinMaxScaler.fit_samples(samples, flatten=True) if normalize else None
    if scaler is not None:
        vectors = scaler.transform(vectors)
    return KnnModel(vectors, labels, int(k), scaler, samples[0].schema, samples[0].window)


def knn_predict(model: KnnModel, sample) -> Union[int, np.ndarray]:
    """Label of one sample, or an array of labels for a list of samples."""
    labels = model.predict(sample)
    return int(labels[0]) if isinstance(sample, WindowedSample) else labels


@dataclass
class TreeModel:
    """
    Array-encoded binary tree; node 0 is the root.

    Internal nodes send ``x[feature] <= threshold`` left. Leaves have feature -1 and
    predict the majority label of ``counts`` (column c counts label c).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    max_depth: int = DEFAULT_MAX_DEPTH
    schema: Tuple[str, ...] = ()
    window: int = 0

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if self.node_count else 0

    def leaf_labels(self) -> np.ndarray:
        return _majority(self.counts)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        nodes = np.zeros(len(vectors), dtype=np.int64)
        active = self.feature[nodes] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = vectors[rows, self.feature[current]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] >= 0
        return nodes

    def predict(self, samples) -> np.ndarray:
        vectors = _flatten_query(samples)
        if len(vectors) == 0:
            return np.zeros(0, dtype=np.int64)
        return self.leaf_labels()[self.apply(vectors)].astype(np.int64)


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of label-count rows."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    shares = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    return 1.0 - np.sum(shares ** 2, axis=-1)


def best_split(vectors: np.ndarray, labels: np.ndarray, n_labels: int) -> Optional[Tuple[int, float, float]]:
    """
    The (feature, threshold) minimizing size-weighted Gini impurity.

    Thresholds are midpoints between consecutive distinct sorted values; a feature
    with a single distinct value offers none. Ties keep the lowest feature index,
    then the lowest threshold.

    Returns:
        (feature, threshold, weighted impurity), or None when nothing can be split
    """
    n = len(labels)
    onehot = np.zeros((n, n_labels))
    onehot[np.arange(n), labels] = 1.0
    total = onehot.sum(axis=0)
    best: Optional[Tuple[int, float, float]] = None
    for feature in range(vectors.shape[1]):
        order = np.argsort(vectors[:, feature], kind='stable')
        values = vectors[order, feature]
        cuts = np.flatnonzero(values[:-1] != values[1:])
        if len(cuts) == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[cuts]
        right = total - left
        n_left = (cuts + 1).astype(np.float64)
        impurity = (n_left * gini(left) + (n - n_left) * gini(right)) / n
        pick = int(np.argmin(impurity))
        if best is None or impurity[pick] < best[2]:
            threshold = (values[cuts[pick]] + values[cuts[pick] + 1]) / 2.0
            best = (feature, float(threshold), float(impurity[pick]))
    return best


def tree_fit(samples: Sequence[WindowedSample], max_depth: int = DEFAULT_MAX_DEPTH) -> TreeModel:
    """
    Grow a CART tree on flattened windows.

    A node becomes a leaf at max_depth, when pure, with fewer than 2 samples, or when
    every feature is constant over its samples.
    """
    if not samples:
        raise DataError("Decision tree needs at least one training sample")
    if max_depth < 0:
        raise ParameterError(f"max_depth must be >= 0, got {max_depth}")
    report_fit('training', samples)
    vectors, labels = flatten_samples(samples)
    n_labels = int(labels.max()) + 1

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    counts: List[np.ndarray] = []

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(feature)
        node_counts = np.bincount(labels[rows], minlength=n_labels).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)
        if depth >= max_depth or len(rows) < 2 or np.count_nonzero(node_counts) == 1:
            return node
        split = best_split(vectors[rows], labels[rows], n_labels)
        if split is None:
            return node
        index, cut, _ = split
        goes_left = vectors[rows, index] <= cut
        logger.debug(f"node {node} depth {depth}: feature {index} <= {cut} ({len(rows)} samples)")
        feature[node] = index
        threshold[node] = cut
        left[node] = grow(rows[goes_left], depth + 1)
        right[node] = grow(rows[~goes_left], depth + 1)
        return node

    grow(np.arange(len(labels)), 0)
    model = TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.vstack(counts),
        max_depth=int(max_depth),
        schema=samples[0].schema,
        window=samples[0].window,
    )
    logger.info(f"Decision tree: {model.node_count} nodes, depth {model.depth}")
    return model


def tree_predict(model: TreeModel, sample) -> Union[int, np.ndarray]:
    labels = model.predict(sample)
    return int(labels[0]) if isinstance(sample, WindowedSample) else labels


def lstm_only_fit(samples: Sequence[WindowedSample], config: Optional[CascadeConfig] = None) -> CascadeModel:
    return train(samples, (config or CascadeConfig()).with_changes(architecture='lstm')).model


def lstm_only_predict(model: CascadeModel, samples) -> np.ndarray:
    return model.predict(samples)


def cnn_only_fit(samples: Sequence[WindowedSample], config: Optional[CascadeConfig] = None) -> CascadeModel:
    return train(samples, (config or CascadeConfig()).with_changes(architecture='cnn')).model


def cnn_only_predict(model: CascadeModel, samples) -> np.ndarray:
    return model.predict(samples)


class KnnClassifier(Classifier):
    """k nearest neighbors on min-max scaled windows unless normalize is False."""

    name = 'knn'

    def __init__(self, k: int = DEFAULT_K, normalize: bool = True):
        self.k = k
        self.normalize = normalize
        self._model: Optional[KnnModel] = None

    @property
    def model(self) -> Optional[KnnModel]:
        return self._model

    def fit(self, samples):
        self._model = knn_fit(samples, self.k, self.normalize)
        return self

    def predict(self, samples):
        return self._require_model().predict(samples)


class TreeClassifier(Classifier):
    name = 'tree'

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH):
        self.max_depth = max_depth
        self._model: Optional[TreeModel] = None

    @property
    def model(self) -> Optional[TreeModel]:
        return self._model

    def fit(self, samples):
        self._model = tree_fit(samples, self.max_depth)
        return self

    def predict(self, samples):
        return self._require_model().predict(samples)


class AdaptiveNeuralClassifier(NeuralClassifier):
    """
    NeuralClassifier that takes the window shape and class count from its training
    data, so one config file serves datasets of any feature selection.
    """

    def fit(self, samples):
        if not samples:
            raise DataError("Training dataset is empty")
        labels = np.array([sample.label for sample in samples])
        self.config = self.config.with_changes(
            num_features=len(samples[0].schema),
            window=samples[0].window,
            num_classes=max(self.config.num_classes, int(labels.max())),
        )
        return super().fit(samples)


def make_classifier(algo: str, config: Optional[CascadeConfig] = None, **options) -> Classifier:
    """
    Classifier registry.

    ``options`` carries the baseline knobs ``k`` (kNN) and ``max_depth`` (tree).
    """
    algo = str(algo).strip().lower()
    if algo == 'knn':
        return KnnClassifier(options.get('k', DEFAULT_K))
    if algo == 'tree':
        return TreeClassifier(options.get('max_depth', DEFAULT_MAX_DEPTH))
    if algo in ('cascade', 'lstm', 'cnn'):
        return AdaptiveNeuralClassifier(config, architecture=algo)
    raise ParameterError(f"Unknown algorithm '{algo}', expected one of {ALGORITHMS}")


def read_classifier_config(path: Optional[Union[str, Path]]) -> Tuple[CascadeConfig, Dict[str, int]]:
    """
    Split a ``key = value`` config file into the network config and baseline options.

    ``k`` and ``max_depth`` go to the baselines; every other key must be a
    CascadeConfig field.
    """
    if path is None:
        return CascadeConfig(), {}
    values = read_key_values(path)
    options: Dict[str, int] = {}
    for key, cast in BASELINE_OPTIONS.items():
        if key in values:
            try:
                options[key] = cast(values.pop(key))
            except ValueError as e:
                raise ConfigurationError(f"{path}: bad value for '{key}' ({e})") from e
    return CascadeConfig.from_mapping(values), options
