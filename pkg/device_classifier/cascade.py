"""
LSTM-CNN cascade classifier and its mini-batch SGD training loop.

Architecture (``architecture = cascade``)::

    window (t x F) -> LSTM -> LSTM -> t hidden vectors as columns (h x t map)
        -> conv (filters, kernel, stride) -> ReLU -> max-pool -> flatten
        -> [dense + ReLU when dense_hidden > 0] -> dropout -> dense -> softmax

The same loop trains the two reduced variants used for comparison:
``lstm`` drops the conv/pool stage and feeds the last hidden state to the head, and
``cnn`` drops the LSTM stage and convolves the raw (F x t) window.

Labels are category ids 1..num_classes everywhere outside nn_core.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    ConfigurationError,
    DataError,
    ParameterError,
    ShapeError,
    TrainingDivergenceError,
    UsageError,
)
from .features import MinMaxScaler, WindowedSample, report_fit, stack_samples
from .nn_core import (
    ConcatColumns,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LastStep,
    LstmLayer,
    MaxPool2D,
    Network,
    Relu,
    check_keep_prob,
    softmax,
)
from .textfiles import read_key_values

logger = logging.getLogger(__name__)

ARCHITECTURES = ('cascade', 'lstm', 'cnn')

CONFIG_ALIASES = {
    't': 'window',
    'h': 'lstm_hidden',
    'lr': 'learning_rate',
    'lambda': 'l2_lambda',
    'dropout': 'keep_prob',
    'algo': 'architecture',
}

SampleInput = Union[Sequence[WindowedSample], np.ndarray]


def _parse_pair(text: str) -> Tuple[int, int]:
    parts = [p for p in text.replace('x', ' ').replace('*', ' ').replace(',', ' ').split() if p]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ValueError(f"expected 'AxB', got '{text}'")
    return int(parts[0]), int(parts[1])


@dataclass(frozen=True)
class CascadeConfig:
    num_features: int = 6
    window: int = 6
    lstm_hidden: int = 32
    lstm_hidden_2: int = 0
    lstm_layers: int = 2
    conv_filters: int = 32
    kernel: Tuple[int, int] = (2, 2)
    conv_stride: Tuple[int, int] = (1, 1)
    pool: Tuple[int, int] = (2, 2)
    pool_stride: Tuple[int, int] = (2, 2)
    dense_hidden: int = 0
    keep_prob: float = 0.8
    num_classes: int = 4
    learning_rate: float = 0.05
    l2_lambda: float = 0.01
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    early_stop_epochs: int = 10
    early_stop_tol: float = 1e-5
    architecture: str = 'cascade'

    def __post_init__(self):
        for name in ('kernel', 'conv_stride', 'pool', 'pool_stride'):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    @property
    def second_hidden(self) -> int:
        return self.lstm_hidden_2 or self.lstm_hidden

    @property
    def map_rows(self) -> int:
        """Rows of the 2-D map the conv stage sees."""
        if self.architecture == 'cnn':
            return self.num_features
        return self.second_hidden if self.lstm_layers > 1 else self.lstm_hidden

    def conv_output(self) -> Tuple[int, int]:
        rows = (self.map_rows - self.kernel[0]) // self.conv_stride[0] + 1
        cols = (self.window - self.kernel[1]) // self.conv_stride[1] + 1
        return rows, cols

    def pool_output(self) -> Tuple[int, int]:
        rows, cols = self.conv_output()
        return (
            (rows - self.pool[0]) // self.pool_stride[0] + 1,
            (cols - self.pool[1]) // self.pool_stride[1] + 1,
        )

    def head_inputs(self) -> int:
        if self.architecture == 'lstm':
            return self.map_rows
        rows, cols = self.pool_output()
        return self.conv_filters * rows * cols

    def validate(self) -> None:
        """
        Raises:
            ParameterError: naming the first out-of-range field
        """
        if self.architecture not in ARCHITECTURES:
            raise ParameterError(f"architecture must be one of {ARCHITECTURES}, got '{self.architecture}'")
        if self.num_features < 1:
            raise ParameterError(f"num_features must be >= 1, got {self.num_features}")
        if self.window < 2:
            raise ParameterError(f"window t must be >= 2, got {self.window}")
        if self.lstm_hidden < 2 or self.lstm_hidden_2 < 0:
            raise ParameterError(f"LSTM hidden width must be >= 2, got {self.lstm_hidden}")
        if self.lstm_layers not in (1, 2):
            raise ParameterError(f"lstm_layers must be 1 or 2, got {self.lstm_layers}")
        if self.num_classes < 2:
            raise ParameterError(f"num_classes must be >= 2, got {self.num_classes}")
        check_keep_prob(self.keep_prob)
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2_lambda < 0:
            raise ParameterError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.batch_size < 1 or self.epochs < 0 or self.dense_hidden < 0:
            raise ParameterError("batch_size must be >= 1, epochs and dense_hidden >= 0")
        if self.architecture == 'lstm':
            return
        if self.conv_filters < 1 or min(self.kernel + self.conv_stride + self.pool + self.pool_stride) < 1:
            raise ParameterError("conv filters, kernel, stride and pool sizes must all be >= 1")
        if self.map_rows < self.kernel[0] or self.window < self.kernel[1]:
            raise ParameterError(
                f"A {self.map_rows}x{self.window} map is smaller than the "
                f"{self.kernel[0]}x{self.kernel[1]} kernel"
            )
        rows, cols = self.conv_output()
        if rows < self.pool[0] or cols < self.pool[1]:
            raise ParameterError(
                f"Convolution output {rows}x{cols} is smaller than the {self.pool[0]}x{self.pool[1]} pool"
            )

    @classmethod
    def from_mapping(cls, values: Mapping[str, object], base: Optional['CascadeConfig'] = None) -> 'CascadeConfig':
        """
        Build a config from string (or typed) values; missing keys keep their defaults.

        Raises:
            ConfigurationError: on an unknown key or an unparseable value
        """
        base = base or cls()
        types = {f.name: f.type for f in fields(cls)}
        changes = {}
        for raw_key, raw_value in values.items():
            key = CONFIG_ALIASES.get(str(raw_key).strip().lower(), str(raw_key).strip().lower())
            if key not in types:
                raise ConfigurationError(f"Unknown classifier config key '{raw_key}'")
            current = getattr(base, key)
            try:
                if isinstance(current, tuple):
                    value = raw_value if isinstance(raw_value, tuple) else _parse_pair(str(raw_value))
                elif isinstance(current, int):
                    value = int(raw_value)
                elif isinstance(current, float):
                    value = float(raw_value)
                else:
                    value = str(raw_value).strip().lower()
            except (TypeError, ValueError) as e:
                raise ConfigurationError(f"Bad value for '{raw_key}': {raw_value!r} ({e})") from e
            changes[key] = value
        return replace(base, **changes)

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> 'CascadeConfig':
        config = cls.from_mapping(read_key_values(path))
        if overrides:
            config = replace(config, **overrides)
        logger.info(f"Loaded classifier config from {path}")
        return config

    def to_mapping(self) -> Dict[str, str]:
        out = {}
        for key, value in asdict(self).items():
            if isinstance(value, tuple):
                out[key] = 'x'.join(str(v) for v in value)
            elif isinstance(value, float):
                out[key] = repr(value)
            else:
                out[key] = str(value)
        return out

    def with_changes(self, **changes) -> 'CascadeConfig':
        return replace(self, **changes)


def build_network(config: CascadeConfig, rng: Optional[np.random.Generator] = None) -> Network:
    """
    Assemble the layer stack for ``config.architecture``.

    With ``rng`` the weights are Glorot-uniform initialized in layer order; without it
    every parameter starts at zero.
    """
    layers = []
    if config.architecture in ('cascade', 'lstm'):
        layers.append(LstmLayer('lstm1', config.num_features, config.lstm_hidden, rng))
        if config.lstm_layers > 1:
            layers.append(LstmLayer('lstm2', config.lstm_hidden, config.second_hidden, rng))
    if config.architecture == 'lstm':
        layers.append(LastStep('last'))
    else:
        layers += [
            ConcatColumns('concat'),
            Conv2D('conv', 1, config.conv_filters, config.kernel, config.conv_stride, rng),
            Relu('conv_relu'),
            MaxPool2D('pool', config.pool, config.pool_stride),
            Flatten('flatten'),
        ]
    width = config.head_inputs()
    if config.dense_hidden:
        layers += [Dense('hidden', width, config.dense_hidden, rng), Relu('hidden_relu')]
        width = config.dense_hidden
    layers += [
        Dropout('dropout', config.keep_prob),
        Dense('output', width, config.num_classes, rng),
    ]
    return Network(layers)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainingMetadata:
    seed: int = 0
    epochs_run: int = 0
    final_loss: float = float('nan')
    stopped_early: bool = False
    train_samples: int = 0


class CascadeModel:
    """
    A network plus everything needed to apply it to raw windows: the config, the
    normalization fitted on the training set and the feature schema it expects.
    """

    def __init__(
        self,
        config: CascadeConfig,
        network: Optional[Network] = None,
        scaler: Optional[MinMaxScaler] = None,
        schema: Sequence[str] = (),
        metadata: Optional[TrainingMetadata] = None,
    ):
        self.config = config
        self.network = network or build_network(config, np.random.default_rng(config.seed))
        self.scaler = scaler
        self.schema = tuple(schema)
        self.metadata = metadata or TrainingMetadata(seed=config.seed)

    @classmethod
    def initialize(cls, config: CascadeConfig) -> 'CascadeModel':
        return cls(config)

    @property
    def parameters(self) -> Dict[str, np.ndarray]:
        return self.network.parameters()

    def _as_array(self, samples: SampleInput) -> np.ndarray:
        if isinstance(samples, WindowedSample):
            samples = [samples]
        if isinstance(samples, np.ndarray):
            x = np.asarray(samples, dtype=np.float64)
            if x.ndim == 2:
                x = x[None]
        else:
            if self.schema:
                for sample in samples:
                    if sample.schema != self.schema:
                        raise ShapeError(
                            f"Sample schema {sample.schema} differs from the model's {self.schema}"
                        )
            x, _ = stack_samples(samples)
        if x.ndim != 3 or x.shape[1:] != (self.config.window, self.config.num_features):
            raise ShapeError(
                f"Model expects windows of shape ({self.config.window}, {self.config.num_features}), "
                f"got {x.shape[1:]}"
            )
        return self.scaler.transform(x) if self.scaler is not None else x

    def forward(
        self, sample: SampleInput, training: bool = False, rng: Optional[np.random.Generator] = None
    ) -> np.ndarray:
        """Class probabilities; a single sample gives a (num_classes,) vector, a batch (N, num_classes)."""
        single = isinstance(sample, WindowedSample) or (isinstance(sample, np.ndarray) and sample.ndim == 2)
        x = self._as_array(sample)
        probs = softmax(self.network.forward(x, training=training, rng=rng))
        return probs[0] if single else probs

    def predict_proba(self, samples: SampleInput, chunk_size: int = 1024) -> np.ndarray:
        x = self._as_array(samples)
        if len(x) == 0:
            return np.zeros((0, self.config.num_classes))
        return np.vstack([
            self.network.predict_proba(x[start:start + chunk_size])
            for start in range(0, len(x), chunk_size)
        ])

    def predict(self, samples: SampleInput) -> np.ndarray:
        """Argmax category id per sample; ties go to the lowest id."""
        if not isinstance(samples, np.ndarray) and len(samples) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.argmax(self.predict_proba(samples), axis=1).astype(np.int64) + 1


@dataclass
class TrainingResult:
    model: CascadeModel
    trace: List[EpochStats] = field(default_factory=list)


def check_labels(labels: np.ndarray, num_classes: int) -> None:
    bad = labels[(labels < 1) | (labels > num_classes)]
    if len(bad):
        raise DataError(f"Labels must be within [1, {num_classes}], found {sorted(set(bad.tolist()))}")


def train(
    dataset: Sequence[WindowedSample],
    config: CascadeConfig,
    normalize: bool = True,
    on_epoch: Optional[Callable[[EpochStats], None]] = None,
) -> TrainingResult:
    """
    Fit a fresh network with mini-batch SGD.

    Each epoch reshuffles the samples with the config-seeded generator, averages the
    gradient over every batch and steps theta <- theta - lr * grad. Training stops
    early once the epoch loss has improved by less than ``early_stop_tol`` over the
    last ``early_stop_epochs`` epochs.

    Raises:
        DataError: on an empty dataset or a label outside 1..num_classes
        TrainingDivergenceError: when the loss stops being finite
    """
    if not dataset:
        raise DataError("Training dataset is empty")
    x, labels = stack_samples(dataset)
    check_labels(labels, config.num_classes)
    if x.shape[1:] != (config.window, config.num_features):
        raise ShapeError(
            f"Training windows have shape {x.shape[1:]}, config expects "
            f"({config.window}, {config.num_features})"
        )

    rng = np.random.default_rng(config.seed)
    network = build_network(config, rng)
    report_fit('training', dataset)
    scaler = MinMaxScaler.fit_samples(dataset) if normalize else None
    if scaler is not None:
        x = scaler.transform(x)
    targets = labels - 1
    params = network.parameters()
    metadata = TrainingMetadata(seed=config.seed, train_samples=len(dataset))
    trace: List[EpochStats] = []
    n = len(x)

    logger.info(
        f"Training {config.architecture} on {n} windows: epochs={config.epochs}, "
        f"batch={config.batch_size}, lr={config.learning_rate}, lambda={config.l2_lambda}"
    )
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads, probs = network.loss_and_gradients(
                x[batch], targets[batch], config.l2_lambda, training=True, rng=rng
            )
            if not math.isfinite(loss):
                logger.warning(f"Loss became {loss} at epoch {epoch}")
                raise TrainingDivergenceError(epoch, loss)
            for name, value in params.items():
                value -= config.learning_rate * grads[name]
            total_loss += loss * len(batch)
            correct += int(np.count_nonzero(np.argmax(probs, axis=1) == targets[batch]))
            logger.debug(f"epoch {epoch} batch {start // config.batch_size}: loss={loss:.6f}")

        stats = EpochStats(epoch, total_loss / n, correct / n)
        trace.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
        if epoch == 1 or epoch % 10 == 0:
            logger.info(f"epoch {epoch}: loss={stats.loss:.6f} accuracy={stats.accuracy:.4f}")

        patience = config.early_stop_epochs
        if patience and len(trace) > patience:
            if trace[-patience - 1].loss - stats.loss < config.early_stop_tol:
                logger.warning(
                    f"Early stop at epoch {epoch}: loss improved by less than "
                    f"{config.early_stop_tol} over {patience} epochs"
                )
                metadata.stopped_early = True
                break

    metadata.epochs_run = len(trace)
    metadata.final_loss = trace[-1].loss if trace else float('nan')
    model = CascadeModel(config, network, scaler, dataset[0].schema, metadata)
    return TrainingResult(model, trace)


def forward(
    model: CascadeModel, sample: SampleInput, training: bool = False, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    return model.forward(sample, training=training, rng=rng)


def predict(model: CascadeModel, samples: SampleInput) -> np.ndarray:
    return model.predict(samples)


class Classifier(ABC):
    """
    Shared fit/predict surface the evaluation harness drives.

    ``predict`` returns category ids; calling it before ``fit`` raises UsageError.
    """

    name: str = ''

    @abstractmethod
    def fit(self, samples: Sequence[WindowedSample]) -> 'Classifier':
        ...

    @abstractmethod
    def predict(self, samples: Sequence[WindowedSample]) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def model(self):
        ...

    def _require_model(self):
        if self.model is None:
            raise UsageError(f"{self.name}: predict called before fit")
        return self.model


class NeuralClassifier(Classifier):
    """The cascade or one of its reduced variants, behind the Classifier surface."""

    def __init__(self, config: Optional[CascadeConfig] = None, architecture: Optional[str] = None):
        config = config or CascadeConfig()
        if architecture is not None:
            config = config.with_changes(architecture=architecture)
        self.config = config
        self.name = config.architecture
        self.trace: List[EpochStats] = []
        self._model: Optional[CascadeModel] = None

    @property
    def model(self) -> Optional[CascadeModel]:
        return self._model

    def fit(self, samples):
        result = train(samples, self.config)
        self._model = result.model
        self.trace = result.trace
        return self

    def predict(self, samples):
        return self._require_model().predict(samples)
