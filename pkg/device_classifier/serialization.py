"""
Versioned flat-text model files.

Layout::

    flowclass-model version=1 algo=<name> <hyperparameter>=<value> ...
    meta <key> <value>
    schema <feature> <feature> ...
    param <name> <shape, e.g. 32x1x2x2>
    <whitespace-separated values, 17 significant digits>

Every algorithm (cascade, lstm, cnn, knn, tree) uses the same layout; 17 significant
digits make a save/load round trip bit-exact.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from .baselines import KnnModel, TreeModel
from .cascade import CascadeConfig, CascadeModel, TrainingMetadata, build_network
from .exceptions import FlowclassError, ModelFormatError
from .features import MinMaxScaler

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MAGIC = 'flowclass-model'
FORMAT_VERSION = 1

AnyModel = Union[CascadeModel, KnnModel, TreeModel]


def _format_values(values: np.ndarray) -> str:
    return ' '.join('%.17g' % v for v in np.asarray(values, dtype=np.float64).ravel())


def _format_shape(shape: Tuple[int, ...]) -> str:
    return 'x'.join(str(d) for d in shape) if shape else '-'


def _parse_shape(text: str) -> Tuple[int, ...]:
    return () if text == '-' else tuple(int(d) for d in text.split('x'))


def algo_of(model: AnyModel) -> str:
    if isinstance(model, CascadeModel):
        return model.config.architecture
    if isinstance(model, KnnModel):
        return 'knn'
    if isinstance(model, TreeModel):
        return 'tree'
    raise ModelFormatError(f"Cannot serialize a {type(model).__name__}")


def _model_contents(model: AnyModel) -> Tuple[Dict[str, str], Dict[str, str], Tuple[str, ...], Dict[str, np.ndarray]]:
    """(header fields, meta, schema, params) of a model."""
    params: Dict[str, np.ndarray] = OrderedDict()
    meta: Dict[str, str] = OrderedDict()
    if isinstance(model, CascadeModel):
        header = model.config.to_mapping()
        header.pop('architecture')
        md = model.metadata
        meta.update(
            seed=str(md.seed),
            epochs_run=str(md.epochs_run),
            final_loss='%.17g' % md.final_loss,
            stopped_early=str(int(md.stopped_early)),
            train_samples=str(md.train_samples),
        )
        params.update(model.parameters)
        scaler = model.scaler
    elif isinstance(model, KnnModel):
        header = {'k': str(model.k), 'window': str(model.window)}
        params['vectors'] = model.vectors
        params['labels'] = model.labels
        scaler = model.scaler
    else:
        header = {'max_depth': str(model.max_depth), 'window': str(model.window)}
        for name in ('feature', 'threshold', 'left', 'right', 'counts'):
            params[name] = getattr(model, name)
        scaler = None
    if scaler is not None:
        params['scaler.minimum'] = scaler.minimum
        params['scaler.maximum'] = scaler.maximum
    return header, meta, model.schema, params


def save_model(model: AnyModel, path: PathLike) -> Path:
    """Write any trained model; parent directories are created."""
    header, meta, schema, params = _model_contents(model)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [' '.join([MAGIC, f'version={FORMAT_VERSION}', f'algo={algo_of(model)}']
                      + [f'{k}={v}' for k, v in header.items()])]
    lines += [f'meta {k} {v}' for k, v in meta.items()]
    lines.append(' '.join(['schema', *schema]))
    for name, value in params.items():
        value = np.asarray(value)
        lines.append(f'param {name} {_format_shape(value.shape)}')
        lines.append(_format_values(value))
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    logger.info(f"Saved {algo_of(model)} model with {len(params)} parameter blocks to {path}")
    return path


def _read_blocks(path: Path) -> Tuple[Dict[str, str], Dict[str, str], Tuple[str, ...], Dict[str, np.ndarray]]:
    lines: Iterator[str] = iter(path.read_text(encoding='utf-8').splitlines())
    first = next(lines, '').split()
    if not first or first[0] != MAGIC:
        raise ModelFormatError(f"{path} is not a model file")
    header = dict(token.split('=', 1) for token in first[1:] if '=' in token)
    if header.get('version') != str(FORMAT_VERSION):
        raise ModelFormatError(f"{path}: unsupported model format version {header.get('version')}")

    meta: Dict[str, str] = OrderedDict()
    schema: Tuple[str, ...] = ()
    params: Dict[str, np.ndarray] = OrderedDict()
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == 'meta' and len(parts) == 3:
            meta[parts[1]] = parts[2]
        elif parts[0] == 'schema':
            schema = tuple(parts[1:])
        elif parts[0] == 'param' and len(parts) == 3:
            shape = _parse_shape(parts[2])
            values = np.array(next(lines, '').split(), dtype=np.float64)
            if values.size != int(np.prod(shape)):
                raise ModelFormatError(
                    f"{path}: parameter {parts[1]} has {values.size} values for shape {shape}"
                )
            params[parts[1]] = values.reshape(shape)
        else:
            raise ModelFormatError(f"{path}: unexpected line '{line[:60]}'")
    return header, meta, schema, params


def _scaler_from(params: Dict[str, np.ndarray], schema: Tuple[str, ...]):
    if 'scaler.minimum' not in params:
        return None
    return MinMaxScaler(params.pop('scaler.minimum'), params.pop('scaler.maximum'), schema)


def load_model(path: PathLike) -> AnyModel:
    """
    Inverse of save_model.

    Raises:
        ModelFormatError: on a foreign, truncated or inconsistent file
    """
    path = Path(path)
    header, meta, schema, params = _read_blocks(path)
    algo = header.pop('algo', None)
    header.pop('version')
    scaler = _scaler_from(params, schema)
    try:
        if algo in ('cascade', 'lstm', 'cnn'):
            config = CascadeConfig.from_mapping({**header, 'architecture': algo})
            network = build_network(config)
            network.load_parameters(params)
            metadata = TrainingMetadata(
                seed=int(meta.get('seed', config.seed)),
                epochs_run=int(meta.get('epochs_run', 0)),
                final_loss=float(meta.get('final_loss', 'nan')),
                stopped_early=meta.get('stopped_early', '0') == '1',
                train_samples=int(meta.get('train_samples', 0)),
            )
            model: AnyModel = CascadeModel(config, network, scaler, schema, metadata)
        elif algo == 'knn':
            model = KnnModel(
                params['vectors'], params['labels'].astype(np.int64), int(header['k']),
                scaler, schema, int(header.get('window', 0)),
            )
        elif algo == 'tree':
            model = TreeModel(
                feature=params['feature'].astype(np.int64),
                threshold=params['threshold'],
                left=params['left'].astype(np.int64),
                right=params['right'].astype(np.int64),
                counts=params['counts'],
                max_depth=int(header['max_depth']),
                schema=schema,
                window=int(header.get('window', 0)),
            )
        else:
            raise ModelFormatError(f"{path}: unknown algorithm '{algo}'")
    except ModelFormatError:
        raise
    except (KeyError, ValueError, FlowclassError) as e:
        raise ModelFormatError(f"{path}: {e}") from e
    logger.info(f"Loaded {algo} model from {path}")
    return model


def model_summary(model: AnyModel) -> List[str]:
    """Human-readable lines describing a model, for logs and the admin."""
    algo = algo_of(model)
    lines = [f'algorithm: {algo}', f'features: {", ".join(model.schema) or "-"}']
    if isinstance(model, CascadeModel):
        lines.append(f'window: {model.config.window}, classes: {model.config.num_classes}')
        lines.append(
            f'epochs run: {model.metadata.epochs_run}, final loss: {model.metadata.final_loss:.6f}'
        )
    elif isinstance(model, KnnModel):
        lines.append(f'k: {model.k}, stored vectors: {len(model.vectors)}')
    else:
        lines.append(f'nodes: {model.node_count}, depth: {model.depth}')
    return lines
