"""
Dense numeric kernel for the cascade classifier: LSTM cells, 2-D convolution,
max-pooling, dense layers, dropout, softmax and cross-entropy with L2, each with an
exact backward pass.

Conventions:
- tensors are float64 numpy arrays; layer inputs carry a leading batch axis
- dense weights are (out, in) so a layer computes x @ W.T + b
- image-like tensors are (batch, channels, rows, cols)
- class targets inside this module are 0-based indices

Layers cache what their backward pass needs during forward; calling backward without
a forward raises UsageError. Gradients are returned as fresh dicts and never
accumulated into the layers.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit, log_softmax

from .exceptions import ParameterError, ShapeError, UsageError

logger = logging.getLogger(__name__)

Array = np.ndarray
GATES = ('g', 'i', 'f', 'o')


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> Array:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmCellParams:
    """
    Gate weights of one LSTM cell.

    ``W_<gate>x`` is (h, d) and multiplies the input, ``W_<gate>h`` is (h, h) and
    multiplies the previous hidden state; gate g is the tanh candidate, i/f/o are
    the sigmoid input, forget and output gates.
    """

    W_gx: Array
    W_gh: Array
    W_ix: Array
    W_ih: Array
    W_fx: Array
    W_fh: Array
    W_ox: Array
    W_oh: Array
    b_g: Array
    b_i: Array
    b_f: Array
    b_o: Array

    def __post_init__(self):
        hidden = self.b_g.shape[0]
        inputs = self.W_gx.shape[1]
        for gate in GATES:
            wx, wh, b = self.gate(gate)
            if wx.shape != (hidden, inputs) or wh.shape != (hidden, hidden) or b.shape != (hidden,):
                raise ShapeError(
                    f"LSTM gate {gate} has shapes {wx.shape}, {wh.shape}, {b.shape}; "
                    f"expected ({hidden}, {inputs}), ({hidden}, {hidden}), ({hidden},)"
                )

    @property
    def input_size(self) -> int:
        return self.W_gx.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.b_g.shape[0]

    def gate(self, name: str) -> Tuple[Array, Array, Array]:
        return getattr(self, f'W_{name}x'), getattr(self, f'W_{name}h'), getattr(self, f'b_{name}')

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> 'LstmCellParams':
        values = {}
        for gate in GATES:
            values[f'W_{gate}x'] = np.zeros((hidden_size, input_size))
            values[f'W_{gate}h'] = np.zeros((hidden_size, hidden_size))
            values[f'b_{gate}'] = np.zeros(hidden_size)
        return cls(**values)

    @classmethod
    def initialize(
        cls, rng: np.random.Generator, input_size: int, hidden_size: int, forget_bias: float = 1.0
    ) -> 'LstmCellParams':
        values = {}
        for gate in GATES:
            values[f'W_{gate}x'] = glorot_uniform(rng, (hidden_size, input_size), input_size, hidden_size)
            values[f'W_{gate}h'] = glorot_uniform(rng, (hidden_size, hidden_size), hidden_size, hidden_size)
            values[f'b_{gate}'] = np.zeros(hidden_size)
        values['b_f'] = np.full(hidden_size, float(forget_bias))
        return cls(**values)

    def as_dict(self) -> Dict[str, Array]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class LstmState:
    h: Array
    s: Array

    def __post_init__(self):
        if np.shape(self.h) != np.shape(self.s):
            raise ShapeError(f"LSTM state mismatch: h {np.shape(self.h)} vs s {np.shape(self.s)}")

    @classmethod
    def zeros(cls, hidden_size: int, batch: Optional[int] = None) -> 'LstmState':
        shape = (hidden_size,) if batch is None else (batch, hidden_size)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class LstmCellCache:
    x: Array
    h_prev: Array
    s_prev: Array
    g: Array
    i: Array
    f: Array
    o: Array
    tanh_s: Array


def lstm_cell_forward(params: LstmCellParams, x: Array, prev: LstmState) -> Tuple[LstmState, LstmCellCache]:
    """
    One LSTM step; ``x`` is (d,) or (batch, d).

        g = tanh(W_gx x + W_gh h + b_g)
        i = sigmoid(W_ix x + W_ih h + b_i)    (f and o likewise)
        s' = g * i + s * f
        h' = tanh(s') * o
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.input_size or prev.h.shape[-1] != params.hidden_size:
        raise ShapeError(
            f"LSTM cell expects inputs of width {params.input_size} and state of width "
            f"{params.hidden_size}, got {x.shape} and {prev.h.shape}"
        )
    pre = {}
    for gate in GATES:
        wx, wh, b = params.gate(gate)
        pre[gate] = x @ wx.T + prev.h @ wh.T + b
    g = np.tanh(pre['g'])
    i = expit(pre['i'])
    f = expit(pre['f'])
    o = expit(pre['o'])
    s = g * i + prev.s * f
    tanh_s = np.tanh(s)
    h = tanh_s * o
    return LstmState(h, s), LstmCellCache(x, prev.h, prev.s, g, i, f, o, tanh_s)


def lstm_cell_backward(
    params: LstmCellParams, cache: LstmCellCache, dh: Array, ds: Array
) -> Tuple[Dict[str, Array], Array, Array, Array]:
    """
    Reverse one batched LSTM step.

    ``dh`` and ``ds`` are the loss gradients flowing into h' and s'.

    Returns:
        (parameter gradients, dx, dh_prev, ds_prev)
    """
    ds = ds + dh * cache.o * (1.0 - cache.tanh_s ** 2)
    dpre = {
        'g': ds * cache.i * (1.0 - cache.g ** 2),
        'i': ds * cache.g * cache.i * (1.0 - cache.i),
        'f': ds * cache.s_prev * cache.f * (1.0 - cache.f),
        'o': dh * cache.tanh_s * cache.o * (1.0 - cache.o),
    }
    grads: Dict[str, Array] = {}
    dx = np.zeros_like(cache.x)
    dh_prev = np.zeros_like(cache.h_prev)
    for gate in GATES:
        wx, wh, _ = params.gate(gate)
        d = dpre[gate]
        grads[f'W_{gate}x'] = d.T @ cache.x
        grads[f'W_{gate}h'] = d.T @ cache.h_prev
        grads[f'b_{gate}'] = d.sum(axis=0)
        dx += d @ wx
        dh_prev += d @ wh
    return grads, dx, dh_prev, ds * cache.f


def lstm_layer_forward(
    params: LstmCellParams, xs: Array, initial: Optional[LstmState] = None
) -> Tuple[Array, List[LstmCellCache]]:
    """
    Run a cell across a sequence and emit every hidden state.

    ``xs`` is (t, d) or (batch, t, d); the result has the same leading axes with d
    replaced by h. The initial state defaults to zeros.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim not in (2, 3):
        raise ShapeError(f"LSTM layer expects (t, d) or (batch, t, d) input, got {xs.shape}")
    batch = xs.shape[0] if xs.ndim == 3 else None
    state = initial or LstmState.zeros(params.hidden_size, batch)
    steps = xs.shape[-2]
    hidden: List[Array] = []
    caches: List[LstmCellCache] = []
    for k in range(steps):
        state, cache = lstm_cell_forward(params, xs[..., k, :], state)
        hidden.append(state.h)
        caches.append(cache)
    if not hidden:
        raise ShapeError("LSTM layer needs a sequence of at least one step")
    return np.stack(hidden, axis=-2), caches


def lstm_layer_backward(
    params: LstmCellParams, caches: Sequence[LstmCellCache], dhs: Array
) -> Tuple[Dict[str, Array], Array]:
    """Backpropagation through time for a batched layer; ``dhs`` is (batch, t, h)."""
    grads = {name: np.zeros_like(value) for name, value in params.as_dict().items()}
    batch, steps, hidden = dhs.shape
    dxs = np.zeros((batch, steps, params.input_size))
    dh_next = np.zeros((batch, hidden))
    ds_next = np.zeros((batch, hidden))
    for k in reversed(range(steps)):
        step_grads, dx, dh_next, ds_next = lstm_cell_backward(
            params, caches[k], dhs[:, k, :] + dh_next, ds_next
        )
        dxs[:, k, :] = dx
        for name, value in step_grads.items():
            grads[name] += value
    return grads, dxs


# ---------------------------------------------------------------------------
# Convolution and pooling
# ---------------------------------------------------------------------------

def _conv_windows(x: Array, kernel: Tuple[int, int], stride: Tuple[int, int]) -> Array:
    windows = sliding_window_view(x, kernel, axis=(2, 3))
    return windows[:, :, ::stride[0], ::stride[1]]


def conv2d_forward(
    x: Array, kernels: Array, bias: Array, stride: Tuple[int, int] = (1, 1)
) -> Tuple[Array, tuple]:
    """
    Valid cross-correlation (no kernel flip, no padding).

    ``x`` is (batch, C, H, W), ``kernels`` (F, C, kh, kw); the output is
    (batch, F, (H - kh) // sh + 1, (W - kw) // sw + 1).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or kernels.ndim != 4 or x.shape[1] != kernels.shape[1]:
        raise ShapeError(f"Convolution of input {x.shape} with kernels {kernels.shape} is undefined")
    kh, kw = kernels.shape[2:]
    if x.shape[2] < kh or x.shape[3] < kw:
        raise ShapeError(f"Convolution input {x.shape[2:]} is smaller than the {kh}x{kw} kernel")
    windows = _conv_windows(x, (kh, kw), stride)
    out = np.einsum('bcijkl,fckl->bfij', windows, kernels) + bias[None, :, None, None]
    return out, (x, kernels, stride)


def conv2d_backward(dout: Array, cache: tuple) -> Tuple[Array, Array, Array]:
    """Returns (dx, dkernels, dbias)."""
    x, kernels, stride = cache
    kh, kw = kernels.shape[2:]
    windows = _conv_windows(x, (kh, kw), stride)
    dkernels = np.einsum('bfij,bcijkl->fckl', dout, windows)
    dbias = dout.sum(axis=(0, 2, 3))
    dx = np.zeros_like(x)
    rows, cols = dout.shape[2:]
    for k in range(kh):
        for l in range(kw):
            dx[:, :, k:k + stride[0] * rows:stride[0], l:l + stride[1] * cols:stride[1]] += np.einsum(
                'bfij,fc->bcij', dout, kernels[:, :, k, l]
            )
    return dx, dkernels, dbias


def relu(x: Array) -> Array:
    return np.maximum(x, 0.0)


def maxpool_forward(
    x: Array, pool: Tuple[int, int] = (2, 2), stride: Optional[Tuple[int, int]] = None
) -> Tuple[Array, tuple]:
    """
    Max over pool-sized windows; trailing rows/cols that do not fill a window are dropped.

    Ties go to the first maximum in row-major order inside the window.
    """
    x = np.asarray(x, dtype=np.float64)
    stride = stride or pool
    if x.ndim != 4 or x.shape[2] < pool[0] or x.shape[3] < pool[1]:
        raise ShapeError(f"Cannot max-pool a {x.shape} tensor with a {pool[0]}x{pool[1]} window")
    windows = _conv_windows(x, pool, stride)
    flat = windows.reshape(windows.shape[:4] + (pool[0] * pool[1],))
    argmax = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    return out, (x.shape, argmax, pool, stride)


def maxpool_backward(dout: Array, cache: tuple) -> Array:
    """Route each pooled gradient back to the input position that won the max."""
    shape, argmax, pool, stride = cache
    b, c, i, j = np.indices(argmax.shape)
    rows = i * stride[0] + argmax // pool[1]
    cols = j * stride[1] + argmax % pool[1]
    dx = np.zeros(shape)
    np.add.at(dx, (b, c, rows, cols), dout)
    return dx


# ---------------------------------------------------------------------------
# Dense, dropout, softmax and loss
# ---------------------------------------------------------------------------

def dense_forward(W: Array, b: Array, x: Array) -> Array:
    if x.shape[-1] != W.shape[1]:
        raise ShapeError(f"Dense layer expects inputs of width {W.shape[1]}, got {x.shape}")
    return x @ W.T + b


def dense_backward(W: Array, x: Array, dout: Array) -> Tuple[Array, Array, Array]:
    """Returns (dx, dW, db) for a batched dense layer."""
    return dout @ W, dout.T @ x, dout.sum(axis=0)


def check_keep_prob(keep_prob: float) -> float:
    keep_prob = float(keep_prob)
    if not 0.0 < keep_prob <= 1.0:
        raise ParameterError(f"keep_prob must be in (0, 1], got {keep_prob}")
    return keep_prob


def dropout(
    x: Array, keep_prob: float, rng: Optional[np.random.Generator], training: bool
) -> Tuple[Array, Optional[Array]]:
    """
    Inverted dropout: each unit survives with keep_prob and survivors are scaled by
    1 / keep_prob. Identity outside training.

    Returns:
        (output, scaled mask or None when nothing was dropped)
    """
    keep_prob = check_keep_prob(keep_prob)
    if not training or keep_prob == 1.0:
        return x, None
    if rng is None:
        raise UsageError("Training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) < keep_prob) / keep_prob
    return x * mask, mask


def softmax(z: Array) -> Array:
    """Shift-invariant softmax over the last axis."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def l2_penalty(l2_lambda: float, weights: Sequence[Array]) -> float:
    return float(l2_lambda * sum(np.sum(w * w) for w in weights))


def cross_entropy_l2(probs: Array, labels, l2_lambda: float, weights: Sequence[Array] = ()) -> float:
    """
    Mean of -log p[label] over the batch plus lambda * sum ||W||^2.

    ``labels`` are 0-based class indices; a single probability vector with a scalar
    label is accepted too.
    """
    if l2_lambda < 0:
        raise ParameterError(f"L2 coefficient must be >= 0, got {l2_lambda}")
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(picked)) + l2_penalty(l2_lambda, weights))


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

class Layer:
    """
    A differentiable stage with named parameters.

    ``weight_names`` lists the parameters subject to L2 regularization.
    """

    weight_names: Tuple[str, ...] = ()

    def __init__(self, name: str):
        self.name = name
        self.params: Dict[str, Array] = OrderedDict()
        self._cache = None

    def forward(self, x: Array, training: bool = False, rng: Optional[np.random.Generator] = None) -> Array:
        raise NotImplementedError

    def backward(self, dout: Array) -> Tuple[Array, Dict[str, Array]]:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise UsageError(f"{self.name}: backward called without a preceding forward pass")
        cache, self._cache = self._cache, None
        return cache

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class LstmLayer(Layer):
    weight_names = tuple(f'W_{gate}{side}' for gate in GATES for side in 'xh')

    def __init__(self, name: str, input_size: int, hidden_size: int, rng: Optional[np.random.Generator] = None):
        super().__init__(name)
        if rng is None:
            cell = LstmCellParams.zeros(input_size, hidden_size)
        else:
            cell = LstmCellParams.initialize(rng, input_size, hidden_size)
        self.params.update(cell.as_dict())

    @property
    def cell(self) -> LstmCellParams:
        return LstmCellParams(**self.params)

    def forward(self, x, training=False, rng=None):
        hs, caches = lstm_layer_forward(self.cell, x)
        self._cache = caches
        return hs

    def backward(self, dout):
        caches = self._take_cache()
        grads, dx = lstm_layer_backward(self.cell, caches, dout)
        return dx, grads


class ConcatColumns(Layer):
    """(batch, t, h) sequence of vectors -> (batch, 1, h, t) single-channel map, time along columns."""

    def forward(self, x, training=False, rng=None):
        if x.ndim != 3:
            raise ShapeError(f"{self.name}: expected (batch, t, h), got {x.shape}")
        self._cache = True
        return np.ascontiguousarray(x.transpose(0, 2, 1)[:, None, :, :])

    def backward(self, dout):
        self._take_cache()
        return dout[:, 0].transpose(0, 2, 1), {}


class LastStep(Layer):
    """(batch, t, h) -> (batch, h): keep the final hidden state."""

    def forward(self, x, training=False, rng=None):
        self._cache = x.shape
        return x[:, -1, :]

    def backward(self, dout):
        shape = self._take_cache()
        dx = np.zeros(shape)
        dx[:, -1, :] = dout
        return dx, {}


class Conv2D(Layer):
    weight_names = ('kernels',)

    def __init__(
        self,
        name: str,
        in_channels: int,
        filters: int,
        kernel: Tuple[int, int] = (2, 2),
        stride: Tuple[int, int] = (1, 1),
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__(name)
        shape = (filters, in_channels) + tuple(kernel)
        receptive = kernel[0] * kernel[1]
        if rng is None:
            self.params['kernels'] = np.zeros(shape)
        else:
            self.params['kernels'] = glorot_uniform(rng, shape, in_channels * receptive, filters * receptive)
        self.params['bias'] = np.zeros(filters)
        self.stride = tuple(stride)

    def forward(self, x, training=False, rng=None):
        out, self._cache = conv2d_forward(x, self.params['kernels'], self.params['bias'], self.stride)
        return out

    def backward(self, dout):
        dx, dkernels, dbias = conv2d_backward(dout, self._take_cache())
        return dx, {'kernels': dkernels, 'bias': dbias}


class Relu(Layer):
    def forward(self, x, training=False, rng=None):
        self._cache = x > 0
        return relu(x)

    def backward(self, dout):
        return dout * self._take_cache(), {}


class MaxPool2D(Layer):
    def __init__(self, name: str, pool: Tuple[int, int] = (2, 2), stride: Optional[Tuple[int, int]] = None):
        super().__init__(name)
        self.pool = tuple(pool)
        self.stride = tuple(stride or pool)

    def forward(self, x, training=False, rng=None):
        out, self._cache = maxpool_forward(x, self.pool, self.stride)
        return out

    def backward(self, dout):
        return maxpool_backward(dout, self._take_cache()), {}


class Flatten(Layer):
    def forward(self, x, training=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._take_cache()), {}


class Dropout(Layer):
    def __init__(self, name: str, keep_prob: float):
        super().__init__(name)
        self.keep_prob = check_keep_prob(keep_prob)

    def forward(self, x, training=False, rng=None):
        out, mask = dropout(x, self.keep_prob, rng, training)
        self._cache = ('mask', mask)
        return out

    def backward(self, dout):
        _, mask = self._take_cache()
        return (dout if mask is None else dout * mask), {}


class Dense(Layer):
    weight_names = ('W',)

    def __init__(self, name: str, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None):
        super().__init__(name)
        if rng is None:
            self.params['W'] = np.zeros((out_features, in_features))
        else:
            self.params['W'] = glorot_uniform(rng, (out_features, in_features), in_features, out_features)
        self.params['b'] = np.zeros(out_features)

    def forward(self, x, training=False, rng=None):
        self._cache = x
        return dense_forward(self.params['W'], self.params['b'], x)

    def backward(self, dout):
        x = self._take_cache()
        dx, dW, db = dense_backward(self.params['W'], x, dout)
        return dx, {'W': dW, 'b': db}


class Network:
    """
    An ordered stack of layers ending in logits.

    Parameters are addressed as ``<layer>.<param>``, e.g. ``lstm1.W_gx``.
    """

    def __init__(self, layers: Sequence[Layer]):
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ParameterError(f"Layer names must be unique, got {names}")
        self.layers: List[Layer] = list(layers)

    def parameters(self) -> Dict[str, Array]:
        return OrderedDict(
            (f'{layer.name}.{key}', value)
            for layer in self.layers
            for key, value in layer.params.items()
        )

    def weight_names(self) -> List[str]:
        return [f'{layer.name}.{key}' for layer in self.layers for key in layer.weight_names]

    def weights(self) -> List[Array]:
        params = self.parameters()
        return [params[name] for name in self.weight_names()]

    def load_parameters(self, values: Dict[str, Array]) -> None:
        """Copy values into the existing arrays; names and shapes must match exactly."""
        params = self.parameters()
        if set(values) != set(params):
            missing = sorted(set(params) - set(values))
            extra = sorted(set(values) - set(params))
            raise ShapeError(f"Parameter names differ: missing {missing}, unexpected {extra}")
        for name, target in params.items():
            value = np.asarray(values[name], dtype=np.float64)
            if value.shape != target.shape:
                raise ShapeError(f"Parameter {name} has shape {value.shape}, expected {target.shape}")
            target[...] = value

    def forward(self, x: Array, training: bool = False, rng: Optional[np.random.Generator] = None) -> Array:
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, training=training, rng=rng)
        return out

    def predict_proba(self, x: Array) -> Array:
        return softmax(self.forward(x, training=False))

    def backward(self, dlogits: Array) -> Dict[str, Array]:
        grads: Dict[str, Array] = {}
        dout = dlogits
        for layer in reversed(self.layers):
            dout, layer_grads = layer.backward(dout)
            for key, value in layer_grads.items():
                grads[f'{layer.name}.{key}'] = value
        return grads

    def l2_penalty(self, l2_lambda: float) -> float:
        return l2_penalty(l2_lambda, self.weights())

    def loss_and_gradients(
        self,
        x: Array,
        targets: Array,
        l2_lambda: float,
        training: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[float, Dict[str, Array], Array]:
        """
        Forward, batch-mean cross-entropy plus L2, and the full backward pass.

        Softmax and cross-entropy are differentiated together: dlogits = (p - onehot) / B.
        Every weight matrix gets its 2 * lambda * W term; biases get none.

        Returns:
            (loss, gradients by qualified name, probabilities)
        """
        targets = np.asarray(targets, dtype=np.int64)
        logits = self.forward(x, training=training, rng=rng)
        log_probs = log_softmax(logits, axis=-1)
        batch = len(targets)
        rows = np.arange(batch)
        loss = float(-log_probs[rows, targets].mean()) + self.l2_penalty(l2_lambda)
        probs = np.exp(log_probs)
        dlogits = probs.copy()
        dlogits[rows, targets] -= 1.0
        dlogits /= batch
        grads = self.backward(dlogits)
        params = self.parameters()
        for name in self.weight_names():
            grads[name] = grads[name] + 2.0 * l2_lambda * params[name]
        return loss, grads, probs
