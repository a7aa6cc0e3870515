"""Stacked-LSTM and LSTM-FCN classifiers with hand-written backpropagation.

Both networks take a batch ``(B, N, 3)`` and return logits ``(B, num_classes)``;
softmax is applied only by the loss and by :meth:`Network.predict_proba`.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import NoForwardState, NonFiniteInput, SequenceTooShort, ShapeMismatch
from . import layers as L
from .loss import cross_entropy, softmax


@dataclass(frozen=True)
class LstmConfig:
    num_layers: int = 3
    hidden_size: int = 64
    input_size: int = 3
    dropout: float = 0.7
    num_classes: int = 2

    def __post_init__(self):
        if min(self.num_layers, self.hidden_size, self.input_size, self.num_classes) < 1:
            raise ValueError("LSTM dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class LstmFcnConfig:
    lstm_hidden: int = 16
    conv_channels: int = 16
    conv_kernel_sizes: tuple = (8, 5, 3)
    num_classes: int = 2
    dropout: float = 0.8
    input_size: int = 3

    def __post_init__(self):
        object.__setattr__(self, "conv_kernel_sizes", tuple(int(k) for k in self.conv_kernel_sizes))
        if len(self.conv_kernel_sizes) != 3 or min(self.conv_kernel_sizes) < 1:
            raise ValueError("LSTM-FCN uses three convolutions with positive kernels")
        if min(self.lstm_hidden, self.conv_channels, self.num_classes, self.input_size) < 1:
            raise ValueError("LSTM-FCN dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


def _uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def _lstm_params(rng, prefix, d_in, hidden, dtype):
    # the gate matrices act on the stacked [x; h] vector, so fan-in is d_in + hidden
    fan_in = d_in + hidden
    bias = np.zeros(4 * hidden, dtype=dtype)
    bias[hidden:2 * hidden] = 1.0  # forget gate
    return {
        f"{prefix}.w_ih": _uniform(rng, (d_in, 4 * hidden), fan_in, dtype),
        f"{prefix}.w_hh": _uniform(rng, (hidden, 4 * hidden), fan_in, dtype),
        f"{prefix}.bias": bias,
    }


def init_lstm_params(config: LstmConfig, seed=0, dtype=np.float64) -> dict:
    rng = np.random.default_rng(seed)
    params = {}
    d_in = config.input_size
    for layer in range(config.num_layers):
        params.update(_lstm_params(rng, f"lstm{layer}", d_in, config.hidden_size, dtype))
        d_in = config.hidden_size
    params["head.weight"] = _uniform(rng, (config.hidden_size, config.num_classes),
                                     config.hidden_size, dtype)
    params["head.bias"] = np.zeros(config.num_classes, dtype=dtype)
    return params


def init_lstm_fcn_params(config: LstmFcnConfig, seed=0, dtype=np.float64):
    """Returns ``(params, buffers)``; buffers hold the batch-norm running statistics."""
    rng = np.random.default_rng(seed)
    params = _lstm_params(rng, "lstm", config.input_size, config.lstm_hidden, dtype)
    buffers = {}
    c_in = config.input_size
    C = config.conv_channels
    for k, K in enumerate(config.conv_kernel_sizes):
        params[f"conv{k}.weight"] = _uniform(rng, (K, c_in, C), K * c_in, dtype)
        params[f"conv{k}.bias"] = np.zeros(C, dtype=dtype)
        params[f"bn{k}.gamma"] = np.ones(C, dtype=dtype)
        params[f"bn{k}.beta"] = np.zeros(C, dtype=dtype)
        buffers[f"bn{k}.running_mean"] = np.zeros(C, dtype=dtype)
        buffers[f"bn{k}.running_var"] = np.ones(C, dtype=dtype)
        c_in = C
    width = config.lstm_hidden + C
    params["head.weight"] = _uniform(rng, (width, config.num_classes), width, dtype)
    params["head.bias"] = np.zeros(config.num_classes, dtype=dtype)
    return params, buffers


def _check_batch(batch, input_size, dtype):
    x = np.asarray(batch)
    if x.ndim != 3 or x.shape[2] != input_size or x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeMismatch(f"expected a (B, N, {input_size}) batch, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("batch contains NaN or Inf")
    return x.astype(dtype, copy=False)


def _rng(train_mode, rng_seed):
    return np.random.default_rng(rng_seed) if train_mode else None


# -- stacked LSTM ------------------------------------------------------------------

def _lstm_forward(params, x, config, train_mode, rng_seed):
    dtype = params["head.weight"].dtype
    rng = _rng(train_mode, rng_seed)
    seq = np.ascontiguousarray(x.transpose(1, 0, 2))
    caches, masks = [], []
    for layer in range(config.num_layers):
        p = f"lstm{layer}"
        hs, cache = L.lstm_layer_forward(seq, params[p + ".w_ih"], params[p + ".w_hh"],
                                         params[p + ".bias"])
        caches.append(cache)
        if train_mode and layer < config.num_layers - 1:
            mask = L.dropout_mask(rng, hs.shape, config.dropout, dtype)
            masks.append(mask)
            seq = hs * mask if mask is not None else hs
        else:
            masks.append(None)
            seq = hs
    last = seq[-1]
    logits = L.linear_forward(last, params["head.weight"], params["head.bias"])
    return logits, (caches, masks, last)


def _lstm_backward(params, config, cache, dlogits):
    caches, masks, last = cache
    grads = {}
    dlast, grads["head.weight"], grads["head.bias"] = L.linear_backward(
        dlogits, last, params["head.weight"])
    T, B, H = caches[-1][1].shape
    dhs = np.zeros((T, B, H), dtype=dlast.dtype)
    dhs[-1] = dlast
    for layer in range(config.num_layers - 1, -1, -1):
        p = f"lstm{layer}"
        dx, grads[p + ".w_ih"], grads[p + ".w_hh"], grads[p + ".bias"] = L.lstm_layer_backward(
            dhs, caches[layer], params[p + ".w_ih"], params[p + ".w_hh"], need_dx=layer > 0)
        if layer > 0:
            mask = masks[layer - 1]
            dhs = dx * mask if mask is not None else dx
    return grads


def lstm_forward(params, batch, train_mode=False, rng_seed=None, config=None):
    """Logits of the stacked LSTM; the last top-layer hidden state feeds the head."""
    config = config or LstmConfig(
        num_layers=sum(1 for k in params if k.endswith(".w_hh")),
        hidden_size=params["lstm0.w_hh"].shape[0],
        input_size=params["lstm0.w_ih"].shape[0],
        num_classes=params["head.bias"].shape[0])
    x = _check_batch(batch, config.input_size, params["head.weight"].dtype)
    return _lstm_forward(params, x, config, train_mode, rng_seed)[0]


# -- LSTM-FCN ----------------------------------------------------------------------

def _lstm_fcn_forward(params, buffers, x, config, train_mode, rng_seed):
    if x.shape[1] < max(config.conv_kernel_sizes):
        raise SequenceTooShort(f"length {x.shape[1]} is shorter than the largest kernel "
                               f"{max(config.conv_kernel_sizes)}")
    dtype = params["head.weight"].dtype
    rng = _rng(train_mode, rng_seed)

    seq = np.ascontiguousarray(x.transpose(1, 0, 2))
    hs, lstm_cache = L.lstm_layer_forward(seq, params["lstm.w_ih"], params["lstm.w_hh"],
                                          params["lstm.bias"])
    mask = L.dropout_mask(rng, hs[-1].shape, config.dropout, dtype) if train_mode else None
    rec = hs[-1] * mask if mask is not None else hs[-1]

    # convolution branch: the record is treated as an N x 3 matrix whose three
    # columns are mixed by the first kernel
    z = x
    conv_caches = []
    for k in range(len(config.conv_kernel_sizes)):
        y, cc = L.conv1d_forward(z, params[f"conv{k}.weight"], params[f"conv{k}.bias"])
        r = L.relu_forward(y)
        z, bc = L.batchnorm_forward(r, params[f"bn{k}.gamma"], params[f"bn{k}.beta"],
                                    buffers[f"bn{k}.running_mean"], buffers[f"bn{k}.running_var"],
                                    train_mode)
        conv_caches.append((cc, y, bc))
    pooled = z.mean(axis=1)

    feat = np.concatenate((rec, pooled), axis=1)
    logits = L.linear_forward(feat, params["head.weight"], params["head.bias"])
    return logits, (lstm_cache, mask, conv_caches, feat, z.shape)


def _lstm_fcn_backward(params, config, cache, dlogits):
    lstm_cache, mask, conv_caches, feat, (B, T, C) = cache
    grads = {}
    dfeat, grads["head.weight"], grads["head.bias"] = L.linear_backward(
        dlogits, feat, params["head.weight"])
    H = config.lstm_hidden
    drec, dpooled = dfeat[:, :H], dfeat[:, H:]

    dz = np.broadcast_to(dpooled[:, None, :] / T, (B, T, C))
    for k in range(len(config.conv_kernel_sizes) - 1, -1, -1):
        cc, y, bc = conv_caches[k]
        dr, grads[f"bn{k}.gamma"], grads[f"bn{k}.beta"] = L.batchnorm_backward(
            dz, bc, params[f"bn{k}.gamma"])
        dy = L.relu_backward(dr, y)
        dz, grads[f"conv{k}.weight"], grads[f"conv{k}.bias"] = L.conv1d_backward(
            dy, cc, params[f"conv{k}.weight"])

    dh_last = drec * mask if mask is not None else drec
    Tl = lstm_cache[1].shape[0]
    dhs = np.zeros((Tl, B, H), dtype=dh_last.dtype)
    dhs[-1] = dh_last
    _, grads["lstm.w_ih"], grads["lstm.w_hh"], grads["lstm.bias"] = L.lstm_layer_backward(
        dhs, lstm_cache, params["lstm.w_ih"], params["lstm.w_hh"], need_dx=False)
    return grads


def lstm_fcn_forward(params, buffers, batch, train_mode=False, rng_seed=None,
                     config: LstmFcnConfig | None = None):
    config = config or LstmFcnConfig(
        lstm_hidden=params["lstm.w_hh"].shape[0],
        conv_channels=params["conv0.bias"].shape[0],
        conv_kernel_sizes=tuple(params[f"conv{k}.weight"].shape[0] for k in range(3)),
        num_classes=params["head.bias"].shape[0],
        input_size=params["lstm.w_ih"].shape[0])
    x = _check_batch(batch, config.input_size, params["head.weight"].dtype)
    return _lstm_fcn_forward(params, buffers, x, config, train_mode, rng_seed)[0]


# -- model objects -------------------------------------------------------------------

class Network:
    """Parameters, buffers and the cache of the most recent forward pass."""

    kind = ""

    def __init__(self, config, params, buffers=None):
        self.config = config
        self.params = params
        self.buffers = buffers if buffers is not None else {}
        self._cache = None
        self._logits = None

    @property
    def dtype(self):
        return self.params["head.weight"].dtype

    def forward(self, batch, train=False, rng_seed=None):
        x = _check_batch(batch, self.config.input_size, self.dtype)
        logits, self._cache = self._forward(x, train, rng_seed)
        self._logits = logits
        return logits

    def backward(self, targets):
        """Gradients of the mean cross-entropy of the last forward pass."""
        if self._cache is None:
            raise NoForwardState("call forward() before backward()")
        self.last_loss, dlogits = cross_entropy(self._logits, targets)
        return self._backward(self._cache, dlogits.astype(self.dtype, copy=False))

    def loss_and_grads(self, batch, targets, train=True, rng_seed=None):
        self.forward(batch, train=train, rng_seed=rng_seed)
        grads = self.backward(targets)
        return self.last_loss, grads

    def predict_logits(self, x, batch_size=256):
        out = [self._forward(_check_batch(x[i:i + batch_size], self.config.input_size,
                                          self.dtype), False, None)[0]
               for i in range(0, len(x), batch_size)]
        return np.concatenate(out, axis=0)

    def predict_proba(self, x, batch_size=256):
        return softmax(self.predict_logits(x, batch_size).astype(np.float64))

    def snapshot(self):
        return copy.deepcopy((self.params, self.buffers))

    def restore(self, snap):
        params, buffers = copy.deepcopy(snap)
        self.params.update(params)
        self.buffers.update(buffers)

    def tensors(self):
        """Named tensors for checkpointing: parameters followed by buffers."""
        return {**self.params, **self.buffers}


class LSTMClassifier(Network):
    kind = "lstm"

    def __init__(self, config: LstmConfig = LstmConfig(), seed=0, dtype=np.float64, params=None):
        super().__init__(config, params if params is not None else
                         init_lstm_params(config, seed, np.dtype(dtype)))

    def _forward(self, x, train, rng_seed):
        return _lstm_forward(self.params, x, self.config, train, rng_seed)

    def _backward(self, cache, dlogits):
        return _lstm_backward(self.params, self.config, cache, dlogits)


class LSTMFCNClassifier(Network):
    kind = "lstm-fcn"

    def __init__(self, config: LstmFcnConfig = LstmFcnConfig(), seed=0, dtype=np.float64,
                 params=None, buffers=None):
        if params is None:
            params, buffers = init_lstm_fcn_params(config, seed, np.dtype(dtype))
        super().__init__(config, params, buffers)

    def _forward(self, x, train, rng_seed):
        return _lstm_fcn_forward(self.params, self.buffers, x, self.config, train, rng_seed)

    def _backward(self, cache, dlogits):
        return _lstm_fcn_backward(self.params, self.config, cache, dlogits)


def build_network(kind: str, config=None, seed=0, dtype=np.float64) -> Network:
    if kind == "lstm":
        return LSTMClassifier(config or LstmConfig(), seed, dtype)
    if kind == "lstm-fcn":
        return LSTMFCNClassifier(config or LstmFcnConfig(), seed, dtype)
    raise ValueError(f"unknown network kind {kind!r}")
