"""Forward/backward primitives with explicit caches.

Recurrent tensors are time-major ``(T, B, F)``; convolutional tensors are
channels-last ``(B, T, C)``. LSTM gate blocks are packed in the order
input, forget, output, cell-candidate so the three sigmoid gates are contiguous.
"""
from __future__ import annotations

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def sigmoid(x, out=None):
    """Logistic function as 0.5 * tanh(x / 2) + 0.5; overflow-free and fast."""
    out = np.multiply(x, 0.5, out=out)
    np.tanh(out, out=out)
    out *= 0.5
    out += 0.5
    return out


# -- LSTM ------------------------------------------------------------------------

def lstm_layer_forward(x, w_ih, w_hh, bias):
    """Run one LSTM layer over a whole sequence from zero initial state.

    Returns all hidden states ``(T, B, H)`` and the cache for the backward pass.
    """
    T, B, D = x.shape
    H = w_hh.shape[0]
    dtype = w_hh.dtype
    pre = (x.reshape(T * B, D) @ w_ih).reshape(T, B, 4 * H)
    pre += bias
    gates = np.empty((T, B, 4 * H), dtype=dtype)
    cs = np.empty((T, B, H), dtype=dtype)
    tcs = np.empty((T, B, H), dtype=dtype)
    hs = np.empty((T, B, H), dtype=dtype)
    h = np.zeros((B, H), dtype=dtype)
    c = np.zeros((B, H), dtype=dtype)
    a = np.empty((B, 4 * H), dtype=dtype)
    for t in range(T):
        np.matmul(h, w_hh, out=a)
        a += pre[t]
        g = gates[t]
        sigmoid(a[:, :3 * H], out=g[:, :3 * H])
        np.tanh(a[:, 3 * H:], out=g[:, 3 * H:])
        i, f, o, cand = g[:, :H], g[:, H:2 * H], g[:, 2 * H:3 * H], g[:, 3 * H:]
        np.multiply(f, c, out=cs[t])
        cs[t] += i * cand
        c = cs[t]
        np.tanh(c, out=tcs[t])
        np.multiply(o, tcs[t], out=hs[t])
        h = hs[t]
    return hs, (x, hs, cs, tcs, gates)


def lstm_layer_backward(dhs, cache, w_ih, w_hh, need_dx=True):
    """Backpropagation through time.

    ``dhs`` is the loss gradient w.r.t. every hidden state output ``(T, B, H)``.
    Returns ``(dx, dw_ih, dw_hh, dbias)``; ``dx`` is None when not requested.
    """
    x, hs, cs, tcs, gates = cache
    T, B, D = x.shape
    H = w_hh.shape[0]
    dtype = w_hh.dtype
    i, f, o, cand = (gates[..., k * H:(k + 1) * H] for k in range(4))
    c_prev = np.concatenate((np.zeros((1, B, H), dtype=dtype), cs[:-1]), axis=0)
    # step-independent factors: da = coef * dc for i, f, g and coef * dh for o
    coef = np.empty((T, B, 4 * H), dtype=dtype)
    np.multiply(cand, i * (1.0 - i), out=coef[..., :H])
    np.multiply(c_prev, f * (1.0 - f), out=coef[..., H:2 * H])
    np.multiply(tcs, o * (1.0 - o), out=coef[..., 2 * H:3 * H])
    np.multiply(i, 1.0 - cand * cand, out=coef[..., 3 * H:])
    dc_dh = o * (1.0 - tcs * tcs)
    dA = np.empty((T, B, 4 * H), dtype=dtype)
    dh = np.empty((B, H), dtype=dtype)
    dc = np.zeros((B, H), dtype=dtype)
    dh_next = np.zeros((B, H), dtype=dtype)
    w_hh_t = np.ascontiguousarray(w_hh.T)
    for t in range(T - 1, -1, -1):
        np.add(dhs[t], dh_next, out=dh)
        dc += dh * dc_dh[t]
        da = dA[t]
        np.multiply(coef[t].reshape(B, 4, H), dc[:, None, :], out=da.reshape(B, 4, H))
        np.multiply(coef[t, :, 2 * H:3 * H], dh, out=da[:, 2 * H:3 * H])
        np.matmul(da, w_hh_t, out=dh_next)
        dc *= f[t]  # cell-state gradient carried to step t - 1
    flat = dA.reshape(T * B, 4 * H)
    h_prev = np.concatenate((np.zeros((1, B, H), dtype=dtype), hs[:-1]), axis=0)
    dw_hh = h_prev.reshape(T * B, H).T @ flat
    dw_ih = x.reshape(T * B, D).T @ flat
    dbias = flat.sum(axis=0)
    dx = (flat @ w_ih.T).reshape(T, B, D) if need_dx else None
    return dx, dw_ih, dw_hh, dbias


# -- dropout / linear ------------------------------------------------------------

def dropout_mask(rng, shape, rate, dtype):
    """Inverted-dropout mask: kept units are scaled by 1/(1 - rate)."""
    if rate <= 0.0:
        return None
    keep = rng.random(shape) >= rate
    return keep.astype(dtype) / dtype.type(1.0 - rate)


def linear_forward(x, w, b):
    return x @ w + b


def linear_backward(dy, x, w):
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


# -- 1-D convolution (same length, edge padding) ---------------------------------

def _pads(k):
    left = (k - 1) // 2
    return left, k - 1 - left


def conv1d_forward(x, w, b):
    """``x`` (B, T, C), ``w`` (K, C, O) -> (B, T, O).

    The input is extended by repeating its edge samples so the output keeps
    length T and a constant input yields a constant response everywhere.
    """
    B, T, C = x.shape
    K, _, O = w.shape
    left, right = _pads(K)
    xp = np.pad(x, ((0, 0), (left, right), (0, 0)), mode="edge")
    cols = np.lib.stride_tricks.sliding_window_view(xp, K, axis=1)  # (B, T, C, K)
    cols = np.ascontiguousarray(cols.transpose(0, 1, 3, 2)).reshape(B * T, K * C)
    y = (cols @ w.reshape(K * C, O)).reshape(B, T, O)
    y += b
    return y, (cols, x.shape)


def conv1d_backward(dy, cache, w):
    cols, (B, T, C) = cache
    K, _, O = w.shape
    left, right = _pads(K)
    dflat = dy.reshape(B * T, O)
    dw = (cols.T @ dflat).reshape(K, C, O)
    db = dflat.sum(axis=0)
    dcols = (dflat @ w.reshape(K * C, O).T).reshape(B, T, K, C)
    dxp = np.zeros((B, T + K - 1, C), dtype=dy.dtype)
    for k in range(K):
        dxp[:, k:k + T] += dcols[:, :, k]
    dx = dxp[:, left:left + T].copy()
    if left:
        dx[:, 0] += dxp[:, :left].sum(axis=1)
    if right:
        dx[:, -1] += dxp[:, left + T:].sum(axis=1)
    return dx, dw, db


# -- activation / normalisation / pooling ----------------------------------------

def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(dy, x):
    return dy * (x > 0)


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train):
    """Normalise per channel over batch and time. ``x`` is (B, T, C).

    In train mode batch statistics (biased variance) are used and the running
    buffers are updated in place with momentum ``BN_MOMENTUM``.
    """
    if train:
        axes = (0, 1)
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        running_mean *= 1.0 - BN_MOMENTUM
        running_mean += BN_MOMENTUM * mean
        running_var *= 1.0 - BN_MOMENTUM
        running_var += BN_MOMENTUM * var
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean) * inv_std
    return gamma * xhat + beta, (xhat, inv_std, train)


def batchnorm_backward(dy, cache, gamma):
    xhat, inv_std, train = cache
    dgamma = (dy * xhat).sum(axis=(0, 1))
    dbeta = dy.sum(axis=(0, 1))
    dxhat = dy * gamma
    if not train:
        return dxhat * inv_std, dgamma, dbeta
    m = dy.shape[0] * dy.shape[1]
    dx = (inv_std / m) * (m * dxhat - dxhat.sum(axis=(0, 1)) - xhat * (dxhat * xhat).sum(axis=(0, 1)))
    return dx, dgamma, dbeta
