import numpy as np

from ..errors import BadTargetClass, ShapeMismatch


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, targets):
    """Mean negative log-likelihood and its gradient w.r.t. the logits."""
    logits = np.asarray(logits)
    targets = np.asarray(targets)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeMismatch(f"logits {logits.shape} vs targets {targets.shape}")
    if targets.dtype.kind not in "iu" or targets.size and (
            targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise BadTargetClass(f"targets must be class ids in 0..{logits.shape[1] - 1}")
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(B)
    loss = float(np.mean(log_norm - z[rows, targets]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, targets] -= 1.0
    grad /= B
    return loss, grad
