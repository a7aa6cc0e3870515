"""AdamW with decoupled weight decay."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class AdamW:
    """Adam with weight decay applied directly to the weights.

    Each step first shrinks every weight by ``(1 - lr * weight_decay)`` and then
    applies the bias-corrected moment update.
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        """Update ``params`` in place and return them."""
        for name, p in params.items():
            g = grads.get(name)
            if g is None or g.shape != p.shape or self.m[name].shape != p.shape:
                raise ShapeMismatch(f"gradient for {name!r} missing or mis-shaped")
        self.step_count += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        decay = 1.0 - self.lr * self.weight_decay
        for name, p in params.items():
            g = grads[name]
            m, v = self.m[name], self.v[name]
            p *= decay
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            denom = np.sqrt(v) / np.sqrt(bc2) + self.eps
            p -= (self.lr / bc1) * m / denom
        return params


def adamw_step(opt: AdamW, params, grads):
    return opt.step(params, grads)
