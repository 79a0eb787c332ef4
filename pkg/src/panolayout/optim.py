"""Adam with bias correction, over Param objects."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam; leaves grads untouched so the caller controls zeroing."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if g.shape != p.data.shape:
                raise ValueError(f"grad shape {g.shape} != param shape {p.data.shape} for {p.name}")
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1 ** t)
            v_hat = self.v[i] / (1.0 - b2 ** t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_tensors(self):
        """Moment buffers keyed for checkpointing, in param order."""
        out = {}
        for i, p in enumerate(self.params):
            out[f"adam.m.{p.name}"] = self.m[i]
            out[f"adam.v.{p.name}"] = self.v[i]
        return out

    def load_state_tensors(self, tensors, step_count):
        for i, p in enumerate(self.params):
            self.m[i] = np.array(tensors[f"adam.m.{p.name}"], dtype=p.data.dtype)
            self.v[i] = np.array(tensors[f"adam.v.{p.name}"], dtype=p.data.dtype)
        self.step_count = int(step_count)
