"""Adaptive moment estimation with the standard published defaults."""

from __future__ import annotations

import numpy as np


class Adam:
    """Updates a named parameter dict in place.

    Gradient dicts passed to step() must carry exactly the parameter names
    given at construction; a mismatch means a wiring bug upstream.
    """

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(p) for name, p in params.items()}
        self._v = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, grads):
        if grads.keys() != self.params.keys():
            missing = sorted(self.params.keys() ^ grads.keys())
            raise ValueError(f"gradient keys do not match parameters: {missing}")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
