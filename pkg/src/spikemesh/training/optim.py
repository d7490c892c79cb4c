"""Gradient-descent optimizers over named weight dictionaries."""

from __future__ import annotations

import numpy as np


class SgdMomentum:
    def __init__(self, lr: float = 1e-2, momentum: float = 0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity: dict = {}

    def step(self, weights: dict, grads: dict):
        for name, g in grads.items():
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(g)
            v = self.momentum * v - self.lr * g
            self.velocity[name] = v
            weights[name] += v


class Adam:
    def __init__(self, lr: float = 2e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict = {}
        self.v: dict = {}
        self.t = 0

    def step(self, weights: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            weights[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
