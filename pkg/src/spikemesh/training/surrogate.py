"""Piecewise-linear pseudo-derivative of the spike threshold and its
antiderivative, both expressed over the scaled voltage (0 at threshold)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SurrogateParams:
    """Dampening factor and support bounds of the pseudo-derivative.

    The values are training hyperparameters, not measured constants.
    """

    gamma: float = 0.3
    v_minus: float = 1.0
    v_plus: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0 or self.v_minus <= 0 or self.v_plus <= 0:
            raise ValueError("surrogate parameters must be positive")


def pseudo_derivative(v_s, params: SurrogateParams = SurrogateParams()):
    """Triangle function: peaks at ``gamma`` for v_s = 0, linearly decaying
    to zero at ``-v_minus`` and ``v_plus``, zero outside."""
    v = np.asarray(v_s, dtype=np.float64)
    g, vm, vp = params.gamma, params.v_minus, params.v_plus
    left = g * (1.0 + v / vm)
    right = g * (1.0 - v / vp)
    out = np.where(v < 0.0, left, right)
    out = np.where((v < -vm) | (v > vp), 0.0, out)
    return out


def relaxed_spike(v_s, params: SurrogateParams = SurrogateParams()):
    """Antiderivative of :func:`pseudo_derivative`.

    A continuous ramp from 0 to ``gamma * (v_minus + v_plus) / 2`` used as
    the spike function of the relaxed model that the finite-difference
    gradient oracle differentiates.
    """
    v = np.asarray(v_s, dtype=np.float64)
    g, vm, vp = params.gamma, params.v_minus, params.v_plus
    top = g * (vm + vp) / 2.0
    below = np.zeros_like(v)
    rising = g * (v + vm) ** 2 / (2.0 * vm)
    falling = g * (vm / 2.0 + v - v**2 / (2.0 * vp))
    out = np.where(v < 0.0, rising, falling)
    out = np.where(v < -vm, below, out)
    out = np.where(v > vp, top, out)
    return out
