"""Density-preserving rewiring of sparse sign-constrained weight matrices.

Simplified scheme: each potential synapse carries a fixed sign; an active
synapse whose weight crosses zero (against its sign) is deactivated, and an
equal number of dormant synapses are reactivated at a small magnitude,
chosen uniformly at random.  Total density and per-row sign constraints are
preserved throughout training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SparseWeights:
    weights: np.ndarray  # signed values; zero where dormant
    active: np.ndarray  # bool mask
    sign: np.ndarray  # +1/-1 per synapse, fixed

    @property
    def density(self) -> float:
        return float(self.active.mean())

    def effective(self) -> np.ndarray:
        return self.weights * self.active


def make_sparse(rng, shape, density, row_sign=None, scale=1.0) -> SparseWeights:
    """Random sparse block at the requested density.

    ``row_sign`` fixes the sign of every synapse in a row (+1/-1); rows with
    0 get an independent random sign per synapse.
    """
    active = np.zeros(shape, dtype=bool)
    k = int(round(density * active.size))
    active.flat[rng.choice(active.size, size=k, replace=False)] = True
    if row_sign is None:
        sign = rng.choice([-1.0, 1.0], size=shape)
    else:
        sign = np.broadcast_to(np.asarray(row_sign, dtype=np.float64)[:, None], shape).copy()
        free = sign == 0
        sign[free] = rng.choice([-1.0, 1.0], size=int(free.sum()))
    weights = np.abs(rng.normal(0.0, scale, size=shape)) * sign * active
    return SparseWeights(weights=weights, active=active, sign=sign)


def rewire_sparse(
    sparse: SparseWeights,
    seed_rng,
    reactivation_scale: float = 1e-3,
) -> int:
    """Deactivate sign-crossed synapses and reactivate as many dormant ones.

    Returns the number of synapses swapped.  Density changes by at most the
    shortfall when the dormant pool runs dry.
    """
    w, active, sign = sparse.weights, sparse.active, sparse.sign
    crossed = active & (w * sign < 0)
    n_cross = int(crossed.sum())
    if n_cross == 0:
        return 0
    active[crossed] = False
    w[crossed] = 0.0
    dormant = np.flatnonzero(~active)
    n_new = min(n_cross, dormant.size)
    picks = seed_rng.choice(dormant, size=n_new, replace=False)
    active.flat[picks] = True
    w.flat[picks] = sign.flat[picks] * reactivation_scale
    return n_cross
