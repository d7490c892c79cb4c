"""Regularization losses over spike rasters and scaled-voltage traces.

Each regularizer is zero exactly on its target set and linear in its
strength parameter; the outer square over the pooled deviation softens the
push as training approaches the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

V_S_LOW = -2.0
V_S_HIGH = 0.4


@dataclass
class LossConfig:
    lambda_rho: float = 0.0
    rho_target: float = 20.0  # Hz
    lambda_v: float = 0.0
    lambda_r: float = 0.0
    r_target: float = 300.0  # Hz, summed across relational-function instances
    task: str = "cross_entropy"  # "cross_entropy" | "mse_teacher"

    def __post_init__(self):
        if min(self.lambda_rho, self.lambda_v, self.lambda_r) < 0:
            raise ValueError("loss strengths must be >= 0")


def mean_rates_hz(spikes: np.ndarray) -> np.ndarray:
    """Per-neuron mean rate over a (batch, steps, neurons) raster."""
    b, t, _ = spikes.shape
    return spikes.sum(axis=(0, 1)) * 1000.0 / (t * b)


def loss_rate(spikes: np.ndarray, config: LossConfig) -> float:
    """lambda * (sum_j (mean rate_j - target)^2)^2 over a batched raster."""
    if spikes.size == 0:
        raise ValueError("need a nonempty batch")
    dev = mean_rates_hz(spikes) - config.rho_target
    return float(config.lambda_rho * (dev @ dev) ** 2)


def loss_rate_grad(spikes: np.ndarray, config: LossConfig) -> np.ndarray:
    """d loss_rate / d spikes, constant across batch and time."""
    b, t, _ = spikes.shape
    dev = mean_rates_hz(spikes) - config.rho_target
    s = float(dev @ dev)
    per_rate = config.lambda_rho * 2.0 * s * 2.0 * dev
    return per_rate * 1000.0 / (t * b)


def voltage_penalty(v_s: np.ndarray) -> np.ndarray:
    """Per-element penalty for scaled voltages outside [-2.0, 0.4]."""
    over = np.maximum(v_s - V_S_HIGH, 0.0)
    under = np.maximum(-v_s + V_S_LOW, 0.0)
    return over**2 + under**2


def loss_voltage(v_s: np.ndarray, lambda_v: float) -> float:
    """lambda * (mean element penalty)^2 over a scaled-voltage trace."""
    return float(lambda_v * voltage_penalty(v_s).mean() ** 2)


def loss_voltage_grad(v_s: np.ndarray, lambda_v: float) -> np.ndarray:
    m = voltage_penalty(v_s).mean()
    over = np.maximum(v_s - V_S_HIGH, 0.0)
    under = np.maximum(-v_s + V_S_LOW, 0.0)
    dpen = 2.0 * over - 2.0 * under
    return lambda_v * 2.0 * m * dpen / v_s.size


def in_range_fraction(v_s: np.ndarray) -> float:
    """Fraction of scaled-voltage samples inside the penalty-free band."""
    return float(((v_s >= V_S_LOW) & (v_s <= V_S_HIGH)).mean())


def instance_rate_sums(spikes: np.ndarray) -> np.ndarray:
    """R^b_k: per-story, per-neuron rate summed across instances.

    ``spikes``: (batch, instances, steps, neurons) raster of one layer.
    """
    b, p, t, n = spikes.shape
    rates = spikes.sum(axis=2) * 1000.0 / t  # (b, p, n) Hz
    return rates.sum(axis=1)  # (b, n)


def loss_gtheta_rate(layer_spikes, config: LossConfig) -> float:
    """Summed-instance rate regularizer, evaluated per layer and added up.

    ``layer_spikes``: list of (batch, instances, steps, neurons) arrays,
    one entry per relational-function layer.
    """
    total = 0.0
    for spikes in layer_spikes:
        r = instance_rate_sums(spikes)  # (b, n)
        dev = r.mean(axis=0) - config.r_target
        total += config.lambda_r * float(np.mean(dev**2)) ** 2
    return total


def loss_gtheta_rate_grad(spikes: np.ndarray, config: LossConfig) -> np.ndarray:
    """d loss / d spikes for one layer's (b, p, t, n) raster."""
    b, p, t, n = spikes.shape
    r = instance_rate_sums(spikes)
    dev = r.mean(axis=0) - config.r_target
    s = float(np.mean(dev**2))
    per_k = config.lambda_r * 2.0 * s * 2.0 * dev / n  # (n,)
    per_elem = per_k * (1000.0 / t) / b
    return np.broadcast_to(per_elem, (b, p, t, n)).copy()


def target_spikes_per_instance(r_target_hz: float, t_sim_steps: int, n_instances: int) -> float:
    """Spikes per neuron per instance window implied by the summed-rate target.

    With the one-millisecond step convention a window of ``t_sim_steps``
    lasts ``t_sim_steps / 1000`` seconds, so a summed target of R Hz across
    N instances leaves each neuron R * t_sim / 1000 / N spikes per window.
    """
    return r_target_hz * (t_sim_steps / 1000.0) / n_instances
