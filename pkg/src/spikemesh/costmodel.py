"""Spike-traffic accounting over a placement plus parametric latency, energy
and energy-delay-product models.

Every spike is delivered once per connected destination core of its neuron
(its own core included when it has local synapses); deliveries are classed
as intra-core, intra-chip or inter-chip by the placement.  The latency and
energy coefficients are explicit model parameters with placeholder
defaults; they are not measurements, and reports label them as such.  Only
the intra-core < intra-chip < inter-chip cost ordering is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .network import NetworkGraph
from .placement import AxonTables, Placement
from .simulator import Raster


class CostModelError(ValueError):
    pass


@dataclass
class TrafficStats:
    intra_core: int = 0
    intra_chip: int = 0
    inter_chip: int = 0
    per_step_inter_chip: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    spikes: int = 0

    @property
    def total_deliveries(self) -> int:
        return self.intra_core + self.intra_chip + self.inter_chip

    def to_dict(self) -> dict:
        return {
            "intra_core": self.intra_core,
            "intra_chip": self.intra_chip,
            "inter_chip": self.inter_chip,
            "peak_inter_chip_per_step": int(self.per_step_inter_chip.max())
            if self.per_step_inter_chip.size
            else 0,
            "spikes": self.spikes,
        }


@dataclass(frozen=True)
class EnergyModel:
    """Cost coefficients.  Placeholder magnitudes, ordered by distance."""

    e_intra_core: float = 2e-11  # J per delivery
    e_intra_chip: float = 1e-10
    e_inter_chip: float = 8e-10
    e_neuron_update: float = 1e-11  # J per neuron per step
    p_static: float = 0.5  # W
    step_time_base: float = 1e-5  # s per synchronous step
    congestion_coeff: float = 2e-8  # extra s per inter-chip delivery over threshold
    congestion_threshold: int = 0  # inter-chip deliveries per step free of charge

    def to_dict(self) -> dict:
        return asdict(self)


def account_traffic(placement: Placement, raster: Raster, graph: NetworkGraph) -> TrafficStats:
    """Classify every spike delivery of ``raster`` under ``placement``."""
    if raster.graph_hash and raster.graph_hash != placement.graph_hash:
        raise CostModelError(
            f"raster graph {raster.graph_hash} does not match placement graph"
            f" {placement.graph_hash}"
        )
    tables = AxonTables(placement, graph)
    stats = TrafficStats(per_step_inter_chip=np.zeros(raster.steps, np.int64))
    for pid, spikes in raster.spikes.items():
        cls = tables.delivery_classes.get(pid)
        if cls is None:
            continue
        counts = spikes.sum(axis=0).astype(np.int64)
        stats.intra_core += int(counts @ cls[:, 0])
        stats.intra_chip += int(counts @ cls[:, 1])
        stats.inter_chip += int(counts @ cls[:, 2])
        stats.spikes += int(counts.sum())
        stats.per_step_inter_chip += spikes.astype(np.int64) @ cls[:, 2]
    return stats


def estimate_latency(traffic: TrafficStats, model: EnergyModel, steps: int) -> float:
    """Base step time plus a congestion term linear in excess inter-chip load."""
    excess = np.maximum(
        traffic.per_step_inter_chip - model.congestion_threshold, 0
    ).sum()
    return steps * model.step_time_base + model.congestion_coeff * float(excess)


def estimate_energy(
    traffic: TrafficStats,
    model: EnergyModel,
    steps: int,
    neuron_count: int,
    latency: float,
) -> dict:
    static = model.p_static * latency
    dynamic = (
        traffic.intra_core * model.e_intra_core
        + traffic.intra_chip * model.e_intra_chip
        + traffic.inter_chip * model.e_inter_chip
        + neuron_count * steps * model.e_neuron_update
    )
    return {"static": static, "dynamic": dynamic, "total": static + dynamic}


def edp(energy_total: float, latency: float) -> float:
    return energy_total * latency


def evaluate_placement(
    placement: Placement,
    raster: Raster,
    graph: NetworkGraph,
    model: EnergyModel,
    neuron_count: int | None = None,
) -> dict:
    """Traffic, latency, energy and EDP of one placement on one raster."""
    if neuron_count is None:
        neuron_count = sum(p.size for p in graph.simulated_populations())
    traffic = account_traffic(placement, raster, graph)
    latency = estimate_latency(traffic, model, raster.steps)
    energy = estimate_energy(traffic, model, raster.steps, neuron_count, latency)
    summary = placement.summary()
    return {
        "cores": summary["cores"],
        "chips": summary["chips"],
        **traffic.to_dict(),
        "latency_s": latency,
        "energy_static_j": energy["static"],
        "energy_dynamic_j": energy["dynamic"],
        "energy_total_j": energy["total"],
        "edp_js": edp(energy["total"], latency),
    }


def compare_strategies(
    graph: NetworkGraph,
    raster: Raster,
    model: EnergyModel,
    placements: dict | None = None,
    strategies=("naive", "optimized"),
) -> dict:
    """One comparison row: each strategy's metrics plus their ratios.

    Ratios are first-strategy over second (e.g. naive/optimized), so values
    above 1 favor the second strategy.
    """
    from .placement import place

    if placements is None:
        placements = {s: place(graph, s) for s in strategies}
    row: dict = {}
    evals = {}
    for name in strategies:
        evals[name] = evaluate_placement(placements[name], raster, graph, model)
        for key, val in evals[name].items():
            row[f"{key}_{name}"] = val
    a, b = strategies
    for key in ("inter_chip", "latency_s", "energy_total_j", "edp_js"):
        denom = evals[b][key]
        row[f"ratio_{key}"] = evals[a][key] / denom if denom else float("inf")
    return row
