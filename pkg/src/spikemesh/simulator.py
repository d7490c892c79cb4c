"""Synchronous time-stepped execution of a network graph.

Spikes travel through per-connection ring buffers: a spike emitted at step
``t`` over a synapse with delay ``d`` joins the target's weighted input when
step ``t + d + 1`` is computed (the extra step is the synchronous update
itself), so a delay-3 synapse produces a threshold crossing exactly four
steps after the presynaptic spike.

Results are independent of any thread budget: the engine is a deterministic
single pass over vectorized population updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import extract_embedding, encode_sentence, WordEncoderConfig
from .network import NetworkGraph
from .neurons import (
    NeuronState,
    ReadoutState,
    scaled_voltage_of,
    step_neuron,
    step_neuron_quantized,
    step_readout,
)


class SimulationError(ValueError):
    pass


@dataclass
class Raster:
    """Per-step spike record for every simulated population.

    ``spikes`` maps population id to a (steps, size) uint8 array.  Event
    tuples, when needed (files, tallies), are derived sorted by step, then
    population id, then neuron index.
    """

    steps: int
    spikes: dict = field(default_factory=dict)
    graph_hash: str = ""

    def events(self):
        for t in range(self.steps):
            for pid in sorted(self.spikes):
                arr = self.spikes[pid]
                if t < arr.shape[0]:
                    for n in np.flatnonzero(arr[t]):
                        yield t, pid, int(n)

    def total_spikes(self) -> int:
        return int(sum(arr.sum() for arr in self.spikes.values()))

    def counts(self, pid: str) -> np.ndarray:
        return self.spikes[pid].sum(axis=0).astype(np.int64)


@dataclass
class SimResult:
    raster: Raster
    readout: dict  # pid -> final membrane potential vector
    traces: dict  # (pid, neuron) -> dict of state-variable arrays
    scaled_voltage: dict  # pid -> (steps, size) array, only when recorded


def _delay_splits(graph, conn, quantized, cache):
    """Decompose a connection into per-delay deliverable blocks.

    Shared blocks are split once and reused: the cache key is the identity
    of the underlying arrays, so the hundreds of relational-function
    instances never materialize per-instance weight copies.
    """
    w_src = graph.weights_of(conn)
    d_src = graph.delays_of(conn)
    key = (id(w_src), id(d_src), conn.pattern, id(conn.mask))
    if key in cache:
        return cache[key]
    w = np.asarray(w_src, dtype=np.float64)
    if quantized:
        w = np.round(w).astype(np.int64)
    d = np.asarray(d_src, dtype=np.int64)
    if conn.pattern in ("dense", "sparse"):
        if conn.pattern == "sparse":
            w = w * conn.mask
        out = []
        for dv in np.unique(d):
            mask = d == dv
            if conn.pattern == "sparse":
                mask = mask & conn.mask
            if mask.any():
                out.append((int(dv), w * mask))
        result = ("mat", out)
    else:  # one_to_one
        out = []
        for dv in np.unique(d):
            idx = np.flatnonzero(d == dv)
            if idx.size:
                out.append((int(dv), idx, w[idx]))
        result = ("vec", out)
    cache[key] = result
    return result


class _Engine:
    """Mutable state of one simulation run."""

    def __init__(self, graph: NetworkGraph, steps: int, mode: str, inputs: dict):
        if mode not in ("real", "quantized"):
            raise SimulationError(f"unknown numeric mode {mode!r}")
        self.graph = graph
        self.steps = steps
        self.quantized = mode == "quantized"
        self.inputs = {}
        for pid, arr in inputs.items():
            if pid not in graph.populations:
                raise SimulationError(f"input provided for unknown population {pid!r}")
            arr = np.asarray(arr)
            need = graph.pop(pid).size
            if arr.ndim != 2 or arr.shape[1] != need or arr.shape[0] < steps:
                raise SimulationError(
                    f"input for {pid!r} must cover {steps} steps x {need} neurons,"
                    f" got {arr.shape}"
                )
            self.inputs[pid] = arr.astype(np.int64)
        for p in graph.populations.values():
            if p.params.kind == "input_source" and p.pid not in self.inputs:
                raise SimulationError(f"no input raster covers population {p.pid!r}")

        self.stepped = [
            p for p in graph.simulated_populations() if p.pid not in self.inputs
        ]
        self.states = {}
        self.beta = {}
        for p in self.stepped:
            if p.params.kind == "readout":
                self.states[p.pid] = ReadoutState.zeros(p.size)
            else:
                self.states[p.pid] = NeuronState.zeros(p.size, quantized=self.quantized)
                self.beta[p.pid] = p.beta_vector()
                if self.quantized:
                    self.beta[p.pid] = self.beta[p.pid].astype(np.int64)

        self.splits_by_src: dict[str, list] = {}
        split_cache: dict = {}
        depth_need: dict[str, int] = {}
        for conn in graph.connections:
            if conn.dst in self.inputs:
                continue  # forced populations ignore their inputs
            kind, data = _delay_splits(graph, conn, self.quantized, split_cache)
            max_d = max(item[0] for item in data) if data else 0
            depth_need[conn.dst] = max(depth_need.get(conn.dst, 1), max_d + 2)
            self.splits_by_src.setdefault(conn.src, []).append((conn.dst, kind, data))
        dtype = np.int64 if self.quantized else np.float64
        self.rings = {
            p.pid: np.zeros((depth_need.get(p.pid, 1), p.size), dtype)
            for p in self.stepped
        }

    def deliver(self, t: int, src: str, z: np.ndarray):
        targets = self.splits_by_src.get(src)
        if not targets:
            return
        idx = np.flatnonzero(z)
        if idx.size == 0:
            return
        for c_dst, kind, data in targets:
            ring = self.rings[c_dst]
            depth = ring.shape[0]
            if kind == "mat":
                for dv, w in data:
                    ring[(t + dv + 1) % depth] += w[idx].sum(axis=0)
            else:
                for dv, tgt, w in data:
                    fired = z[tgt] > 0
                    sel = tgt[fired]
                    if sel.size:
                        ring[(t + dv + 1) % depth][sel] += w[fired]


def run(
    graph: NetworkGraph,
    inputs: dict,
    steps: int,
    mode: str = "real",
    thread_budget: int | None = None,
    record_traces: tuple = (),
    record_scaled_voltage: tuple = (),
) -> SimResult:
    """Simulate ``steps`` synchronous steps of ``graph``.

    ``inputs`` maps population ids to (steps, size) spike arrays.  Input
    populations must all be covered; additional entries clamp ("force")
    simulated populations to a recorded raster, which is how staged
    embeddings are replayed.  ``thread_budget`` never affects results.
    """
    del thread_budget
    eng = _Engine(graph, steps, mode, inputs)
    rasters = {
        pid: np.zeros((steps, arr.shape[1]), dtype=np.uint8)
        for pid, arr in eng.inputs.items()
    }
    for p in eng.stepped:
        if p.params.kind != "readout":
            rasters[p.pid] = np.zeros((steps, p.size), dtype=np.uint8)

    traces = {
        key: {f: np.zeros(steps) for f in ("v", "v_psc", "v_ahp", "i_psc", "i_ahp")}
        for key in record_traces
    }
    vs_rec = {pid: np.zeros((steps, graph.pop(pid).size)) for pid in record_scaled_voltage}

    for t in range(steps):
        for pid, arr in eng.inputs.items():
            z = arr[t]
            rasters[pid][t] = z > 0
            eng.deliver(t, pid, z)
        for p in eng.stepped:
            pid = p.pid
            ring = eng.rings[pid]
            slot = t % ring.shape[0]
            u = ring[slot].copy()
            ring[slot] = 0
            if p.params.kind == "readout":
                eng.states[pid] = step_readout(eng.states[pid], p.params, u, t, steps)
                continue
            state = eng.states[pid]
            beta = eng.beta[pid]
            params = p.params
            if eng.quantized:
                new, z = _step_pop_quantized(state, params, beta, u)
            else:
                new, z = _step_pop(state, params, beta, u)
            eng.states[pid] = new
            rasters[pid][t] = z > 0
            if z.any():
                eng.deliver(t, pid, z)
            if pid in vs_rec:
                vs_rec[pid][t] = scaled_voltage_of(
                    new.v_psc + new.v_ahp, new.v_ahp, params.b0
                )
            for (tp, tn), rec in traces.items():
                if tp == pid:
                    rec["v"][t] = new.v_psc[tn] + new.v_ahp[tn]
                    rec["v_psc"][t] = new.v_psc[tn]
                    rec["v_ahp"][t] = new.v_ahp[tn]
                    rec["i_psc"][t] = new.i_psc[tn]
                    rec["i_ahp"][t] = new.i_ahp[tn]

    readout = {
        p.pid: np.asarray(eng.states[p.pid].v, dtype=np.float64)
        for p in eng.stepped
        if p.params.kind == "readout"
    }
    raster = Raster(steps=steps, spikes=rasters, graph_hash=graph.graph_hash())
    return SimResult(raster=raster, readout=readout, traces=traces, scaled_voltage=vs_rec)


def _step_pop(state, params, beta_vec, u):
    """Population-wide real-mode transition (per-neuron beta)."""
    a_i, a_v, a_a = params.alpha_i, params.alpha_v, params.alpha_ahp
    i_psc = a_i * state.i_psc + u
    i_ahp = a_a * state.i_ahp - beta_vec * state.last_spike
    live = np.where(state.refractory_left > 0, 0.0, 1.0)
    v_psc = live * (a_v * state.v_psc + i_psc / params.g_v)
    v_ahp = live * (a_v * state.v_ahp + i_ahp / params.g_v)
    refractory_left = np.maximum(state.refractory_left - 1, 0)
    z = ((v_psc + v_ahp) > params.b0).astype(np.int64)
    keep = 1 - z
    new = NeuronState(
        i_psc=i_psc,
        i_ahp=i_ahp,
        v_psc=v_psc * keep,
        v_ahp=v_ahp * keep,
        refractory_left=np.where(z > 0, params.refractory, refractory_left),
        last_spike=z,
    )
    return new, z


def _step_pop_quantized(state, params, beta_vec, u):
    from .neurons import q_clamp, q_decay, quantized_decay_factor

    fq_i = quantized_decay_factor(params.tau_i) if params.tau_i != 0 else 0
    fq_v = quantized_decay_factor(params.tau_v)
    fq_a = quantized_decay_factor(params.tau_ahp)
    i_psc = q_clamp(q_decay(state.i_psc, fq_i) + u)
    i_ahp = q_clamp(q_decay(state.i_ahp, fq_a) - beta_vec * state.last_spike)
    live = np.where(state.refractory_left > 0, 0, 1)
    v_psc = live * q_clamp(q_decay(state.v_psc, fq_v) + i_psc // int(params.g_v))
    v_ahp = live * q_clamp(q_decay(state.v_ahp, fq_v) + i_ahp // int(params.g_v))
    refractory_left = np.maximum(state.refractory_left - 1, 0)
    z = ((v_psc + v_ahp) > int(params.b0)).astype(np.int64)
    keep = 1 - z
    new = NeuronState(
        i_psc=i_psc,
        i_ahp=i_ahp,
        v_psc=v_psc * keep,
        v_ahp=v_ahp * keep,
        refractory_left=np.where(z > 0, params.refractory, refractory_left),
        last_spike=z,
    )
    return new, z


# ---------------------------------------------------------------------------
# Task-level drivers
# ---------------------------------------------------------------------------


def classify_smnist(graph: NetworkGraph, encoded: np.ndarray, mode: str = "real"):
    """Predicted digit: argmax of readout membrane potentials at the final step.

    Ties break toward the lowest index.
    """
    steps = encoded.shape[0]
    result = run(graph, {"inp": encoded}, steps, mode=mode)
    potentials = result.readout["out"]
    return int(np.argmax(potentials)), potentials


def _lsnn_subgraph(graph: NetworkGraph, name: str) -> NetworkGraph:
    sub = NetworkGraph()
    for pid in (f"inp_{name}", f"lsnn_{name}"):
        sub.populations[pid] = graph.pop(pid)
    sub.shared = graph.shared
    sub.connections = [
        c
        for c in graph.connections
        if c.src in sub.populations and c.dst in sub.populations
    ]
    return sub


def _feedforward_subgraph(graph: NetworkGraph) -> NetworkGraph:
    """Everything downstream of the LSNNs; the LSNNs stay as forced sources."""
    sub = NetworkGraph()
    skip_roles = ("input",)
    for p in graph.populations.values():
        if p.role not in skip_roles:
            sub.populations[p.pid] = p
    sub.shared = graph.shared
    sub.connections = [
        c
        for c in graph.connections
        if c.dst in sub.populations
        and sub.populations[c.dst].role != "lsnn"
        and c.src in sub.populations
    ]
    return sub


def relnet_embeddings(graph, sentences, question, cfg, mode="real"):
    """Stage the recurrent runs and return per-slot embedding blocks."""
    word_cfg = WordEncoderConfig(t_word=cfg.t_word, n_words=cfg.n_words, vocab=cfg.vocab)
    if len(sentences) > cfg.M:
        raise SimulationError(f"story has {len(sentences)} sentences, network takes {cfg.M}")
    embeddings = {}
    lsnn_rasters = {}
    names = [f"s{k}" for k in range(1, cfg.M + 1)] + ["q"]
    texts = {f"s{k}": s for k, s in enumerate(sentences, start=1)}
    texts["q"] = question
    for name in names:
        pid = f"lsnn_{name}"
        words = texts.get(name)
        if words is None:
            t_enc = word_cfg.total_steps
            lsnn_rasters[pid] = np.zeros((t_enc, cfg.lsnn_size), dtype=np.uint8)
            embeddings[pid] = np.zeros((cfg.t_sim, cfg.lsnn_size), dtype=np.uint8)
            continue
        enc = encode_sentence(words, word_cfg)
        sub = _lsnn_subgraph(graph, name)
        res = run(sub, {f"inp_{name}": enc}, enc.shape[0], mode=mode)
        lsnn_rasters[pid] = res.raster.spikes[pid]
        embeddings[pid] = extract_embedding(res.raster.spikes[pid], cfg.t_inp, cfg.t_sim)
    return embeddings, lsnn_rasters


def simulate_relnet_sample(graph, sentences, question, mode="real"):
    """Full staged run of one story; returns (answer, probabilities, Raster).

    The combined raster places the recurrent stage on steps
    ``[0, t_encode)`` (all LSNNs concurrently) and the feed-forward stage on
    the following ``t_sim`` steps.
    """
    from .builders import relnet_config_from_graph

    cfg = relnet_config_from_graph(graph)
    embeddings, lsnn_rasters = relnet_embeddings(graph, sentences, question, cfg, mode)
    ff = _feedforward_subgraph(graph)
    res = run(ff, embeddings, cfg.t_sim, mode=mode)

    t_enc = cfg.t_encode
    total = t_enc + cfg.t_sim
    combined = {}
    for pid, arr in lsnn_rasters.items():
        block = np.zeros((total, arr.shape[1]), dtype=np.uint8)
        block[:t_enc] = arr
        combined[pid] = block
    for pid, arr in res.raster.spikes.items():
        if pid in combined:
            continue
        block = np.zeros((total, arr.shape[1]), dtype=np.uint8)
        block[t_enc:] = arr
        combined[pid] = block
    raster = Raster(steps=total, spikes=combined, graph_hash=graph.graph_hash())

    scale = 1.0 / cfg.t_readout
    logits = res.readout["readout"] * scale
    exps = np.exp(logits - logits.max())
    probs = exps / exps.sum()
    return int(np.argmax(probs)), probs, raster


def answer_relnet(graph, sentences, question, mode="real"):
    """Answer word id plus the softmax probability vector."""
    answer, probs, _ = simulate_relnet_sample(graph, sentences, question, mode)
    return answer, probs


def metrics(raster: Raster, graph: NetworkGraph) -> dict:
    """Spike counts, mean rates in Hz, and spikes-per-neuron by subsystem."""
    per_neuron = {pid: raster.spikes[pid].sum(axis=0) for pid in raster.spikes}
    steps = max(raster.steps, 1)
    rates = {pid: counts * 1000.0 / steps for pid, counts in per_neuron.items()}
    by_role: dict[str, list] = {}
    for pid, counts in per_neuron.items():
        pop = graph.pop(pid)
        if pop.params.kind == "input_source":
            continue
        by_role.setdefault(pop.role, []).append(counts)
    spikes_per_neuron = {
        role: float(np.concatenate(v).mean()) for role, v in by_role.items()
    }
    sim_counts = [
        per_neuron[pid]
        for pid in per_neuron
        if graph.pop(pid).params.kind != "input_source"
    ]
    overall = float(np.concatenate(sim_counts).mean()) if sim_counts else 0.0
    return {
        "per_neuron": per_neuron,
        "rates_hz": rates,
        "spikes_per_neuron": spikes_per_neuron,
        "spikes_per_neuron_overall": overall,
        "total_spikes": raster.total_spikes(),
    }
