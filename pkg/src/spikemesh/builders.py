"""Builders for the three network families: plain LSNN fragments, the pixel
classification network, and the relational question-answering network.

Weight magnitudes produced here are seeded random initializations sized so
an untrained network exhibits moderate spiking (useful for traffic
benchmarks); training replaces them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .config import rng_for
from .network import Connection, GraphError, NetworkGraph, Population
from .neurons import NeuronParams

INPUT_PARAMS = NeuronParams(tau_v=math.inf, b0=math.inf, kind="input_source")

# Loihi-scale default magnitudes for threshold and AHP decrement.
B0_DEFAULT = 127.0
BETA_DEFAULT = 96.0
RELAY_WEIGHT = 2.0 * B0_DEFAULT + 1.0


def relay_params(tau_v: float = 7.0) -> NeuronParams:
    """Relay neurons use a delta PSC so one input spike yields exactly one
    output spike on the following step, for any input train."""
    return NeuronParams(tau_v=tau_v, tau_i=0.0, b0=B0_DEFAULT, refractory=0, kind="lif")


def _draw_delays(rng, shape, delay_range) -> np.ndarray:
    lo, hi = delay_range
    if not (1 <= lo <= hi):
        raise GraphError(f"delay range must satisfy 1 <= lo <= hi, got {delay_range}")
    return rng.integers(lo, hi + 1, size=shape).astype(np.int64)


def build_lsnn(
    size: int,
    ahp_fraction: float = 0.5,
    delay_range=(1, 3),
    seed: int = 0,
    pid: str = "lsnn",
    params: NeuronParams | None = None,
    self_connections: bool = True,
    weight_scale: float = 3.0,
) -> NetworkGraph:
    """Recurrent all-to-all LSNN fragment with an AHP subset drawn from the seed.

    Returns a graph containing the single population and its recurrent
    connection; callers embed richer context (inputs, readouts) themselves.
    """
    if size <= 0:
        raise GraphError("LSNN size must be positive")
    if not 0.0 <= ahp_fraction <= 1.0:
        raise GraphError("ahp_fraction must lie in [0, 1]")
    rng = rng_for(seed, "lsnn", pid)
    n_ahp = int(round(ahp_fraction * size))
    subset = np.sort(rng.choice(size, size=n_ahp, replace=False)) if n_ahp else None
    if params is None:
        kind = "lif_ahp" if n_ahp else "lif"
        params = NeuronParams(
            tau_v=7.0,
            tau_i=7.0,
            tau_ahp=140.0,
            beta=BETA_DEFAULT if n_ahp else 0.0,
            b0=B0_DEFAULT,
            refractory=0,
            kind=kind,
        )
    g = NetworkGraph()
    pop = g.add_population(Population(pid, size, params, role="lsnn", ahp_subset=subset))
    w = rng.normal(0.0, weight_scale, size=(size, size))
    d = _draw_delays(rng, (size, size), delay_range)
    if self_connections:
        g.connect(Connection(pid, pid, "dense", weights=w, delays=d))
    else:
        mask = ~np.eye(size, dtype=bool)
        g.connect(Connection(pid, pid, "sparse", weights=w * mask, delays=d, mask=mask))
    return g


# ---------------------------------------------------------------------------
# Pixel-stream classification network
# ---------------------------------------------------------------------------


def build_smnist_network(
    seed: int = 0,
    n_input: int = 80,
    n_rec: int = 240,
    n_exc: int = 180,
    n_ahp: int = 100,
    n_out: int = 10,
    connectivity: float = 0.20,
    tau_i: float = 20.0,
    weight_scale: float = 30.0,
) -> NetworkGraph:
    """Sparse recurrent classifier: spike-encoded pixels in, 10 readouts out.

    The recurrent population is split into excitatory and inhibitory
    neurons; outgoing weights of a neuron never change sign.  The AHP subset
    is drawn from the excitatory neurons.  Overall connectivity, counting
    input and readout synapses, is exactly ``connectivity``.
    """
    rng = rng_for(seed, "smnist")
    n_inh = n_rec - n_exc
    params = NeuronParams(
        tau_v=20.0,
        tau_i=tau_i,
        tau_ahp=700.0,
        beta=BETA_DEFAULT,
        b0=B0_DEFAULT,
        refractory=1,
        kind="lif_ahp",
    )
    readout = NeuronParams(
        tau_v=math.inf, tau_i=tau_i, b0=math.inf, kind="readout", readout_window=10**9
    )

    g = NetworkGraph(meta={"family": "smnist", "n_exc": n_exc, "seed": seed})
    g.add_population(Population("inp", n_input, INPUT_PARAMS, role="input"))
    ahp = np.sort(rng.choice(n_exc, size=n_ahp, replace=False))
    g.add_population(Population("rec", n_rec, params, role="lsnn", ahp_subset=ahp))
    g.add_population(Population("out", n_out, readout, role="readout"))

    # +1 rows are the excitatory neurons (indices < n_exc), -1 inhibitory.
    row_sign = np.where(np.arange(n_rec) < n_exc, 1.0, -1.0)

    def sparse_block(shape, sign_rows=None):
        mask = np.zeros(shape, dtype=bool)
        k = int(round(connectivity * mask.size))
        flat = rng.choice(mask.size, size=k, replace=False)
        mask.flat[flat] = True
        w = np.abs(rng.normal(0.0, weight_scale, size=shape))
        if sign_rows is None:
            w *= rng.choice([-1.0, 1.0], size=shape)
        else:
            w *= sign_rows[:, None]
        return mask, w * mask

    m_in, w_in = sparse_block((n_input, n_rec))
    d_in = np.ones((n_input, n_rec), dtype=np.int64)
    g.connect(Connection("inp", "rec", "sparse", weights=w_in, delays=d_in, mask=m_in))

    m_rec, w_rec = sparse_block((n_rec, n_rec), sign_rows=row_sign)
    d_rec = np.ones((n_rec, n_rec), dtype=np.int64)
    g.connect(
        Connection(
            "rec", "rec", "sparse", weights=w_rec, delays=d_rec, mask=m_rec, sign=row_sign
        )
    )

    m_out, w_out = sparse_block((n_rec, n_out), sign_rows=row_sign)
    d_out = np.ones((n_rec, n_out), dtype=np.int64)
    g.connect(
        Connection(
            "rec", "out", "sparse", weights=w_out, delays=d_out, mask=m_out, sign=row_sign
        )
    )
    g.validate()
    return g


# ---------------------------------------------------------------------------
# Relational network
# ---------------------------------------------------------------------------


@dataclass
class RelNetConfig:
    """Architecture constants of the relational network.

    Defaults are the full-scale published topology; tests shrink them.
    """

    M: int = 20
    vocab: int = 180
    lsnn_size: int = 200
    lsnn_ahp_fraction: float = 0.5
    gtheta_layers: tuple = (256, 256, 256, 256)
    fphi_layers: tuple = (256, 512, 160)
    agg_size: int | None = None  # defaults to the last g_theta layer size
    t_word: int = 10
    n_words: int = 11
    t_inp: int = 14
    t_sim: int = 37
    t_readout: int = 10
    delay_range: tuple = (1, 3)
    tau_v: float = 7.0
    tau_i: float = 7.0
    tau_ahp: float = 140.0
    beta: float = BETA_DEFAULT
    b0: float = B0_DEFAULT
    self_connections: bool = True
    # init scales: (mean, std) per block family, sized for visible activity
    w_lsnn_in: tuple = (0.0, 45.0)
    w_lsnn_rec: tuple = (0.0, 9.0)
    w_gtheta_l1: tuple = (0.05, 2.0)
    w_gtheta: tuple = (0.1, 2.5)
    w_agg: tuple = (8.0, 4.0)
    w_fphi: tuple = (0.1, 2.5)
    w_readout: tuple = (0.0, 2.0)

    def __post_init__(self):
        if self.M < 1:
            raise GraphError("need at least one sentence")
        if self.vocab < 1:
            raise GraphError("vocabulary must not be empty")
        if self.agg_size is None:
            self.agg_size = self.gtheta_layers[-1]

    @property
    def n_instances(self) -> int:
        return self.M * (self.M + 1) // 2

    @property
    def pairs(self) -> list:
        return [(i, j) for i in range(1, self.M + 1) for j in range(i, self.M + 1)]

    @property
    def t_encode(self) -> int:
        return self.t_word * self.n_words

    def lif(self) -> NeuronParams:
        return NeuronParams(
            tau_v=self.tau_v, tau_i=self.tau_i, b0=self.b0, refractory=0, kind="lif"
        )

    def lsnn_params(self) -> NeuronParams:
        return NeuronParams(
            tau_v=self.tau_v,
            tau_i=self.tau_i,
            tau_ahp=self.tau_ahp,
            beta=self.beta,
            b0=self.b0,
            refractory=0,
            kind="lif_ahp",
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _dense(rng, shape, scale, delay_range):
    mean, std = scale
    w = rng.normal(mean, std, size=shape)
    d = _draw_delays(rng, shape, delay_range)
    return w, d


def build_relnet(config: RelNetConfig, seed: int = 0) -> NetworkGraph:
    """Assemble the relational network for up to ``config.M`` sentences.

    One LSNN per sentence plus one for the question (sentence LSNNs share a
    single weight block, likewise their AHP subset), one relational-function
    instance per pair (i, j) with i <= j sharing all layer weights, a
    one-to-one aggregation layer, the readout stack, and one readout neuron
    per vocabulary word.  Fanout relays are not part of the build; the
    placement compiler inserts them.
    """
    cfg = config
    rng = rng_for(seed, "relnet")
    g = NetworkGraph(
        meta={"family": "relnet", "config": cfg.to_dict(), "seed": seed}
    )
    n_l = cfg.lsnn_size
    lsnn_p = cfg.lsnn_params()
    lif_p = cfg.lif()

    n_ahp = int(round(cfg.lsnn_ahp_fraction * n_l))
    subset_s = np.sort(rng.choice(n_l, size=n_ahp, replace=False)) if n_ahp else None
    subset_q = np.sort(rng.choice(n_l, size=n_ahp, replace=False)) if n_ahp else None

    for tag, (mean, std), shape in (
        ("lsnn_sent_in", cfg.w_lsnn_in, (cfg.vocab, n_l)),
        ("lsnn_sent_rec", cfg.w_lsnn_rec, (n_l, n_l)),
        ("lsnn_q_in", cfg.w_lsnn_in, (cfg.vocab, n_l)),
        ("lsnn_q_rec", cfg.w_lsnn_rec, (n_l, n_l)),
    ):
        w, d = _dense(rng, shape, (mean, std), cfg.delay_range)
        g.add_shared_block(tag, w, d)

    sizes = cfg.gtheta_layers
    w, d = _dense(rng, (n_l, sizes[0]), cfg.w_gtheta_l1, cfg.delay_range)
    g.add_shared_block("gtheta_l1_si", w, d)
    w, d = _dense(rng, (n_l, sizes[0]), cfg.w_gtheta_l1, cfg.delay_range)
    g.add_shared_block("gtheta_l1_sj", w, d)
    w, d = _dense(rng, (n_l, sizes[0]), cfg.w_gtheta_l1, cfg.delay_range)
    g.add_shared_block("gtheta_l1_q", w, d)
    for ell in range(1, len(sizes)):
        w, d = _dense(rng, (sizes[ell - 1], sizes[ell]), cfg.w_gtheta, cfg.delay_range)
        g.add_shared_block(f"gtheta_l{ell + 1}", w, d)
    mean, std = cfg.w_agg
    g.add_shared_block(
        "agg_in",
        rng.normal(mean, std, size=cfg.agg_size),
        _draw_delays(rng, cfg.agg_size, cfg.delay_range),
    )

    def lsnn_block(tag_prefix: str, name: str, subset):
        g.add_population(Population(f"inp_{name}", cfg.vocab, INPUT_PARAMS, role="input"))
        g.add_population(
            Population(f"lsnn_{name}", n_l, lsnn_p, role="lsnn", ahp_subset=subset)
        )
        g.connect(
            Connection(f"inp_{name}", f"lsnn_{name}", "dense", share_tag=f"{tag_prefix}_in")
        )
        g.connect(
            Connection(f"lsnn_{name}", f"lsnn_{name}", "dense", share_tag=f"{tag_prefix}_rec")
        )

    for k in range(1, cfg.M + 1):
        lsnn_block("lsnn_sent", f"s{k}", subset_s)
    lsnn_block("lsnn_q", "q", subset_q)

    for (i, j) in cfg.pairs:
        prev = None
        for ell, width in enumerate(sizes, start=1):
            pid = f"gtheta_{i}_{j}_l{ell}"
            g.add_population(
                Population(
                    pid,
                    width,
                    lif_p,
                    role="gtheta_layer",
                    meta={"pair": (i, j), "layer": ell},
                )
            )
            if ell == 1:
                g.connect(
                    Connection(
                        f"lsnn_s{i}", pid, "dense", share_tag="gtheta_l1_si",
                        meta={"slot": "i", "pair": (i, j)},
                    )
                )
                g.connect(
                    Connection(
                        f"lsnn_s{j}", pid, "dense", share_tag="gtheta_l1_sj",
                        meta={"slot": "j", "pair": (i, j)},
                    )
                )
                g.connect(
                    Connection(
                        "lsnn_q", pid, "dense", share_tag="gtheta_l1_q",
                        meta={"slot": "q", "pair": (i, j)},
                    )
                )
            else:
                g.connect(Connection(prev, pid, "dense", share_tag=f"gtheta_l{ell}"))
            prev = pid

    g.add_population(Population("agg", cfg.agg_size, lif_p, role="aggregation"))
    for (i, j) in cfg.pairs:
        g.connect(
            Connection(
                f"gtheta_{i}_{j}_l{len(sizes)}", "agg", "one_to_one", share_tag="agg_in"
            )
        )

    prev = "agg"
    prev_size = cfg.agg_size
    for ell, width in enumerate(cfg.fphi_layers, start=1):
        pid = f"fphi_l{ell}"
        g.add_population(Population(pid, width, lif_p, role="fphi_layer", meta={"layer": ell}))
        w, d = _dense(rng, (prev_size, width), cfg.w_fphi, cfg.delay_range)
        g.connect(Connection(prev, pid, "dense", weights=w, delays=d))
        prev, prev_size = pid, width

    readout_p = NeuronParams(
        tau_v=math.inf,
        tau_i=7.0,
        b0=math.inf,
        kind="readout",
        readout_window=cfg.t_readout,
    )
    g.add_population(Population("readout", cfg.vocab, readout_p, role="readout"))
    w, d = _dense(rng, (prev_size, cfg.vocab), cfg.w_readout, cfg.delay_range)
    g.connect(Connection(prev, "readout", "dense", weights=w, delays=d))

    g.validate()
    return g


def relnet_config_from_graph(graph: NetworkGraph) -> RelNetConfig:
    if graph.meta.get("family") != "relnet":
        raise GraphError("graph was not built by build_relnet")
    d = dict(graph.meta["config"])
    for key in ("gtheta_layers", "fphi_layers", "delay_range"):
        d[key] = tuple(d[key])
    for key in list(d):
        if key.startswith("w_"):
            d[key] = tuple(d[key])
    return RelNetConfig(**d)
