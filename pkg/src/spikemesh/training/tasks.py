"""Desk-scale end-to-end training tasks.

These harnesses drive the trainable models on small synthetic datasets and
hand the results back through the package's own artifacts (graphs,
checkpoints, rasters), so the training path exercises the same code the
simulator and compiler use.  Sizes, strengths and learning rates here are
desk-scale engineering defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..builders import RelNetConfig, build_relnet
from ..config import rng_for
from ..encoding import ThresholdEncoderConfig, WordEncoderConfig, encode_pixels, encode_sentence
from ..neurons import NeuronParams
from ..simulator import metrics, relnet_embeddings, simulate_relnet_sample
from .losses import LossConfig, in_range_fraction
from .models import (
    TrainableLsnn,
    TrainableRelNet,
    lsnn_loss_and_grads,
    relnet_loss_and_grads,
    softmax,
)
from .optim import Adam
from .surrogate import SurrogateParams


# ---------------------------------------------------------------------------
# Binary pixel-stream classification
# ---------------------------------------------------------------------------


@dataclass
class SmnistDeskConfig:
    n_input: int = 16
    tail_steps: int = 14
    n_rec: int = 48
    n_ahp: int = 12
    n_out: int = 2
    tau_v: float = 20.0
    tau_i: float = 20.0
    tau_ahp: float = 150.0
    beta: float = 0.12
    b0: float = 1.0
    batch_size: int = 50
    epochs: int = 8
    lr: float = 2.5e-3
    lambda_v: float = 0.02
    lambda_rho: float = 1e-7
    rho_target: float = 25.0
    seed: int = 0

    def encoder(self) -> ThresholdEncoderConfig:
        return ThresholdEncoderConfig(
            num_input_neurons=self.n_input, tail_steps=self.tail_steps
        )

    def neuron_params(self) -> NeuronParams:
        return NeuronParams(
            tau_v=self.tau_v,
            tau_i=self.tau_i,
            tau_ahp=self.tau_ahp,
            beta=self.beta,
            b0=self.b0,
            refractory=1,
            kind="lif_ahp",
        )


def encode_digit_set(images: np.ndarray, cfg: SmnistDeskConfig) -> np.ndarray:
    enc_cfg = cfg.encoder()
    flat = images.reshape(images.shape[0], -1)
    steps = flat.shape[1] + cfg.tail_steps
    out = np.zeros((images.shape[0], steps, cfg.n_input), dtype=np.float64)
    for k in range(images.shape[0]):
        out[k] = encode_pixels(flat[k], enc_cfg)
    return out


def train_smnist_binary(
    train_images: np.ndarray,
    train_labels: np.ndarray,
    test_images: np.ndarray,
    test_labels: np.ndarray,
    cfg: SmnistDeskConfig = SmnistDeskConfig(),
    surrogate: SurrogateParams = SurrogateParams(),
) -> dict:
    """Train the recurrent classifier on a two-class pixel-stream task.

    Returns model, per-epoch history, held-out accuracy, and the final
    fraction of scaled-voltage samples inside the penalty-free band.
    """
    rng = rng_for(cfg.seed, "smnist-desk")
    x_train = encode_digit_set(train_images, cfg)
    x_test = encode_digit_set(test_images, cfg)
    y_train = train_labels.astype(np.int64)
    y_test = test_labels.astype(np.int64)

    model = TrainableLsnn(
        cfg.n_input,
        cfg.n_rec,
        cfg.n_out,
        cfg.neuron_params(),
        ahp_subset=np.sort(rng.choice(cfg.n_rec, size=cfg.n_ahp, replace=False)),
        readout_tau=cfg.tau_i,
        readout_window=None,  # integrate the readout over the whole sample
        seed=cfg.seed,
        init_scale=0.4,
    )
    loss_cfg = LossConfig(
        lambda_rho=cfg.lambda_rho,
        rho_target=cfg.rho_target,
        lambda_v=cfg.lambda_v,
    )
    opt = Adam(lr=cfg.lr)
    n = x_train.shape[0]
    history = {"loss": [], "in_range": []}
    order = np.arange(n)
    for _ in range(cfg.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        fractions = []
        for lo in range(0, n, cfg.batch_size):
            sel = order[lo : lo + cfg.batch_size]
            total, parts, grads, trace = lsnn_loss_and_grads(
                model, x_train[sel], y_train[sel], loss_cfg, surrogate
            )
            opt.step(model.weights, grads)
            epoch_loss += total * sel.size
            fractions.append(in_range_fraction(trace.v_s))
        history["loss"].append(epoch_loss / n)
        history["in_range"].append(float(np.mean(fractions)))

    correct = 0
    final_fraction = []
    for lo in range(0, x_test.shape[0], cfg.batch_size):
        trace = model.forward(x_test[lo : lo + cfg.batch_size])
        correct += int((trace.logits.argmax(axis=1) == y_test[lo : lo + cfg.batch_size]).sum())
        final_fraction.append(in_range_fraction(trace.v_s))
    accuracy = correct / x_test.shape[0]
    return {
        "model": model,
        "history": history,
        "test_accuracy": accuracy,
        "in_range_fraction": float(np.mean(final_fraction)),
        "loss_config": loss_cfg,
    }


# ---------------------------------------------------------------------------
# Toy relational task
# ---------------------------------------------------------------------------


def toy_relnet_config(m_sentences: int, vocab: int = 12) -> RelNetConfig:
    return RelNetConfig(
        M=m_sentences,
        vocab=vocab,
        lsnn_size=24,
        lsnn_ahp_fraction=1.0 / 3.0,
        gtheta_layers=(20, 20),
        fphi_layers=(20,),
        agg_size=20,
        t_word=5,
        n_words=2,
        t_inp=5,
        t_sim=14,
        t_readout=5,
        delay_range=(1, 1),
        tau_v=7.0,
        tau_i=7.0,
        tau_ahp=140.0,
        beta=0.15,
        b0=1.0,
        w_lsnn_in=(0.0, 0.9),
        w_lsnn_rec=(0.0, 0.25),
    )


def _story_embeddings(graph, cfg, stories_ids):
    """Per-pair embedding triplets from the graph's frozen embedders."""
    pairs = cfg.pairs
    b = len(stories_ids)
    e_i = np.zeros((b, len(pairs), cfg.t_sim, cfg.lsnn_size))
    e_j = np.zeros_like(e_i)
    e_q = np.zeros_like(e_i)
    answers = np.zeros(b, dtype=np.int64)
    for s_idx, (sentences, question, answer) in enumerate(stories_ids):
        emb, _ = relnet_embeddings(graph, sentences, question, cfg)
        for p_idx, (i, j) in enumerate(pairs):
            e_i[s_idx, p_idx] = emb[f"lsnn_s{i}"]
            e_j[s_idx, p_idx] = emb[f"lsnn_s{j}"]
            e_q[s_idx, p_idx] = emb["lsnn_q"]
        answers[s_idx] = answer
    return e_i, e_j, e_q, answers


def train_relnet_toy(
    m_sentences: int,
    stories_ids: list,
    steps: int = 120,
    batch_size: int = 16,
    lr: float = 4e-3,
    lambda_r: float = 1e-8,
    r_target: float = 300.0,
    seed: int = 0,
    vocab: int = 12,
    surrogate: SurrogateParams = SurrogateParams(),
) -> dict:
    """Train the relational stack on key-value stories with the summed-rate
    regularizer, then inject the weights back into the graph.

    ``stories_ids`` hold word-id sentences/questions/answers.  The LSNN
    embedders come from the built graph and stay frozen; only the
    feed-forward stack trains, mirroring the staged procedure.
    """
    cfg = toy_relnet_config(m_sentences, vocab=vocab)
    graph = build_relnet(cfg, seed=seed)
    e_i, e_j, e_q, answers = _story_embeddings(graph, cfg, stories_ids)

    model = TrainableRelNet(cfg, seed=seed)
    loss_cfg = LossConfig(lambda_r=lambda_r, r_target=r_target)
    opt = Adam(lr=lr)
    rng = rng_for(seed, "relnet-toy")
    n = e_i.shape[0]
    history = {"loss": [], "task": [], "gtheta_rate": []}
    for _ in range(steps):
        sel = rng.choice(n, size=min(batch_size, n), replace=False)
        total, parts, grads, _ = relnet_loss_and_grads(
            model, e_i[sel], e_j[sel], e_q[sel], answers[sel], loss_cfg, surrogate
        )
        opt.step(model.weights, grads)
        history["loss"].append(total)
        history["task"].append(parts["task"])
        history["gtheta_rate"].append(parts.get("gtheta_rate", 0.0))

    inject_relnet_weights(graph, model)
    return {"model": model, "graph": graph, "config": cfg, "history": history}


def inject_relnet_weights(graph, model: TrainableRelNet):
    """Copy trained feed-forward blocks into the graph's parameter blocks."""
    cfg = model.cfg
    graph.shared["gtheta_l1_si"].weights[:] = model.weights["g1_si"]
    graph.shared["gtheta_l1_sj"].weights[:] = model.weights["g1_sj"]
    graph.shared["gtheta_l1_q"].weights[:] = model.weights["g1_q"]
    for ell in range(2, len(cfg.gtheta_layers) + 1):
        graph.shared[f"gtheta_l{ell}"].weights[:] = model.weights[f"g{ell}"]
    graph.shared["agg_in"].weights[:] = model.weights["agg"]
    chain = ["agg"] + [f"fphi_l{ell}" for ell in range(1, len(cfg.fphi_layers) + 1)]
    chain_pairs = list(zip(chain[:-1], chain[1:])) + [(chain[-1], "readout")]
    names = [f"f{ell}" for ell in range(1, len(cfg.fphi_layers) + 1)] + ["w_out"]
    for (src, dst), name in zip(chain_pairs, names):
        for conn in graph.connections:
            if conn.src == src and conn.dst == dst:
                conn.weights[:] = model.weights[name]
                break


def measure_spikes_per_neuron(graph, stories_ids, subsystem: str = "gtheta_layer") -> dict:
    """Mean spikes per neuron over simulated stories, per subsystem."""
    per_story = []
    overall = []
    for sentences, question, _ in stories_ids:
        _, _, raster = simulate_relnet_sample(graph, sentences, question)
        m = metrics(raster, graph)
        per_story.append(m["spikes_per_neuron"].get(subsystem, 0.0))
        overall.append(m["spikes_per_neuron_overall"])
    return {
        "subsystem": float(np.mean(per_story)),
        "overall": float(np.mean(overall)),
    }


def relnet_toy_accuracy(model: TrainableRelNet, graph, cfg, stories_ids) -> float:
    e_i, e_j, e_q, answers = _story_embeddings(graph, cfg, stories_ids)
    _, _, logits, _ = model.forward(e_i, e_j, e_q)
    return float((softmax(logits).argmax(axis=1) == answers).mean())
