"""Trainable network models with hand-written reverse-mode gradients.

Two model families mirror the simulator's networks:

* :class:`TrainableLsnn` - recurrent LIF population with an AHP subset and
  a windowed linear readout (pixel classification, teacher matching);
* :class:`TrainableRelNet` - the feed-forward relational stack driven by
  frozen, precomputed embedding spike blocks (its recurrent embedders are
  pretrained and fixed, matching the staged training procedure).

Conventions shared with the simulator: every synapse has delay 1, so the
drive at step t uses activity from step t-2; a spike resets the voltage
carry; with a one-step refractory period the following update is skipped
entirely.  During the backward pass the reset/refractory gates are
stop-gradients: adjoints flow through the PSC and AHP currents across
spikes but never through the reset event itself.

``mode`` selects the spike function: ``"spike"`` thresholds (training
forward), ``"relaxed"`` substitutes the surrogate's antiderivative, giving
the continuous model whose exact gradient the backward pass computes; the
finite-difference oracle perturbs that relaxed model with its gates frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import rng_for
from ..neurons import NeuronParams, decay_factor
from .losses import (
    LossConfig,
    loss_gtheta_rate,
    loss_gtheta_rate_grad,
    loss_rate,
    loss_rate_grad,
    loss_voltage,
    loss_voltage_grad,
)
from .surrogate import SurrogateParams, pseudo_derivative, relaxed_spike

DELAY = 2  # drive at step t reads activity emitted at t - DELAY (delay-1 synapses)


class TrainingError(ValueError):
    pass


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, targets: np.ndarray):
    probs = softmax(logits)
    b = logits.shape[0]
    nll = -np.log(probs[np.arange(b), targets] + 1e-30)
    dlogits = probs.copy()
    dlogits[np.arange(b), targets] -= 1.0
    return float(nll.mean()), dlogits / b


def mse(values: np.ndarray, targets: np.ndarray):
    diff = values - targets
    return float((diff**2).mean()), 2.0 * diff / diff.size


def _spike_fn(v_s, mode, surrogate):
    if mode == "spike":
        return (v_s > 0.0).astype(np.float64)
    if mode == "relaxed":
        return relaxed_spike(v_s, surrogate)
    raise TrainingError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Recurrent LSNN with readout
# ---------------------------------------------------------------------------


@dataclass
class LsnnTrace:
    x: np.ndarray
    i: np.ndarray
    a: np.ndarray
    v_psc: np.ndarray
    v_ahp: np.ndarray
    v_s: np.ndarray
    z: np.ndarray
    g_carry: np.ndarray
    g_in: np.ndarray
    i_out: np.ndarray
    logits: np.ndarray


class TrainableLsnn:
    """Input -> recurrent LIF/AHP population -> windowed linear readout."""

    def __init__(
        self,
        n_in: int,
        n_rec: int,
        n_out: int,
        params: NeuronParams,
        ahp_subset=None,
        readout_tau: float = 20.0,
        readout_window: int | None = None,
        out_scale: float | None = None,
        seed: int = 0,
        init_scale: float = 1.0,
    ):
        if params.refractory not in (0, 1):
            raise TrainingError("trainer supports refractory periods of 0 or 1 steps")
        self.n_in, self.n_rec, self.n_out = n_in, n_rec, n_out
        self.params = params
        self.beta = np.zeros(n_rec)
        if ahp_subset is not None:
            self.beta[np.asarray(ahp_subset)] = params.beta
        self.alpha_out = decay_factor(readout_tau)
        self.readout_window = readout_window
        self.out_scale = out_scale
        rng = rng_for(seed, "trainable-lsnn")
        s = init_scale * params.b0
        self.weights = {
            "w_in": rng.normal(0.0, s / math.sqrt(n_in), size=(n_in, n_rec)),
            "w_rec": rng.normal(0.0, s / math.sqrt(n_rec), size=(n_rec, n_rec)),
            "w_out": rng.normal(0.0, 1.0 / math.sqrt(n_rec), size=(n_rec, n_out)),
        }
        self.masks = {}  # optional {name: bool array}; active synapses only
        self.frozen = set()

    def effective(self, name: str) -> np.ndarray:
        w = self.weights[name]
        m = self.masks.get(name)
        return w * m if m is not None else w

    def forward(self, x: np.ndarray, mode: str = "spike",
                surrogate: SurrogateParams = SurrogateParams(),
                frozen_gates=None) -> LsnnTrace:
        p = self.params
        a_i, a_v, a_a = p.alpha_i, p.alpha_v, p.alpha_ahp
        b, t_steps, _ = x.shape
        n = self.n_rec
        w_in, w_rec, w_out = (self.effective(k) for k in ("w_in", "w_rec", "w_out"))
        window = self.readout_window if self.readout_window is not None else t_steps
        scale = self.out_scale if self.out_scale is not None else 1.0 / window

        i = np.zeros((b, t_steps, n))
        a = np.zeros((b, t_steps, n))
        v_psc = np.zeros((b, t_steps, n))
        v_ahp = np.zeros((b, t_steps, n))
        v_s = np.zeros((b, t_steps, n))
        z = np.zeros((b, t_steps, n))
        g_c = np.ones((b, t_steps, n))
        g_i = np.ones((b, t_steps, n))
        i_out = np.zeros((b, t_steps, self.n_out))
        v_out = np.zeros((b, self.n_out))

        for t in range(t_steps):
            s_t = x[:, t - DELAY] @ w_in + z[:, t - DELAY] @ w_rec if t >= DELAY else 0.0
            i[:, t] = (a_i * i[:, t - 1] if t else 0.0) + s_t
            z_prev = z[:, t - 1] if t else np.zeros((b, n))
            a[:, t] = (a_a * a[:, t - 1] if t else 0.0) - self.beta * z_prev
            if frozen_gates is None:
                r_t = 1.0 - z_prev if p.refractory == 1 else 1.0
                g_c[:, t] = (1.0 - z_prev) * r_t
                g_i[:, t] = r_t
            else:
                g_c[:, t] = frozen_gates[0][:, t]
                g_i[:, t] = frozen_gates[1][:, t]
            carry_psc = a_v * v_psc[:, t - 1] if t else 0.0
            carry_ahp = a_v * v_ahp[:, t - 1] if t else 0.0
            v_psc[:, t] = g_c[:, t] * carry_psc + g_i[:, t] * i[:, t] / p.g_v
            v_ahp[:, t] = g_c[:, t] * carry_ahp + g_i[:, t] * a[:, t] / p.g_v
            v_s[:, t] = (v_psc[:, t] + v_ahp[:, t] - p.b0) / (p.b0 - v_ahp[:, t])
            z[:, t] = _spike_fn(v_s[:, t], mode, surrogate)

            u_o = z[:, t - DELAY] @ w_out if t >= DELAY else 0.0
            i_out[:, t] = (self.alpha_out * i_out[:, t - 1] if t else 0.0) + u_o
            if t >= t_steps - window:
                v_out += i_out[:, t]

        return LsnnTrace(x, i, a, v_psc, v_ahp, v_s, z, g_c, g_i, i_out, v_out * scale)

    def backward(
        self,
        trace: LsnnTrace,
        dlogits: np.ndarray,
        loss_cfg: LossConfig,
        surrogate: SurrogateParams = SurrogateParams(),
    ) -> dict:
        """Gradients of task loss plus regularizers for all weight blocks."""
        p = self.params
        a_i, a_v, a_a = p.alpha_i, p.alpha_v, p.alpha_ahp
        x, z = trace.x, trace.z
        b, t_steps, n = z.shape
        w_rec, w_out = self.effective("w_rec"), self.effective("w_out")
        window = self.readout_window if self.readout_window is not None else t_steps
        scale = self.out_scale if self.out_scale is not None else 1.0 / window

        grads = {k: np.zeros_like(w) for k, w in self.weights.items()}
        dz = np.zeros((b, t_steps, n))
        if loss_cfg.lambda_rho:
            dz += loss_rate_grad(z, loss_cfg)
        dv_s_direct = (
            loss_voltage_grad(trace.v_s, loss_cfg.lambda_v)
            if loss_cfg.lambda_v
            else np.zeros((b, t_steps, n))
        )

        # readout chain: v_out = sum_{t in window} i_out[t], logits = v_out*scale
        dv_out = dlogits * scale
        carry_io = np.zeros((b, self.n_out))
        for t in range(t_steps - 1, -1, -1):
            di_o = carry_io + (dv_out if t >= t_steps - window else 0.0)
            if t >= DELAY:
                grads["w_out"] += np.einsum("bi,bo->io", z[:, t - DELAY], di_o)
                dz[:, t - DELAY] += di_o @ w_out.T
            carry_io = self.alpha_out * di_o

        denom = p.b0 - trace.v_ahp
        hprime = pseudo_derivative(trace.v_s, surrogate)
        carry_psc = np.zeros((b, n))
        carry_ahp = np.zeros((b, n))
        carry_i = np.zeros((b, n))
        carry_a = np.zeros((b, n))
        for t in range(t_steps - 1, -1, -1):
            dv_s = dv_s_direct[:, t] + dz[:, t] * hprime[:, t]
            dvp = carry_psc + dv_s / denom[:, t]
            dva = carry_ahp + dv_s * (1.0 + trace.v_s[:, t]) / denom[:, t]
            di = carry_i + trace.g_in[:, t] * dvp / p.g_v
            da = carry_a + trace.g_in[:, t] * dva / p.g_v
            carry_psc = a_v * trace.g_carry[:, t] * dvp
            carry_ahp = a_v * trace.g_carry[:, t] * dva
            if t >= DELAY:
                grads["w_in"] += np.einsum("bi,bj->ij", x[:, t - DELAY], di)
                grads["w_rec"] += np.einsum("bi,bj->ij", z[:, t - DELAY], di)
                dz[:, t - DELAY] += di @ w_rec.T
            carry_i = a_i * di
            if t >= 1:
                dz[:, t - 1] -= self.beta * da
            carry_a = a_a * da

        for name, m in self.masks.items():
            grads[name] *= m
        for name in self.frozen:
            grads[name][:] = 0.0
        return grads


def lsnn_loss_and_grads(
    model: TrainableLsnn,
    x: np.ndarray,
    targets: np.ndarray,
    loss_cfg: LossConfig,
    surrogate: SurrogateParams = SurrogateParams(),
    mode: str = "spike",
    frozen_gates=None,
):
    """One forward/backward pass; returns (total loss, parts, grads, trace)."""
    trace = model.forward(x, mode=mode, surrogate=surrogate, frozen_gates=frozen_gates)
    if loss_cfg.task == "cross_entropy":
        task, dlogits = cross_entropy(trace.logits, targets)
    else:
        task, dlogits = mse(trace.logits, targets)
    parts = {"task": task}
    total = task
    if loss_cfg.lambda_rho:
        parts["rate"] = loss_rate(trace.z, loss_cfg)
        total += parts["rate"]
    if loss_cfg.lambda_v:
        parts["voltage"] = loss_voltage(trace.v_s, loss_cfg.lambda_v)
        total += parts["voltage"]
    grads = model.backward(trace, dlogits, loss_cfg, surrogate)
    return total, parts, grads, trace


# ---------------------------------------------------------------------------
# Feed-forward relational stack on frozen embeddings
# ---------------------------------------------------------------------------


@dataclass
class FfTrace:
    s_in: object
    i: np.ndarray
    v: np.ndarray
    v_s: np.ndarray
    z: np.ndarray
    g_carry: np.ndarray


class _FfLif:
    """Shared forward/backward of one feed-forward LIF layer (no AHP,
    no refractory period)."""

    def __init__(self, params: NeuronParams):
        self.p = params

    def forward(self, s_in, mode, surrogate, frozen_gates=None) -> FfTrace:
        p = self.p
        b, t_steps, n = s_in.shape
        i = np.zeros_like(s_in)
        v = np.zeros_like(s_in)
        v_s = np.zeros_like(s_in)
        z = np.zeros_like(s_in)
        g_c = np.ones_like(s_in)
        for t in range(t_steps):
            i[:, t] = (p.alpha_i * i[:, t - 1] if t else 0.0) + s_in[:, t]
            if frozen_gates is None:
                g_c[:, t] = 1.0 - z[:, t - 1] if t else 1.0
            else:
                g_c[:, t] = frozen_gates[:, t]
            v[:, t] = g_c[:, t] * (p.alpha_v * v[:, t - 1] if t else 0.0) + i[:, t] / p.g_v
            v_s[:, t] = (v[:, t] - p.b0) / p.b0
            z[:, t] = _spike_fn(v_s[:, t], mode, surrogate)
        return FfTrace(s_in, i, v, v_s, z, g_c)

    def backward(self, trace: FfTrace, dz: np.ndarray, dv_s_direct, surrogate):
        """Returns d loss / d s_in given adjoints on the layer's spikes."""
        p = self.p
        b, t_steps, n = trace.z.shape
        hprime = pseudo_derivative(trace.v_s, surrogate)
        ds = np.zeros_like(trace.i)
        carry_v = np.zeros((b, n))
        carry_i = np.zeros((b, n))
        for t in range(t_steps - 1, -1, -1):
            dv_s = dz[:, t] * hprime[:, t]
            if dv_s_direct is not None:
                dv_s = dv_s + dv_s_direct[:, t]
            dv = carry_v + dv_s / p.b0
            di = carry_i + dv / p.g_v
            carry_v = p.alpha_v * trace.g_carry[:, t] * dv
            carry_i = p.alpha_i * di
            ds[:, t] = di
        return ds


class TrainableRelNet:
    """Relational stack: shared g_theta layers, one-to-one aggregation,
    readout stack, and windowed vocabulary readout.

    Inputs are precomputed embedding triplets from frozen LSNN embedders:
    arrays (batch, pairs, t_sim, lsnn) for the two sentence slots plus the
    question.  All instances share the layer weights, so the pair axis is
    folded into the batch for the layer evaluations.
    """

    def __init__(self, config, seed: int = 0, params: NeuronParams | None = None):
        cfg = config
        self.cfg = cfg
        self.params = params or NeuronParams(
            tau_v=cfg.tau_v, tau_i=cfg.tau_i, b0=cfg.b0, refractory=0, kind="lif"
        )
        self.cell = _FfLif(self.params)
        rng = rng_for(seed, "trainable-relnet")
        n_l = cfg.lsnn_size
        sizes = cfg.gtheta_layers
        b0 = self.params.b0

        def init(n_src, n_dst, gain=1.0):
            return rng.normal(0.0, gain * b0 / math.sqrt(n_src), size=(n_src, n_dst))

        self.weights = {
            "g1_si": init(n_l, sizes[0]),
            "g1_sj": init(n_l, sizes[0]),
            "g1_q": init(n_l, sizes[0]),
        }
        for ell in range(1, len(sizes)):
            self.weights[f"g{ell + 1}"] = init(sizes[ell - 1], sizes[ell], gain=2.0)
        self.weights["agg"] = np.abs(rng.normal(2.0 * b0 / 8, b0 / 8, size=cfg.agg_size))
        prev = cfg.agg_size
        for ell, width in enumerate(cfg.fphi_layers, start=1):
            self.weights[f"f{ell}"] = init(prev, width, gain=2.0)
            prev = width
        self.weights["w_out"] = rng.normal(0.0, 1.0 / math.sqrt(prev), size=(prev, cfg.vocab))
        self.alpha_out = decay_factor(7.0)

    def forward(self, e_i, e_j, e_q, mode="spike",
                surrogate: SurrogateParams = SurrogateParams(), frozen_gates=None):
        cfg = self.cfg
        b, p_pairs, t_steps, n_l = e_i.shape
        flat = (b * p_pairs, t_steps, n_l)
        ei, ej, eq = (arr.reshape(flat) for arr in (e_i, e_j, e_q))
        gates = frozen_gates or {}

        traces = {}
        drive = np.zeros((b * p_pairs, t_steps, cfg.gtheta_layers[0]))
        for t in range(DELAY, t_steps):
            drive[:, t] = (
                ei[:, t - DELAY] @ self.weights["g1_si"]
                + ej[:, t - DELAY] @ self.weights["g1_sj"]
                + eq[:, t - DELAY] @ self.weights["g1_q"]
            )
        traces["g1"] = self.cell.forward(drive, mode, surrogate, gates.get("g1"))
        prev = traces["g1"].z
        for ell in range(2, len(cfg.gtheta_layers) + 1):
            w = self.weights[f"g{ell}"]
            drive = np.zeros((b * p_pairs, t_steps, w.shape[1]))
            for t in range(DELAY, t_steps):
                drive[:, t] = prev[:, t - DELAY] @ w
            traces[f"g{ell}"] = self.cell.forward(
                drive, mode, surrogate, gates.get(f"g{ell}")
            )
            prev = traces[f"g{ell}"].z

        z_last = prev.reshape(b, p_pairs, t_steps, -1)
        summed = z_last.sum(axis=1)  # (b, t, n_agg)
        drive = np.zeros((b, t_steps, cfg.agg_size))
        for t in range(DELAY, t_steps):
            drive[:, t] = summed[:, t - DELAY] * self.weights["agg"]
        traces["agg"] = self.cell.forward(drive, mode, surrogate, gates.get("agg"))
        prev = traces["agg"].z
        for ell in range(1, len(cfg.fphi_layers) + 1):
            w = self.weights[f"f{ell}"]
            drive = np.zeros((b, t_steps, w.shape[1]))
            for t in range(DELAY, t_steps):
                drive[:, t] = prev[:, t - DELAY] @ w
            traces[f"f{ell}"] = self.cell.forward(
                drive, mode, surrogate, gates.get(f"f{ell}")
            )
            prev = traces[f"f{ell}"].z

        w_out = self.weights["w_out"]
        i_out = np.zeros((b, t_steps, cfg.vocab))
        v_out = np.zeros((b, cfg.vocab))
        window = cfg.t_readout
        for t in range(t_steps):
            u = prev[:, t - DELAY] @ w_out if t >= DELAY else 0.0
            i_out[:, t] = (self.alpha_out * i_out[:, t - 1] if t else 0.0) + u
            if t >= t_steps - window:
                v_out += i_out[:, t]
        logits = v_out / window
        return traces, i_out, logits, (e_i, e_j, e_q)

    def backward(self, traces, inputs, dlogits, loss_cfg: LossConfig,
                 surrogate: SurrogateParams = SurrogateParams()):
        cfg = self.cfg
        e_i, e_j, e_q = inputs
        b, p_pairs, t_steps, n_l = e_i.shape
        flat = (b * p_pairs, t_steps, n_l)
        ei, ej, eq = (arr.reshape(flat) for arr in (e_i, e_j, e_q))
        grads = {k: np.zeros_like(w) for k, w in self.weights.items()}
        window = cfg.t_readout
        n_g_layers = len(cfg.gtheta_layers)

        # readout chain
        last = traces[f"f{len(cfg.fphi_layers)}"] if cfg.fphi_layers else traces["agg"]
        dv_out = dlogits / window
        dz_last = np.zeros_like(last.z)
        carry_io = np.zeros((b, cfg.vocab))
        w_out = self.weights["w_out"]
        for t in range(t_steps - 1, -1, -1):
            di_o = carry_io + (dv_out if t >= t_steps - window else 0.0)
            if t >= DELAY:
                grads["w_out"] += np.einsum("bi,bo->io", last.z[:, t - DELAY], di_o)
                dz_last[:, t - DELAY] += di_o @ w_out.T
            carry_io = self.alpha_out * di_o

        # readout stack
        dz = dz_last
        for ell in range(len(cfg.fphi_layers), 0, -1):
            tr = traces[f"f{ell}"]
            ds = self.cell.backward(tr, dz, None, surrogate)
            w = self.weights[f"f{ell}"]
            below = traces[f"f{ell - 1}"].z if ell > 1 else traces["agg"].z
            dz_below = np.zeros_like(below)
            for t in range(DELAY, t_steps):
                grads[f"f{ell}"] += np.einsum("bi,bj->ij", below[:, t - DELAY], ds[:, t])
                dz_below[:, t - DELAY] += ds[:, t] @ w.T
            dz = dz_below

        # aggregation: drive[t] = (sum_p z_g_last[p, t-DELAY]) * w_agg
        tr_agg = traces["agg"]
        ds_agg = self.cell.backward(tr_agg, dz, None, surrogate)
        g_last = traces[f"g{n_g_layers}"]
        z_last_pairs = g_last.z.reshape(b, p_pairs, t_steps, -1)
        dz_g = np.zeros_like(g_last.z).reshape(b, p_pairs, t_steps, -1)
        for t in range(DELAY, t_steps):
            summed = z_last_pairs[:, :, t - DELAY].sum(axis=1)
            grads["agg"] += np.einsum("bn,bn->n", summed, ds_agg[:, t])
            dz_g[:, :, t - DELAY] += (ds_agg[:, t] * self.weights["agg"])[:, None, :]
        dz = dz_g.reshape(b * p_pairs, t_steps, -1)

        # g_theta stack with the summed-instance rate regularizer per layer
        for ell in range(n_g_layers, 0, -1):
            tr = traces[f"g{ell}"]
            if loss_cfg.lambda_r:
                shaped = tr.z.reshape(b, p_pairs, t_steps, -1)
                dz += loss_gtheta_rate_grad(shaped, loss_cfg).reshape(tr.z.shape)
            ds = self.cell.backward(tr, dz, None, surrogate)
            if ell > 1:
                w = self.weights[f"g{ell}"]
                below = traces[f"g{ell - 1}"].z
                dz_below = np.zeros_like(below)
                for t in range(DELAY, t_steps):
                    grads[f"g{ell}"] += np.einsum(
                        "bi,bj->ij", below[:, t - DELAY], ds[:, t]
                    )
                    dz_below[:, t - DELAY] += ds[:, t] @ w.T
                dz = dz_below
            else:
                for t in range(DELAY, t_steps):
                    grads["g1_si"] += np.einsum("bi,bj->ij", ei[:, t - DELAY], ds[:, t])
                    grads["g1_sj"] += np.einsum("bi,bj->ij", ej[:, t - DELAY], ds[:, t])
                    grads["g1_q"] += np.einsum("bi,bj->ij", eq[:, t - DELAY], ds[:, t])
        return grads


def relnet_loss_and_grads(
    model: TrainableRelNet,
    e_i, e_j, e_q,
    targets: np.ndarray,
    loss_cfg: LossConfig,
    surrogate: SurrogateParams = SurrogateParams(),
    mode: str = "spike",
):
    traces, _, logits, inputs = model.forward(e_i, e_j, e_q, mode, surrogate)
    task, dlogits = cross_entropy(logits, targets)
    parts = {"task": task}
    total = task
    if loss_cfg.lambda_r:
        b, p_pairs = e_i.shape[:2]
        layer_spikes = [
            traces[f"g{ell}"].z.reshape(b, p_pairs, *traces[f"g{ell}"].z.shape[1:])
            for ell in range(1, len(model.cfg.gtheta_layers) + 1)
        ]
        parts["gtheta_rate"] = loss_gtheta_rate(layer_spikes, loss_cfg)
        total += parts["gtheta_rate"]
    grads = model.backward(traces, inputs, dlogits, loss_cfg, surrogate)
    return total, parts, grads, (traces, logits)


def bptt_gradients(model, batch, loss_cfg: LossConfig,
                   surrogate: SurrogateParams = SurrogateParams(), mode="spike"):
    """Reverse-mode gradients for all trainable blocks of either model family.

    ``batch`` is ``(x, targets)`` for :class:`TrainableLsnn` and
    ``(e_i, e_j, e_q, targets)`` for :class:`TrainableRelNet`.
    """
    if isinstance(model, TrainableLsnn):
        x, targets = batch
        total, parts, grads, _ = lsnn_loss_and_grads(
            model, x, targets, loss_cfg, surrogate, mode
        )
        return total, parts, grads
    if isinstance(model, TrainableRelNet):
        e_i, e_j, e_q, targets = batch
        total, parts, grads, _ = relnet_loss_and_grads(
            model, e_i, e_j, e_q, targets, loss_cfg, surrogate, mode
        )
        return total, parts, grads
    raise TrainingError(f"unknown model type {type(model).__name__}")
