"""Teacher-matching pretraining of embedding LSNNs.

The recurrent embedder learns to reproduce target vectors supplied as data
(produced elsewhere by a conventional sequence model) through an auxiliary
linear readout and a mean-squared-error loss.  After pretraining, the
auxiliary readout is discarded and the LSNN weights are frozen; only the
spikes carry the sentence information downstream.
"""

from __future__ import annotations

import numpy as np

from .losses import LossConfig
from .models import TrainableLsnn, TrainingError, lsnn_loss_and_grads
from .optim import Adam
from .surrogate import SurrogateParams


def pretrain_teacher_matching(
    model: TrainableLsnn,
    inputs: np.ndarray,
    teacher_values: np.ndarray,
    epochs: int = 10,
    lr: float = 2e-3,
    loss_cfg: LossConfig | None = None,
    surrogate: SurrogateParams = SurrogateParams(),
    batch_size: int | None = None,
) -> dict:
    """Fit the readout value at the final step to the teacher vectors.

    ``inputs``: (samples, steps, n_in) encoded sentences; ``teacher_values``:
    (samples, readout_dim) targets.  Returns a history dict; afterwards the
    model's recurrent blocks are frozen and the auxiliary readout weights
    must not be used for anything else.
    """
    if teacher_values.ndim != 2 or teacher_values.shape[1] != model.n_out:
        raise TrainingError(
            f"teacher dimension {teacher_values.shape} does not match"
            f" readout width {model.n_out}"
        )
    if inputs.shape[0] != teacher_values.shape[0]:
        raise TrainingError("inputs and teacher values disagree on sample count")
    cfg = loss_cfg or LossConfig(task="mse_teacher")
    if cfg.task != "mse_teacher":
        raise TrainingError("teacher matching uses the mse_teacher task loss")
    opt = Adam(lr=lr)
    n = inputs.shape[0]
    bs = batch_size or n
    history = {"mse": []}
    for _ in range(epochs):
        epoch_loss = 0.0
        for lo in range(0, n, bs):
            x = inputs[lo : lo + bs]
            y = teacher_values[lo : lo + bs]
            total, parts, grads, _ = lsnn_loss_and_grads(model, x, y, cfg, surrogate)
            opt.step(model.weights, grads)
            epoch_loss += parts["task"] * x.shape[0]
        history["mse"].append(epoch_loss / n)
    model.frozen = {"w_in", "w_rec"}
    return history
