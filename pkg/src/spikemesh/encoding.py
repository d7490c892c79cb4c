"""Spike encoders: pixel streams to threshold-crossing spikes, word sequences
to one-hot spike windows, and the embedding tap that compresses recurrent
activity for the relational network.

All outputs are binary uint8 arrays shaped (steps, neurons); time is the
leading axis throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EncodingError(ValueError):
    """Input data does not match the encoder configuration."""


@dataclass
class ThresholdEncoderConfig:
    """Pixel-transition encoder layout.

    ``listing`` mode uses ``num_input_neurons / 2`` thresholds linearly
    spaced over [0, 255], with neurons 2k (rising) and 2k+1 (falling) per
    threshold.  ``paired79`` mode instead uses 79 interior thresholds with
    alternating rising/falling neurons, an alternative reading of the same
    scheme kept behind this flag.  The end marker fires on every step of the
    tail after the last pixel.
    """

    num_input_neurons: int = 80
    tail_steps: int = 56
    end_marker_neuron: int | None = None  # defaults to the last neuron
    mode: str = "listing"  # "listing" | "paired79"
    value_range: float = 255.0

    def __post_init__(self):
        if self.mode not in ("listing", "paired79"):
            raise EncodingError(f"unknown encoder mode {self.mode!r}")
        if self.mode == "listing" and self.num_input_neurons % 2:
            raise EncodingError("listing mode needs an even neuron count")
        if self.end_marker_neuron is None:
            self.end_marker_neuron = self.num_input_neurons - 1

    @property
    def num_thresholds(self) -> int:
        if self.mode == "listing":
            return self.num_input_neurons // 2
        return self.num_input_neurons - 1

    def thresholds(self) -> np.ndarray:
        if self.mode == "listing":
            return np.linspace(0.0, self.value_range, self.num_thresholds)
        # interior thresholds between 0 and value_range + 1
        step = (self.value_range + 1.0) / (self.num_thresholds + 1)
        return step * np.arange(1, self.num_thresholds + 1)


def encode_pixels(pixels, config: ThresholdEncoderConfig | None = None) -> np.ndarray:
    """Encode a pixel sequence into threshold-crossing spikes.

    For each consecutive pixel pair and each threshold ``thr``: a rising
    crossing (current <= thr <= next) fires the threshold's rising neuron at
    the step the next pixel arrives, a falling crossing (current >= thr >=
    next) fires the falling neuron.  Equality on both sides fires both.
    After the last pixel the end marker fires for ``tail_steps`` steps, so a
    full sample spans ``len(pixels) + tail_steps`` steps.
    """
    cfg = config or ThresholdEncoderConfig()
    px = np.asarray(pixels, dtype=np.float64).ravel()
    if px.size < 1:
        raise EncodingError("need at least one pixel")
    if px.min() < 0 or px.max() > cfg.value_range:
        raise EncodingError(f"pixel values must lie in [0, {cfg.value_range}]")

    steps = px.size + cfg.tail_steps
    out = np.zeros((steps, cfg.num_input_neurons), dtype=np.uint8)
    thr = cfg.thresholds()
    cur, nxt = px[:-1, None], px[1:, None]
    rising = (cur <= thr[None, :]) & (nxt >= thr[None, :])
    falling = (cur >= thr[None, :]) & (nxt <= thr[None, :])
    if cfg.mode == "listing":
        out[1 : px.size, 0::2] = rising
        out[1 : px.size, 1::2] = falling
    else:
        even = np.arange(cfg.num_thresholds) % 2 == 0
        out[1 : px.size, : cfg.num_thresholds][:, even] = rising[:, even]
        out[1 : px.size, : cfg.num_thresholds][:, ~even] = falling[:, ~even]
    out[px.size :, cfg.end_marker_neuron] = 1
    return out


@dataclass
class WordEncoderConfig:
    """One-hot word-window encoder layout.

    Each word occupies one contiguous ``t_word``-step window during which
    exactly its own neuron fires.  Windows pack against the final step; in
    ``reverse`` order the sentence's first word occupies the last window.
    """

    t_word: int = 10
    n_words: int = 11
    vocab: int = 180
    order: str = "reverse"  # "reverse" | "forward"

    def __post_init__(self):
        if self.order not in ("reverse", "forward"):
            raise EncodingError(f"unknown word order {self.order!r}")

    @property
    def total_steps(self) -> int:
        return self.t_word * self.n_words


def encode_sentence(word_ids, config: WordEncoderConfig | None = None) -> np.ndarray:
    """Encode a word-id sequence into one-hot spike windows.

    Output shape is ``(t_word * n_words, vocab)``.  Short sentences leave a
    silent prefix; at most one input neuron is active on any step.
    """
    cfg = config or WordEncoderConfig()
    ids = list(word_ids)
    if not 1 <= len(ids) <= cfg.n_words:
        raise EncodingError(f"sentence length must be in [1, {cfg.n_words}], got {len(ids)}")
    out = np.zeros((cfg.total_steps, cfg.vocab), dtype=np.uint8)
    for pos, wid in enumerate(ids):
        if not 0 <= wid < cfg.vocab:
            raise EncodingError(f"word id {wid} outside vocabulary of {cfg.vocab}")
        if cfg.order == "reverse":
            start = cfg.total_steps - cfg.t_word * (pos + 1)
        else:
            start = cfg.total_steps - cfg.t_word * (len(ids) - pos)
        out[start : start + cfg.t_word, wid] = 1
    return out


def extract_embedding(raster: np.ndarray, t_inp: int = 14, t_sim: int = 37) -> np.ndarray:
    """Compress a recurrent raster into its embedding block.

    Copies the last ``t_inp`` steps of ``raster`` (time-major) to the front
    of a ``t_sim``-step block and zero-pads the remainder, giving downstream
    feed-forward layers time to propagate the activity.
    """
    raster = np.asarray(raster)
    if raster.shape[0] < t_inp:
        raise EncodingError(f"raster has {raster.shape[0]} steps, need >= {t_inp}")
    if t_sim < t_inp:
        raise EncodingError("t_sim must be >= t_inp")
    out = np.zeros((t_sim,) + raster.shape[1:], dtype=raster.dtype)
    out[:t_inp] = raster[-t_inp:]
    return out
