"""Single-neuron state transitions for LIF neurons with AHP currents.

Two compartment-style currents drive the membrane: the input postsynaptic
current decays with ``tau_i`` and collects weighted presynaptic spikes, and
the after-hyperpolarizing current decays with ``tau_ahp`` and is pushed more
negative by ``beta`` after each of the neuron's own spikes.  The membrane
voltage is kept as two separately leaky-integrated components (one per
current) so the scaled voltage used by training can be formed from them.

All transitions exist in two numeric modes:

* real mode: float64 arithmetic with exact exponential decay factors;
* quantized mode: signed 24-bit integer state, decays applied as
  multiplication by ``round(4096 * alpha) / 4096`` in fixed point.

The functions accept scalars or numpy arrays; the simulator drives whole
populations through them with array states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Fixed-point layout of the quantized mode.  The register widths are a
# documented modeling choice, not a claim about any particular chip.
Q_FRAC_BITS = 12
Q_ONE = 1 << Q_FRAC_BITS
Q_STATE_MAX = (1 << 23) - 1
Q_STATE_MIN = -(1 << 23)

KINDS = ("lif", "lif_ahp", "readout", "input_source")


class InvalidParameterError(ValueError):
    """A neuron parameter violates its admissible range."""


class DegenerateDenominatorError(ZeroDivisionError):
    """Scaled voltage is undefined because b0 equals the AHP voltage."""


def decay_factor(tau) -> float:
    """Per-step decay ``exp(-1/tau)`` of an exponential with time constant ``tau``.

    An infinite time constant decays not at all and returns exactly 1.0.
    Non-positive finite time constants are rejected.
    """
    if math.isinf(tau):
        return 1.0
    if tau <= 0:
        raise InvalidParameterError(f"time constant must be positive or inf, got {tau}")
    return math.exp(-1.0 / tau)


def quantized_decay_factor(tau) -> int:
    """Fixed-point decay multiplier ``round(4096 * exp(-1/tau))``."""
    return int(round(Q_ONE * decay_factor(tau)))


@dataclass(frozen=True)
class NeuronParams:
    """Constants of one neuron population.

    ``tau_i = 0`` is the one permitted degenerate value: it encodes a delta
    PSC (the input current is exactly the current step's weighted input, with
    no tail).  Relay neurons need this to reproduce their input spike train
    one-for-one; everywhere else the time constants must be positive.
    """

    tau_v: float = 20.0
    tau_i: float = 20.0
    tau_ahp: float = 700.0
    beta: float = 0.0
    b0: float = 127.0
    g_v: float = 1.0
    refractory: int = 0
    kind: str = "lif"
    readout_window: int = 10  # only meaningful for kind="readout"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown neuron kind {self.kind!r}")
        if self.kind == "lif_ahp":
            if self.beta <= 0:
                raise InvalidParameterError("lif_ahp requires beta > 0")
            if self.tau_ahp < 5.0 * self.tau_v:
                raise InvalidParameterError(
                    f"AHP decay must be slow: tau_ahp={self.tau_ahp} < 5*tau_v={5 * self.tau_v}"
                )
        elif self.beta != 0:
            raise InvalidParameterError(f"beta must be 0 for kind {self.kind!r}")
        if self.kind in ("lif", "lif_ahp") and not math.isfinite(self.b0):
            raise InvalidParameterError("spiking neurons need a finite threshold")
        if self.kind in ("readout", "input_source") and math.isfinite(self.b0):
            raise InvalidParameterError(f"{self.kind} neurons never threshold; use b0=inf")
        if not (self.tau_v > 0 or math.isinf(self.tau_v)):
            raise InvalidParameterError(f"tau_v must be positive, got {self.tau_v}")
        if math.isinf(self.tau_v) and self.kind not in ("readout", "input_source"):
            raise InvalidParameterError("only readout neurons may have tau_v=inf")
        if self.tau_i < 0:
            raise InvalidParameterError(f"tau_i must be >= 0, got {self.tau_i}")
        if self.tau_ahp <= 0:
            raise InvalidParameterError(f"tau_ahp must be positive, got {self.tau_ahp}")
        if self.refractory < 0:
            raise InvalidParameterError("refractory duration must be >= 0")

    @property
    def alpha_v(self) -> float:
        return decay_factor(self.tau_v)

    @property
    def alpha_i(self) -> float:
        return 0.0 if self.tau_i == 0 else decay_factor(self.tau_i)

    @property
    def alpha_ahp(self) -> float:
        return decay_factor(self.tau_ahp)

    def to_dict(self) -> dict:
        return {
            "tau_v": self.tau_v,
            "tau_i": self.tau_i,
            "tau_ahp": self.tau_ahp,
            "beta": self.beta,
            "b0": self.b0,
            "g_v": self.g_v,
            "refractory": self.refractory,
            "kind": self.kind,
            "readout_window": self.readout_window,
        }

    @staticmethod
    def from_dict(d: dict) -> "NeuronParams":
        return NeuronParams(**d)


@dataclass
class NeuronState:
    """Dynamic variables of a (population of) spiking neuron(s).

    Fields may be scalars or equally shaped numpy arrays.  ``last_spike``
    carries the previous step's output because the AHP decrement reads the
    spike one step in the past; a freshly constructed state has seen none.
    """

    i_psc: object = 0.0
    i_ahp: object = 0.0
    v_psc: object = 0.0
    v_ahp: object = 0.0
    refractory_left: object = 0
    last_spike: object = 0

    @property
    def v(self):
        return self.v_psc + self.v_ahp

    @staticmethod
    def zeros(n: int, quantized: bool = False) -> "NeuronState":
        dt = np.int64 if quantized else np.float64
        return NeuronState(
            i_psc=np.zeros(n, dt),
            i_ahp=np.zeros(n, dt),
            v_psc=np.zeros(n, dt),
            v_ahp=np.zeros(n, dt),
            refractory_left=np.zeros(n, np.int64),
            last_spike=np.zeros(n, np.int64),
        )


@dataclass
class ReadoutState:
    """State of a non-spiking readout neuron (population)."""

    i_psc: object = 0.0
    v: object = 0.0
    integration_enabled: bool = False

    @staticmethod
    def zeros(n: int) -> "ReadoutState":
        return ReadoutState(i_psc=np.zeros(n), v=np.zeros(n), integration_enabled=False)


def step_neuron(state: NeuronState, params: NeuronParams, weighted_input):
    """Advance one step of the LIF/AHP dynamics.

    ``weighted_input`` is the already-summed, delay-resolved synaptic drive
    for this step; delay bookkeeping lives in the simulator.  Returns the
    next state and the emitted spike (0/1, samely shaped).
    """
    a_i, a_v, a_a = params.alpha_i, params.alpha_v, params.alpha_ahp

    i_psc = a_i * state.i_psc + weighted_input
    i_ahp = a_a * state.i_ahp - params.beta * state.last_spike

    refractory = np.asarray(state.refractory_left) > 0
    live = np.where(refractory, 0.0, 1.0)
    v_psc = live * (a_v * state.v_psc + i_psc / params.g_v)
    v_ahp = live * (a_v * state.v_ahp + i_ahp / params.g_v)
    refractory_left = np.maximum(np.asarray(state.refractory_left) - 1, 0)

    spike = ((v_psc + v_ahp) > params.b0).astype(np.int64)
    keep = 1 - spike
    v_psc = v_psc * keep
    v_ahp = v_ahp * keep
    refractory_left = np.where(spike > 0, params.refractory, refractory_left)

    new = NeuronState(
        i_psc=i_psc,
        i_ahp=i_ahp,
        v_psc=v_psc,
        v_ahp=v_ahp,
        refractory_left=refractory_left,
        last_spike=spike,
    )
    return new, spike


def q_decay(value, factor_q: int):
    """Fixed-point decay: multiply by ``factor_q / 4096`` rounding to nearest."""
    return (value * factor_q + (Q_ONE >> 1)) >> Q_FRAC_BITS


def q_clamp(value):
    """Saturate to the signed 24-bit state range."""
    return np.clip(value, Q_STATE_MIN, Q_STATE_MAX)


def step_neuron_quantized(state: NeuronState, params: NeuronParams, weighted_input):
    """Integer-mode transition; semantics mirror :func:`step_neuron`.

    State fields and the input must be integers (Python ints or int64
    arrays).  All intermediate products fit int64: |state| < 2**23 and the
    decay multiplier < 2**12.
    """
    fq_i = quantized_decay_factor(params.tau_i) if params.tau_i != 0 else 0
    fq_v = quantized_decay_factor(params.tau_v)
    fq_a = quantized_decay_factor(params.tau_ahp)
    b0 = int(params.b0)
    beta = int(params.beta)
    g_v = int(params.g_v)

    i_psc = q_clamp(q_decay(state.i_psc, fq_i) + weighted_input)
    i_ahp = q_clamp(q_decay(state.i_ahp, fq_a) - beta * state.last_spike)

    refractory = np.asarray(state.refractory_left) > 0
    live = np.where(refractory, 0, 1)
    v_psc = live * q_clamp(q_decay(state.v_psc, fq_v) + i_psc // g_v)
    v_ahp = live * q_clamp(q_decay(state.v_ahp, fq_v) + i_ahp // g_v)
    refractory_left = np.maximum(np.asarray(state.refractory_left) - 1, 0)

    spike = ((v_psc + v_ahp) > b0).astype(np.int64)
    keep = 1 - spike
    v_psc = v_psc * keep
    v_ahp = v_ahp * keep
    refractory_left = np.where(spike > 0, params.refractory, refractory_left)

    new = NeuronState(
        i_psc=i_psc,
        i_ahp=i_ahp,
        v_psc=v_psc,
        v_ahp=v_ahp,
        refractory_left=refractory_left,
        last_spike=spike,
    )
    return new, spike


def scaled_voltage(state: NeuronState, params: NeuronParams):
    """Normalized membrane voltage: 0 at threshold, -1 at the zero-input level.

    Defined as ``(v - b0) / (b0 - v_ahp)``; the denominator is the gap
    between the threshold and the voltage the neuron would sit at with no
    input PSC.
    """
    if not math.isfinite(params.b0):
        raise InvalidParameterError("scaled voltage needs a finite threshold")
    denom = params.b0 - state.v_ahp
    if np.any(np.asarray(denom) == 0):
        raise DegenerateDenominatorError("b0 equals v_ahp; scaled voltage undefined")
    return (state.v - params.b0) / denom


def scaled_voltage_of(v, v_ahp, b0):
    """Array form of :func:`scaled_voltage` on raw components."""
    return (v - b0) / (b0 - v_ahp)


def step_readout(
    state: ReadoutState,
    params: NeuronParams,
    weighted_input,
    step: int,
    total_steps: int,
) -> ReadoutState:
    """Advance a non-spiking readout neuron one step.

    The PSC decays with ``tau_i`` and collects input every step; the
    voltage is a non-leaky accumulator that only integrates the PSC during
    the final ``readout_window`` steps.  Nothing ever resets.
    """
    if step >= total_steps:
        raise InvalidParameterError(f"step {step} out of range for {total_steps} steps")
    i_psc = params.alpha_i * state.i_psc + weighted_input
    enabled = step >= total_steps - params.readout_window
    v = state.v + i_psc if enabled else state.v
    return ReadoutState(i_psc=i_psc, v=v, integration_enabled=enabled)


def lif_params_without_ahp(params: NeuronParams) -> NeuronParams:
    """The same population constants with the AHP pathway disabled."""
    return replace(params, beta=0.0, kind="lif")
