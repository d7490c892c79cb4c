"""Population/connection graph consumed by the simulator, compiler and trainer.

A :class:`NetworkGraph` is a list of populations plus a list of connection
groups.  Bulk parameters (weights and per-synapse delays) live either inline
on the connection or in a shared block registry keyed by ``share_tag``;
connections carrying the same tag observe one and the same array, so a
mutation of a shared block is visible to every instance and per-instance
copies are never materialized.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .neurons import NeuronParams

ROLES = (
    "input",
    "lsnn",
    "gtheta_layer",
    "aggregation",
    "fphi_layer",
    "readout",
    "relay",
    "generic",
)

PATTERNS = ("dense", "one_to_one", "sparse")


class GraphError(ValueError):
    """The graph under construction violates a structural invariant."""


@dataclass
class Population:
    pid: str
    size: int
    params: NeuronParams
    role: str = "generic"
    ahp_subset: np.ndarray | None = None  # neuron indices carrying AHP currents
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.size <= 0:
            raise GraphError(f"population {self.pid!r} must have size > 0")
        if self.role not in ROLES:
            raise GraphError(f"unknown role {self.role!r}")
        if self.ahp_subset is not None:
            self.ahp_subset = np.asarray(self.ahp_subset, dtype=np.int64)
            if self.ahp_subset.size and (
                self.ahp_subset.min() < 0 or self.ahp_subset.max() >= self.size
            ):
                raise GraphError(f"ahp_subset out of range for {self.pid!r}")

    @property
    def has_ahp(self) -> bool:
        return self.ahp_subset is not None and self.ahp_subset.size > 0

    def beta_vector(self) -> np.ndarray:
        """Per-neuron AHP decrement: params.beta on the subset, 0 elsewhere."""
        beta = np.zeros(self.size)
        if self.has_ahp:
            beta[self.ahp_subset] = self.params.beta
        return beta


@dataclass
class Connection:
    """One connection group between two populations.

    ``weights``/``delays`` shapes: ``(src, dst)`` for dense and sparse
    patterns (sparse additionally carries a boolean ``mask``), ``(size,)``
    for one_to_one.  When ``share_tag`` is set the arrays are looked up in
    the graph's shared-block registry instead.
    """

    src: str
    dst: str
    pattern: str = "dense"
    weights: np.ndarray | None = None
    delays: np.ndarray | None = None
    mask: np.ndarray | None = None
    sign: np.ndarray | None = None  # per-source-row +1/-1 constraint, 0 = free
    share_tag: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise GraphError(f"unknown pattern {self.pattern!r}")


@dataclass
class SharedBlock:
    weights: np.ndarray
    delays: np.ndarray


class NetworkGraph:
    """Immutable-after-build container of populations and connections."""

    def __init__(self, meta: dict | None = None):
        self.populations: dict[str, Population] = {}
        self.connections: list[Connection] = []
        self.shared: dict[str, SharedBlock] = {}
        self.meta: dict = meta or {}

    # -- construction -----------------------------------------------------

    def add_population(self, pop: Population) -> Population:
        if pop.pid in self.populations:
            raise GraphError(f"duplicate population id {pop.pid!r}")
        self.populations[pop.pid] = pop
        return pop

    def add_shared_block(self, tag: str, weights: np.ndarray, delays: np.ndarray):
        if tag in self.shared:
            raise GraphError(f"duplicate share tag {tag!r}")
        self.shared[tag] = SharedBlock(np.asarray(weights), np.asarray(delays))

    def connect(self, conn: Connection) -> Connection:
        for endpoint in (conn.src, conn.dst):
            if endpoint not in self.populations:
                raise GraphError(f"connection references unknown population {endpoint!r}")
        src, dst = self.populations[conn.src], self.populations[conn.dst]
        if conn.pattern == "one_to_one" and src.size != dst.size:
            raise GraphError(
                f"one_to_one needs equal sizes: {conn.src}({src.size}) -> {conn.dst}({dst.size})"
            )
        if conn.share_tag is not None and conn.share_tag not in self.shared:
            raise GraphError(f"connection references unknown share tag {conn.share_tag!r}")
        self.connections.append(conn)
        return conn

    # -- access ------------------------------------------------------------

    def weights_of(self, conn: Connection) -> np.ndarray:
        if conn.share_tag is not None:
            return self.shared[conn.share_tag].weights
        return conn.weights

    def delays_of(self, conn: Connection) -> np.ndarray:
        if conn.share_tag is not None:
            return self.shared[conn.share_tag].delays
        return conn.delays

    def pop(self, pid: str) -> Population:
        return self.populations[pid]

    def pops_by_role(self, role: str) -> list[Population]:
        return [p for p in self.populations.values() if p.role == role]

    def connections_from(self, pid: str) -> list[Connection]:
        return [c for c in self.connections if c.src == pid]

    def connections_to(self, pid: str) -> list[Connection]:
        return [c for c in self.connections if c.dst == pid]

    def simulated_populations(self) -> list[Population]:
        """Populations whose dynamics are computed (everything non-input)."""
        return [p for p in self.populations.values() if p.params.kind != "input_source"]

    # -- bookkeeping ---------------------------------------------------------

    def synapse_count(self, conn: Connection) -> int:
        src, dst = self.populations[conn.src], self.populations[conn.dst]
        if conn.pattern == "dense":
            return src.size * dst.size
        if conn.pattern == "one_to_one":
            return src.size
        return int(conn.mask.sum())

    def graph_hash(self) -> str:
        """Stable content hash over structure and bulk parameters."""
        h = hashlib.sha256()
        h.update(b"spikemesh-graph-v1")
        for pid in sorted(self.populations):
            p = self.populations[pid]
            h.update(pid.encode())
            h.update(str(p.size).encode())
            h.update(str(sorted(p.params.to_dict().items())).encode())
            h.update(p.role.encode())
            if p.ahp_subset is not None:
                h.update(np.ascontiguousarray(p.ahp_subset).tobytes())
        for tag in sorted(self.shared):
            blk = self.shared[tag]
            h.update(tag.encode())
            h.update(np.ascontiguousarray(blk.weights).tobytes())
            h.update(np.ascontiguousarray(blk.delays).tobytes())
        for c in self.connections:
            h.update(f"{c.src}>{c.dst}:{c.pattern}:{c.share_tag}".encode())
            if c.share_tag is None:
                h.update(np.ascontiguousarray(c.weights).tobytes())
                h.update(np.ascontiguousarray(c.delays).tobytes())
            if c.mask is not None:
                h.update(np.ascontiguousarray(c.mask).tobytes())
        return h.hexdigest()[:16]

    def validate(self):
        """Graph closure and per-population invariants."""
        for c in self.connections:
            if c.src not in self.populations or c.dst not in self.populations:
                raise GraphError(f"dangling connection {c.src}->{c.dst}")
            w = self.weights_of(c)
            d = self.delays_of(c)
            if w is None or d is None:
                raise GraphError(f"connection {c.src}->{c.dst} lacks weights or delays")
            if np.asarray(d).min() < 0:
                raise GraphError("delays must be >= 0")
        for p in self.populations.values():
            if p.role == "relay":
                for c in self.connections_to(p.pid):
                    if c.pattern != "one_to_one":
                        raise GraphError(f"relay {p.pid!r} has non one-to-one input")


def count_resources(graph: NetworkGraph) -> dict:
    """Exact neuron/synapse counts with a per-population breakdown.

    ``neurons`` counts simulated neurons only; spike sources that encode
    external input are tallied separately under ``input_neurons``.
    """
    per_pop = {}
    neurons = 0
    input_neurons = 0
    for p in graph.populations.values():
        per_pop[p.pid] = {"size": p.size, "role": p.role}
        if p.params.kind == "input_source":
            input_neurons += p.size
        else:
            neurons += p.size
    synapses = 0
    for c in graph.connections:
        n = graph.synapse_count(c)
        synapses += n
        per_pop[c.dst].setdefault("synapses_in", 0)
        per_pop[c.dst]["synapses_in"] += n
    by_role: dict[str, int] = {}
    for p in graph.populations.values():
        by_role[p.role] = by_role.get(p.role, 0) + p.size
    return {
        "neurons": neurons,
        "input_neurons": input_neurons,
        "synapses": synapses,
        "per_population": per_pop,
        "neurons_by_role": by_role,
    }
