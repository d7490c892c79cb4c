"""Placement compiler: splits layers across neuro-cores, inserts fanout
relay layers, groups relational-function instances per chip, and verifies
hardware connectivity budgets.

Core model: a board of chips, each a fixed number of neuro-cores.  A core
computes its resident neurons and stores their incoming synapses.  An axon
``(i, C)`` routes all spikes of neuron ``i`` to a core ``C`` other than its
own; axon counts are budgeted per core (in and out) and destination-core
counts per neuron.  Synapses onto the neuron's own core need no axon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .builders import RELAY_WEIGHT, relay_params, relnet_config_from_graph
from .network import Connection, NetworkGraph, Population


class UnplaceableError(RuntimeError):
    """The graph cannot satisfy the hardware budgets at all."""


@dataclass(frozen=True)
class CoreBudget:
    max_neurons_1comp: int = 1024
    max_neurons_2comp: int = 512
    synapse_memory: int = 40_000
    input_axons: int = 4096
    output_axons_interchip: int = 2048
    output_axons_intrachip: int = 4096
    neuron_core_fanout: int = 512


@dataclass(frozen=True)
class BoardModel:
    chips: int = 32
    cores_per_chip: int = 128


LOIHI_BUDGET = CoreBudget()
NAHUKU_BOARD = BoardModel()

# Dense recurrent/feed-forward layers of the relational-network family are
# capped at 128 neurons per core regardless of the compartment limits.
RELNET_CLASS_CAP = 128


# ---------------------------------------------------------------------------
# Layer splitting
# ---------------------------------------------------------------------------


@dataclass
class SplitResult:
    sizes: list
    per_core_cap: int
    binding: str  # which budget determined the cap


def _incoming_profile(graph: NetworkGraph, pop: Population):
    """Per-neuron synapse count and distinct-source structure of a layer."""
    syn_per_neuron = 0
    dense_sources = {}
    one_to_one = set()
    for c in graph.connections_to(pop.pid):
        src = graph.pop(c.src)
        if c.pattern == "dense":
            syn_per_neuron += src.size
            dense_sources[c.src] = src.size
        elif c.pattern == "one_to_one":
            syn_per_neuron += 1
            one_to_one.add(c.src)
        else:
            mask = c.mask
            syn_per_neuron += int(mask.sum(axis=0).max()) if mask.size else 0
            dense_sources[c.src] = src.size  # conservative distinct-source bound
    return syn_per_neuron, sum(dense_sources.values()), len(one_to_one)


def split_layer(
    graph: NetworkGraph,
    pop: Population,
    budget: CoreBudget = LOIHI_BUDGET,
    class_cap: int | None = None,
    fanout_cores_per_neuron: int = 0,
    fanout_same_chip: bool = True,
) -> SplitResult:
    """Split a layer into the minimal number of equal-as-possible core slices.

    Honors the compartment census, the synapse memory, the input-axon count
    (distinct presynaptic neurons per core) and, when the caller supplies a
    per-neuron destination-core count, the output-axon budget.
    """
    caps = {}
    caps["neurons"] = (
        budget.max_neurons_2comp if pop.has_ahp else budget.max_neurons_1comp
    )
    if class_cap is not None:
        caps["class"] = class_cap
    syn_per_neuron, dense_srcs, n_o2o = _incoming_profile(graph, pop)
    if syn_per_neuron > 0:
        caps["synapse_memory"] = budget.synapse_memory // syn_per_neuron
    if dense_srcs > budget.input_axons:
        raise UnplaceableError(
            f"{pop.pid}: a single neuron draws from {dense_srcs} sources,"
            f" over the {budget.input_axons} input-axon budget"
        )
    if n_o2o:
        caps["input_axons"] = max((budget.input_axons - dense_srcs) // n_o2o, 0)
    if fanout_cores_per_neuron > 0:
        limit = (
            budget.output_axons_intrachip
            if fanout_same_chip
            else budget.output_axons_interchip
        )
        caps["output_axons"] = max(limit // fanout_cores_per_neuron, 1)
    binding, cap = min(caps.items(), key=lambda kv: kv[1])
    if cap < 1:
        raise UnplaceableError(f"{pop.pid}: no per-core capacity under {binding}")
    n_cores = math.ceil(pop.size / cap)
    base, extra = divmod(pop.size, n_cores)
    sizes = [base + 1] * extra + [base] * (n_cores - extra)
    return SplitResult(sizes=sizes, per_core_cap=cap, binding=binding)


# ---------------------------------------------------------------------------
# Instance grouping and relay planning
# ---------------------------------------------------------------------------


@dataclass
class BlockGroup:
    index: int
    rows: tuple  # sentence indices appearing as slot i
    cols: tuple  # sentence indices appearing as slot j
    instances: list  # pairs (i, j)

    @property
    def sentences(self) -> tuple:
        return tuple(sorted(set(self.rows) | set(self.cols)))


@dataclass
class GroupingPlan:
    side: int
    blocks: list
    relays_per_sentence: int
    question_relays: int


def _relay_split_cores(
    n_neurons: int,
    fanout_cores: int,
    budget: CoreBudget,
    class_cap: int = RELNET_CLASS_CAP,
) -> int:
    cap = min(budget.max_neurons_1comp, class_cap)
    if fanout_cores > 0:
        cap = min(cap, max(budget.output_axons_intrachip // fanout_cores, 1))
    return math.ceil(n_neurons / cap)


def group_gtheta_instances(
    M: int,
    cores_per_chip: int = 128,
    l1_cores: int = 4,
    lsnn_size: int = 200,
    budget: CoreBudget = LOIHI_BUDGET,
) -> GroupingPlan:
    """Partition the instance triangle into contiguous square blocks.

    One block maps to one chip holding the instances' first layers and the
    relay layers feeding them, so the block side is the largest for which a
    full off-diagonal block (the worst case: ``side**2`` instances, ``2 *
    side`` sentence relays plus one question relay) fits the chip.  Squares
    minimize the distinct sentences, hence relays, a chip needs.
    """
    if M < 1:
        raise ValueError("need at least one sentence")

    def block_cores(side: int) -> int:
        first_layers = side * side * l1_cores
        sent_relays = 2 * side * _relay_split_cores(
            lsnn_size, side * l1_cores, budget
        )
        q_relay = _relay_split_cores(lsnn_size, side * side * l1_cores, budget)
        return first_layers + sent_relays + q_relay

    side = 1
    while side < M and block_cores(side + 1) <= cores_per_chip:
        side += 1
    if block_cores(min(side, M)) > cores_per_chip:
        raise UnplaceableError("even a 1x1 instance block exceeds the chip")

    blocks = []
    n_blocks_axis = math.ceil(M / side)
    idx = 0
    for br in range(n_blocks_axis):
        rows = tuple(range(br * side + 1, min((br + 1) * side, M) + 1))
        for bc in range(br, n_blocks_axis):
            cols = tuple(range(bc * side + 1, min((bc + 1) * side, M) + 1))
            instances = [(i, j) for i in rows for j in cols if i <= j]
            if not instances:
                continue
            blocks.append(BlockGroup(index=idx, rows=rows, cols=cols, instances=instances))
            idx += 1
    return GroupingPlan(
        side=side,
        blocks=blocks,
        relays_per_sentence=n_blocks_axis,
        question_relays=len(blocks),
    )


def insert_relays(graph: NetworkGraph, plan: GroupingPlan) -> NetworkGraph:
    """Return a graph where LSNN-to-instance fanout goes through relay layers.

    Each block gets one relay per needed sentence plus one for the question,
    fed one-to-one from the source LSNN with a suprathreshold weight and
    zero synaptic delay, so the relay reproduces its input train with one
    step of latency.  First-layer input connections are re-pointed at the
    block's relays; everything else is preserved.
    """
    cfg = relnet_config_from_graph(graph)
    aug = NetworkGraph(meta=dict(graph.meta))
    aug.populations = dict(graph.populations)
    aug.shared = graph.shared

    relay_of = {}  # (block index, lsnn pid) -> relay pid
    new_conns = []
    r_params = relay_params(cfg.tau_v)
    for block in plan.blocks:
        sources = [f"lsnn_s{k}" for k in block.sentences] + ["lsnn_q"]
        for src in sources:
            rid = f"relay_{src[5:]}_g{block.index}"
            aug.populations[rid] = Population(
                rid,
                cfg.lsnn_size,
                r_params,
                role="relay",
                meta={"source": src, "group": block.index},
            )
            relay_of[(block.index, src)] = rid
            new_conns.append(
                Connection(
                    src,
                    rid,
                    "one_to_one",
                    weights=np.full(cfg.lsnn_size, RELAY_WEIGHT),
                    delays=np.zeros(cfg.lsnn_size, dtype=np.int64),
                    meta={"relay_feed": True},
                )
            )

    block_of_pair = {}
    for block in plan.blocks:
        for pair in block.instances:
            block_of_pair[tuple(pair)] = block.index

    for c in graph.connections:
        pair = c.meta.get("pair")
        slot = c.meta.get("slot")
        if pair is not None and slot is not None:
            gi = block_of_pair[tuple(pair)]
            src = "lsnn_q" if slot == "q" else f"lsnn_s{pair[0] if slot == 'i' else pair[1]}"
            new_conns.append(replace(c, src=relay_of[(gi, src)]))
        else:
            new_conns.append(c)
    aug.connections = new_conns
    aug.meta["relay_plan"] = {
        "side": plan.side,
        "blocks": len(plan.blocks),
        "relays_per_sentence": plan.relays_per_sentence,
        "question_relays": plan.question_relays,
    }
    aug.validate()
    return aug


def build_relnet_with_relays(config, seed: int = 0):
    """Convenience: build, group, and relay-augment in one call."""
    from .builders import build_relnet

    graph = build_relnet(config, seed)
    plan = group_gtheta_instances(
        config.M,
        l1_cores=_l1_cores(graph, config),
        lsnn_size=config.lsnn_size,
    )
    return insert_relays(graph, plan), plan


def _l1_cores(graph: NetworkGraph, cfg) -> int:
    l1 = graph.pop("gtheta_1_1_l1")
    return len(split_layer(graph, l1, class_cap=RELNET_CLASS_CAP).sizes)


# ---------------------------------------------------------------------------
# Placement proper
# ---------------------------------------------------------------------------


@dataclass
class Slice:
    pop: str
    start: int
    stop: int
    chip: int
    core: int  # global core index = chip * cores_per_chip + local core
    aux: bool = False  # input-encoder cores, reported separately

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass
class Placement:
    board: BoardModel
    strategy: str
    graph_hash: str
    slices: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._by_pop: dict[str, list] = {}
        for s in self.slices:
            self._by_pop.setdefault(s.pop, []).append(s)
        for lst in self._by_pop.values():
            lst.sort(key=lambda s: s.start)

    def add(self, s: Slice):
        self.slices.append(s)
        self._by_pop.setdefault(s.pop, []).append(s)

    def slices_of(self, pid: str) -> list:
        return self._by_pop.get(pid, [])

    def core_of(self, pid: str, neuron: int) -> int:
        for s in self._by_pop[pid]:
            if s.start <= neuron < s.stop:
                return s.core
        raise KeyError(f"neuron {neuron} of {pid!r} is not placed")

    def chip_of_core(self, core: int) -> int:
        return core // self.board.cores_per_chip

    def cores_used(self, include_aux: bool = False):
        return sorted(
            {s.core for s in self.slices if include_aux or not s.aux}
        )

    def chips_used(self, include_aux: bool = False):
        return sorted(
            {self.chip_of_core(c) for c in self.cores_used(include_aux)}
        )

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "cores": len(self.cores_used()),
            "aux_cores": len(self.cores_used(True)) - len(self.cores_used()),
            "chips": len(self.chips_used()),
            "slices": len(self.slices),
        }


class _CoreAllocator:
    def __init__(self, board: BoardModel):
        self.board = board
        self.next_core = 0

    def take(self) -> int:
        core = self.next_core
        if core >= self.board.chips * self.board.cores_per_chip:
            raise UnplaceableError("board capacity exceeded")
        self.next_core += 1
        return core

    def open_chip(self):
        """Advance to the next empty chip."""
        cpc = self.board.cores_per_chip
        if self.next_core % cpc:
            self.next_core = (self.next_core // cpc + 1) * cpc

    def room_on_chip(self) -> int:
        cpc = self.board.cores_per_chip
        return cpc - self.next_core % cpc if self.next_core % cpc else cpc


def _slice_pop(graph, placement, alloc, pop, class_cap, budget, fanout=0, aux=False):
    res = split_layer(
        graph, pop, budget, class_cap=class_cap, fanout_cores_per_neuron=fanout
    )
    start = 0
    for size in res.sizes:
        core = alloc.take()
        placement.add(
            Slice(pop.pid, start, start + size, core // placement.board.cores_per_chip,
                  core, aux=aux)
        )
        start += size
    return res


def place(
    graph: NetworkGraph,
    strategy: str = "optimized",
    budget: CoreBudget = LOIHI_BUDGET,
    board: BoardModel = NAHUKU_BOARD,
) -> Placement:
    """Assign every neuron slice to a (chip, core).

    ``naive`` fills cores in graph order with no chip affinity.
    ``optimized`` co-locates each relay with the first layers it feeds (one
    instance block per chip), keeps an instance's remaining layers on one
    chip, and then packs the shared tail (aggregation, readout stack,
    LSNNs).  Input-encoder populations always go to dedicated trailing
    cores and are reported separately.
    """
    is_relnet = graph.meta.get("family") == "relnet"
    class_cap = RELNET_CLASS_CAP if is_relnet else None
    placement = Placement(board=board, strategy=strategy, graph_hash=graph.graph_hash())
    alloc = _CoreAllocator(board)
    pops = list(graph.populations.values())
    inputs = [p for p in pops if p.params.kind == "input_source"]
    main = [p for p in pops if p.params.kind != "input_source"]

    if strategy == "naive" or not is_relnet:
        if strategy not in ("naive", "optimized"):
            raise ValueError(f"unknown strategy {strategy!r}")
        for pop in main:
            _slice_pop(graph, placement, alloc, pop, class_cap, budget)
    elif strategy == "optimized":
        _place_relnet_optimized(graph, placement, alloc, budget, class_cap)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    for pop in inputs:
        _slice_pop(graph, placement, alloc, pop, None, budget, aux=True)
    placement.meta["summary"] = placement.summary()
    return placement


def _place_relnet_optimized(graph, placement, alloc, budget, class_cap):
    cfg = relnet_config_from_graph(graph)
    n_layers = len(cfg.gtheta_layers)
    l1_pops = {}
    later_pops = {}
    for p in graph.populations.values():
        if p.role == "gtheta_layer":
            pair, layer = tuple(p.meta["pair"]), p.meta["layer"]
            if layer == 1:
                l1_pops[pair] = p
            else:
                later_pops.setdefault(pair, []).append(p)
    for lst in later_pops.values():
        lst.sort(key=lambda p: p.meta["layer"])

    relays_by_group: dict[int, list] = {}
    for p in graph.populations.values():
        if p.role == "relay":
            relays_by_group.setdefault(p.meta["group"], []).append(p)

    l1_core_count = len(
        split_layer(graph, next(iter(l1_pops.values())), budget, class_cap=class_cap).sizes
    )

    pair_to_group: dict[tuple, int] = {}
    relay_consumers: dict[str, set] = {}
    for c in graph.connections:
        src = graph.populations[c.src]
        if src.role == "relay" and "pair" in c.meta:
            pair_to_group[tuple(c.meta["pair"])] = src.meta["group"]
            relay_consumers.setdefault(c.src, set()).add(c.dst)

    # One chip per block: relays first, then the first layers they feed.
    for gi in sorted(relays_by_group):
        alloc.open_chip()
        group_pairs = sorted(
            pair for pair in l1_pops if pair_to_group.get(pair, 0) == gi
        )
        for relay in sorted(relays_by_group[gi], key=lambda p: p.pid):
            fanout = len(relay_consumers.get(relay.pid, ())) * l1_core_count
            _slice_pop(graph, placement, alloc, relay, class_cap, budget, fanout=fanout)
        for pair in group_pairs:
            _slice_pop(graph, placement, alloc, l1_pops[pair], class_cap, budget)

    # Remaining instance layers: all on one chip per instance.
    alloc.open_chip()
    for pair in sorted(l1_pops):
        pops = later_pops.get(pair, [])
        need = sum(
            len(split_layer(graph, p, budget, class_cap=class_cap).sizes) for p in pops
        )
        if need > alloc.room_on_chip():
            alloc.open_chip()
        for p in pops:
            _slice_pop(graph, placement, alloc, p, class_cap, budget)

    # Shared tail: aggregation, readout stack, readout, then the LSNNs.
    tail = (
        graph.pops_by_role("aggregation")
        + sorted(graph.pops_by_role("fphi_layer"), key=lambda p: p.meta["layer"])
        + graph.pops_by_role("readout")
        + sorted(graph.pops_by_role("lsnn"), key=lambda p: p.pid)
    )
    for pop in tail:
        _slice_pop(graph, placement, alloc, pop, class_cap, budget)


# ---------------------------------------------------------------------------
# Axon accounting and verification
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    budget: str
    where: str  # "core chip/local" or "population pid"
    limit: int
    measured: int
    detail: dict = field(default_factory=dict)

    def __str__(self):
        extra = f" {self.detail}" if self.detail else ""
        return f"{self.budget} at {self.where}: {self.measured} > {self.limit}{extra}"


def _overlap(a_start, a_stop, b_start, b_stop) -> int:
    return max(0, min(a_stop, b_stop) - max(a_start, b_start))


class AxonTables:
    """Derived per-core axon structure of a placement.

    For every core this computes resident neuron count, incoming synapse
    count, the distinct presynaptic neurons reaching it from other cores
    (input axons), and the (neuron, destination core) pairs leaving it
    (output axons), plus the per-neuron destination-core census used for
    the fanout budget and the traffic model.
    """

    def __init__(self, placement: Placement, graph: NetworkGraph):
        self.placement = placement
        self.graph = graph
        self.neurons: dict[int, int] = {}
        self.synapses: dict[int, int] = {}
        self.in_sources: dict[int, dict] = {}  # core -> {src pid -> neuron count}
        self.out_axons: dict[int, int] = {}
        self.out_axons_interchip: dict[int, int] = {}
        # per population: per-neuron destination core counts split by class
        self.dst_core_count: dict[str, np.ndarray] = {}
        self.delivery_classes: dict[str, np.ndarray] = {}  # (size, 3) incl. own core
        self.fanout_breakdown: dict[str, dict] = {}
        self._build()

    def _build(self):
        plc, graph = self.placement, self.graph
        cpc = plc.board.cores_per_chip
        for s in plc.slices:
            self.neurons[s.core] = self.neurons.get(s.core, 0) + s.size

        # incoming synapses and distinct sources per core
        in_sets: dict[int, dict] = {}
        for conn in graph.connections:
            src_slices = plc.slices_of(conn.src)
            dst_slices = plc.slices_of(conn.dst)
            if not src_slices or not dst_slices:
                continue
            w_mask = None
            if conn.pattern == "sparse":
                w_mask = conn.mask
            for d in dst_slices:
                if conn.pattern == "dense":
                    self.synapses[d.core] = (
                        self.synapses.get(d.core, 0)
                        + graph.pop(conn.src).size * d.size
                    )
                    for s in src_slices:
                        local = s.core == d.core
                        if not local:
                            in_sets.setdefault(d.core, {}).setdefault(conn.src, set()).update(
                                range(s.start, s.stop)
                            )
                elif conn.pattern == "one_to_one":
                    self.synapses[d.core] = self.synapses.get(d.core, 0) + d.size
                    for s in src_slices:
                        ov = _overlap(s.start, s.stop, d.start, d.stop)
                        if ov and s.core != d.core:
                            lo = max(s.start, d.start)
                            in_sets.setdefault(d.core, {}).setdefault(conn.src, set()).update(
                                range(lo, lo + ov)
                            )
                else:  # sparse
                    block = w_mask[:, d.start : d.stop]
                    self.synapses[d.core] = self.synapses.get(d.core, 0) + int(block.sum())
                    active_rows = np.flatnonzero(block.any(axis=1))
                    for s in src_slices:
                        if s.core == d.core:
                            continue
                        rows = active_rows[(active_rows >= s.start) & (active_rows < s.stop)]
                        if rows.size:
                            in_sets.setdefault(d.core, {}).setdefault(conn.src, set()).update(
                                rows.tolist()
                            )
        self.in_sources = {
            core: {pid: len(v) for pid, v in by_src.items()}
            for core, by_src in in_sets.items()
        }

        # destination cores per source neuron
        for pop in graph.populations.values():
            size = pop.size
            slices = plc.slices_of(pop.pid)
            if not slices:
                continue
            own_core = np.empty(size, dtype=np.int64)
            for s in slices:
                own_core[s.start : s.stop] = s.core
            dense_cores: set = set()
            breakdown: dict[str, set] = {}
            o2o_core: list[np.ndarray] = []
            for conn in graph.connections_from(pop.pid):
                dst_slices = plc.slices_of(conn.dst)
                if not dst_slices:
                    continue
                dst_role = graph.pop(conn.dst).role
                if conn.pattern in ("dense", "sparse"):
                    cores = {d.core for d in dst_slices}
                    dense_cores |= cores
                    breakdown.setdefault(dst_role, set()).update(cores)
                else:
                    per_neuron = np.full(size, -1, dtype=np.int64)
                    for d in dst_slices:
                        per_neuron[d.start : d.stop] = d.core
                    o2o_core.append(per_neuron)
                    breakdown.setdefault(dst_role, set()).update(
                        d.core for d in dst_slices
                    )

            dense_arr = np.fromiter(dense_cores, dtype=np.int64, count=len(dense_cores))
            n_dense = np.full(size, len(dense_cores), dtype=np.int64)
            if len(dense_cores):
                n_dense -= np.isin(own_core, dense_arr).astype(np.int64)
            counts = n_dense.copy()
            cls = np.zeros((size, 3), dtype=np.int64)  # intra-core/chip, inter-chip
            own_chip = own_core // cpc
            if len(dense_cores):
                dense_chips = dense_arr // cpc
                same_core = np.isin(own_core, dense_arr).astype(np.int64)
                inter = (own_chip[:, None] != dense_chips[None, :]).sum(axis=1)
                cls[:, 2] += inter
                cls[:, 0] += same_core
                cls[:, 1] += len(dense_cores) - inter - same_core
            for per_neuron in o2o_core:
                valid = per_neuron >= 0
                extra = valid.copy()
                if len(dense_cores):
                    extra &= ~np.isin(per_neuron, dense_arr)
                same = extra & (per_neuron == own_core)
                counts += (extra & ~same).astype(np.int64)
                inter = extra & ~same & (per_neuron // cpc != own_chip)
                cls[:, 0] += same.astype(np.int64)
                cls[:, 2] += inter.astype(np.int64)
                cls[:, 1] += (extra & ~same & ~inter).astype(np.int64)
            self.dst_core_count[pop.pid] = counts
            self.delivery_classes[pop.pid] = cls
            self.fanout_breakdown[pop.pid] = {
                role: len(cores) for role, cores in breakdown.items()
            }

            # aggregate output axons per core
            for s in slices:
                seg = slice(s.start, s.stop)
                self.out_axons[s.core] = self.out_axons.get(s.core, 0) + int(
                    counts[seg].sum()
                )
                self.out_axons_interchip[s.core] = self.out_axons_interchip.get(
                    s.core, 0
                ) + int(cls[seg, 2].sum())

    def input_axons(self, core: int) -> int:
        return sum(self.in_sources.get(core, {}).values())

    def core_label(self, core: int) -> str:
        cpc = self.placement.board.cores_per_chip
        return f"chip {core // cpc} core {core % cpc}"


def verify(
    placement: Placement,
    graph: NetworkGraph,
    budget: CoreBudget = LOIHI_BUDGET,
) -> list:
    """Check every hardware budget; an empty list means the placement is legal."""
    tables = AxonTables(placement, graph)
    violations: list[Violation] = []

    ahp_cores = set()
    for pop in graph.populations.values():
        if not pop.has_ahp:
            continue
        subset = pop.ahp_subset
        for s in placement.slices_of(pop.pid):
            if ((subset >= s.start) & (subset < s.stop)).any():
                ahp_cores.add(s.core)

    for core in sorted(tables.neurons):
        n = tables.neurons[core]
        cap = budget.max_neurons_2comp if core in ahp_cores else budget.max_neurons_1comp
        kind = "max_neurons_2comp" if core in ahp_cores else "max_neurons_1comp"
        if n > cap:
            violations.append(Violation(kind, tables.core_label(core), cap, n))
        syn = tables.synapses.get(core, 0)
        if syn > budget.synapse_memory:
            violations.append(
                Violation("synapse_memory", tables.core_label(core), budget.synapse_memory, syn)
            )
        in_ax = tables.input_axons(core)
        if in_ax > budget.input_axons:
            violations.append(
                Violation("input_axons", tables.core_label(core), budget.input_axons, in_ax)
            )
        out_ax = tables.out_axons.get(core, 0)
        inter = tables.out_axons_interchip.get(core, 0)
        limit = (
            budget.output_axons_intrachip if inter == 0 else budget.output_axons_interchip
        )
        if out_ax > limit:
            violations.append(
                Violation(
                    "output_axons",
                    tables.core_label(core),
                    limit,
                    out_ax,
                    {"inter_chip": inter},
                )
            )

    for pid, counts in tables.dst_core_count.items():
        worst = int(counts.max()) if counts.size else 0
        if worst > budget.neuron_core_fanout:
            violations.append(
                Violation(
                    "neuron_core_fanout",
                    f"population {pid}",
                    budget.neuron_core_fanout,
                    worst,
                    {"by_destination_role": tables.fanout_breakdown[pid]},
                )
            )
    return violations


def relay_feed_axon_counts(placement: Placement, graph: NetworkGraph) -> dict:
    """Per-core output-axon counts contributed by LSNN-to-relay links alone.

    This is the fanout the relay scheme was sized for; recurrent cross-core
    axons of the LSNN itself are reported by the full tables instead.
    """
    counts: dict[int, int] = {}
    for conn in graph.connections:
        if not conn.meta.get("relay_feed"):
            continue
        for s in placement.slices_of(conn.src):
            for d in placement.slices_of(conn.dst):
                ov = _overlap(s.start, s.stop, d.start, d.stop)
                if ov and s.core != d.core:
                    counts[s.core] = counts.get(s.core, 0) + ov
    return counts
