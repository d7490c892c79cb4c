"""Artifact file formats.

* network description: a schema-versioned JSON document (diffable) plus an
  ``.npz`` sidecar holding the bulk weight/delay arrays it references;
* raster: text, one ``step,population,neuron`` record per event, sorted by
  step then population then neuron, with step count and hashes up front;
* placement: JSON per-slice records plus a derived axon-table summary;
* checkpoint: ``.npz`` of named parameter blocks with a JSON header.

Every artifact embeds the tool version and the run's config hash.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import TOOL_VERSION
from .network import Connection, NetworkGraph, Population, SharedBlock
from .neurons import NeuronParams
from .placement import AxonTables, BoardModel, Placement, Slice
from .simulator import Raster

GRAPH_SCHEMA = 1
RASTER_SCHEMA = 1
PLACEMENT_SCHEMA = 1
CHECKPOINT_SCHEMA = 1


class FormatError(ValueError):
    pass


def _sidecar(path) -> Path:
    path = Path(path)
    return path.with_suffix(path.suffix + ".npz") if path.suffix != ".npz" else path


# -- network description -----------------------------------------------------


def save_graph(path, graph: NetworkGraph, cfg_hash: str = ""):
    path = Path(path)
    arrays = {}

    def stash(prefix, idx, name, arr):
        if arr is None:
            return None
        key = f"{prefix}{idx}_{name}"
        arrays[key] = np.asarray(arr)
        return key

    pops = []
    for p in graph.populations.values():
        pops.append(
            {
                "pid": p.pid,
                "size": p.size,
                "role": p.role,
                "params": p.params.to_dict(),
                "ahp_subset": None
                if p.ahp_subset is None
                else [int(i) for i in p.ahp_subset],
                "meta": p.meta,
            }
        )
    shared = {}
    for tag, blk in graph.shared.items():
        shared[tag] = {
            "weights": stash("s", tag, "w", blk.weights),
            "delays": stash("s", tag, "d", blk.delays),
        }
    conns = []
    for k, c in enumerate(graph.connections):
        conns.append(
            {
                "src": c.src,
                "dst": c.dst,
                "pattern": c.pattern,
                "share_tag": c.share_tag,
                "weights": stash("c", k, "w", c.weights),
                "delays": stash("c", k, "d", c.delays),
                "mask": stash("c", k, "m", c.mask),
                "sign": stash("c", k, "s", c.sign),
                "meta": c.meta,
            }
        )
    doc = {
        "schema": GRAPH_SCHEMA,
        "tool": TOOL_VERSION,
        "config": cfg_hash,
        "graph_hash": graph.graph_hash(),
        "meta": graph.meta,
        "populations": pops,
        "shared": shared,
        "connections": conns,
        "weights_file": _sidecar(path).name,
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_json_default))
    np.savez_compressed(_sidecar(path), **arrays)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def load_graph(path) -> NetworkGraph:
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("schema") != GRAPH_SCHEMA:
        raise FormatError(f"unsupported graph schema {doc.get('schema')}")
    with np.load(path.parent / doc["weights_file"]) as z:
        arrays = {k: z[k] for k in z.files}

    g = NetworkGraph(meta=doc.get("meta", {}))
    for pd in doc["populations"]:
        g.add_population(
            Population(
                pd["pid"],
                pd["size"],
                NeuronParams.from_dict(pd["params"]),
                role=pd["role"],
                ahp_subset=None if pd["ahp_subset"] is None else np.array(pd["ahp_subset"]),
                meta=pd.get("meta", {}),
            )
        )
    for tag, blk in doc["shared"].items():
        g.shared[tag] = SharedBlock(arrays[blk["weights"]], arrays[blk["delays"]])
    for cd in doc["connections"]:
        g.connections.append(
            Connection(
                cd["src"],
                cd["dst"],
                cd["pattern"],
                weights=arrays.get(cd["weights"]) if cd["weights"] else None,
                delays=arrays.get(cd["delays"]) if cd["delays"] else None,
                mask=arrays.get(cd["mask"]) if cd["mask"] else None,
                sign=arrays.get(cd["sign"]) if cd["sign"] else None,
                share_tag=cd["share_tag"],
                meta=cd.get("meta", {}),
            )
        )
    g.validate()
    return g


# -- raster -------------------------------------------------------------------


def save_raster(path, raster: Raster, cfg_hash: str = ""):
    lines = [
        f"# spikemesh-raster v{RASTER_SCHEMA}",
        f"# tool={TOOL_VERSION}",
        f"# config={cfg_hash}",
        f"# graph={raster.graph_hash}",
        f"# steps={raster.steps}",
        "# populations="
        + ";".join(f"{pid}:{raster.spikes[pid].shape[1]}" for pid in sorted(raster.spikes)),
    ]
    for t, pid, n in raster.events():
        lines.append(f"{t},{pid},{n}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_raster(path) -> Raster:
    steps = None
    graph_hash = ""
    sizes = {}
    events = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("steps="):
                steps = int(body[6:])
            elif body.startswith("graph="):
                graph_hash = body[6:]
            elif body.startswith("populations="):
                for part in body[len("populations=") :].split(";"):
                    if part:
                        pid, size = part.rsplit(":", 1)
                        sizes[pid] = int(size)
            continue
        if line.strip():
            t, pid, n = line.split(",")
            events.append((int(t), pid, int(n)))
    if steps is None:
        raise FormatError("raster file lacks a steps header")
    spikes = {pid: np.zeros((steps, size), dtype=np.uint8) for pid, size in sizes.items()}
    for t, pid, n in events:
        spikes[pid][t, n] = 1
    return Raster(steps=steps, spikes=spikes, graph_hash=graph_hash)


# -- placement ----------------------------------------------------------------


def save_placement(path, placement: Placement, graph: NetworkGraph | None = None,
                   cfg_hash: str = ""):
    doc = {
        "schema": PLACEMENT_SCHEMA,
        "tool": TOOL_VERSION,
        "config": cfg_hash,
        "graph_hash": placement.graph_hash,
        "strategy": placement.strategy,
        "board": {"chips": placement.board.chips,
                  "cores_per_chip": placement.board.cores_per_chip},
        "summary": placement.summary(),
        "slices": [
            {
                "pop": s.pop,
                "start": s.start,
                "stop": s.stop,
                "chip": s.chip,
                "core": s.core,
                "aux": s.aux,
            }
            for s in sorted(placement.slices, key=lambda s: (s.core, s.pop, s.start))
        ],
    }
    if graph is not None:
        tables = AxonTables(placement, graph)
        doc["axon_summary"] = {
            str(core): {
                "neurons": tables.neurons.get(core, 0),
                "synapses": tables.synapses.get(core, 0),
                "input_axons": tables.input_axons(core),
                "output_axons": tables.out_axons.get(core, 0),
                "output_axons_inter_chip": tables.out_axons_interchip.get(core, 0),
            }
            for core in sorted(tables.neurons)
        }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True, default=_json_default))


def load_placement(path) -> Placement:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != PLACEMENT_SCHEMA:
        raise FormatError(f"unsupported placement schema {doc.get('schema')}")
    board = BoardModel(**doc["board"])
    slices = [
        Slice(d["pop"], d["start"], d["stop"], d["chip"], d["core"], d["aux"])
        for d in doc["slices"]
    ]
    return Placement(
        board=board,
        strategy=doc["strategy"],
        graph_hash=doc["graph_hash"],
        slices=slices,
    )


# -- checkpoints ----------------------------------------------------------------


def save_checkpoint(path, weights: dict, meta: dict, cfg_hash: str = ""):
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "tool": TOOL_VERSION,
        "config": cfg_hash,
        "meta": meta,
        "blocks": sorted(weights),
    }
    np.savez_compressed(
        path, __header__=np.frombuffer(
            json.dumps(header, sort_keys=True, default=_json_default).encode(), dtype=np.uint8
        ),
        **{f"block_{k}": v for k, v in weights.items()},
    )


def load_checkpoint(path):
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("schema") != CHECKPOINT_SCHEMA:
            raise FormatError(f"unsupported checkpoint schema {header.get('schema')}")
        weights = {
            k[len("block_") :]: z[k] for k in z.files if k.startswith("block_")
        }
    return weights, header
