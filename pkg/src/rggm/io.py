"""File formats and provenance metadata.

Plain-text, diff-able formats only: CSV for tables, JSONL for sample and
snapshot streams, JSON for reports.  Every file starts with a metadata
object (a ``#``-prefixed JSON comment for CSV, a ``{"meta": ...}`` first
record for JSONL, a ``"meta"`` key for JSON) carrying the tool version,
the full run configuration, the master seed, and a topology hash, so a
run can be reproduced bit-for-bit from its own output.
"""

from __future__ import annotations

import hashlib
import json
from typing import IO, Any, Iterable

import numpy as np

from .errors import ValidationError
from .fit import Snapshot
from .graph import EdgeConfig, Topology
from .oracle import MeasureTable

TOOL_NAME = "rggm"


def _version() -> str:
    from . import __version__
    return __version__


def topology_hash(topology: Topology) -> str:
    """SHA-256 of the canonical node count and edge list."""
    canon = f"{topology.m};" + ",".join(f"{i}-{j}" for i, j in topology.edges)
    return hashlib.sha256(canon.encode()).hexdigest()


def make_metadata(command: str, config: dict[str, Any],
                  seed: int | None = None,
                  topology: Topology | None = None) -> dict[str, Any]:
    """Provenance header embedded at the top of every output file."""
    return {
        "tool": TOOL_NAME,
        "version": _version(),
        "command": command,
        "config": config,
        "seed": seed,
        "topology_hash": None if topology is None else topology_hash(topology),
    }


# ----------------------------------------------------------------------
# graphs
# ----------------------------------------------------------------------

def load_graph(path: str) -> tuple[Topology, dict[str, int]]:
    """Read a whitespace-separated edge list with ``#`` comments.

    Arbitrary string labels are remapped to dense 0-based ids in order of
    first appearance; the mapping is returned alongside the topology.
    Self-loops and duplicate edges are validation errors.
    """
    labels: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tokens = body.split()
            if len(tokens) != 2:
                raise ValidationError(
                    f"{path}:{lineno}: expected two labels, got {len(tokens)}")
            u, v = tokens
            if u == v:
                raise ValidationError(f"{path}:{lineno}: self-loop {u!r}")
            for lab in (u, v):
                if lab not in labels:
                    labels[lab] = len(labels)
            i, j = labels[u], labels[v]
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate edge {u} {v}")
            seen.add((i, j))
            pairs.append((i, j))
    if not pairs:
        raise ValidationError(f"{path}: no edges found")
    return Topology(len(labels), tuple(sorted(pairs))), labels


_BUILTIN_GRAPHS = {
    "path": "make_path",
    "star": "make_star",
    "cycle": "make_cycle",
    "complete": "make_complete",
    "grid": "make_cycle_free_grid",
}


def resolve_graph(spec: str) -> tuple[Topology, dict[str, int] | None]:
    """Either a builtin family spec like ``path:5`` or an edge-list path."""
    if ":" in spec:
        kind, _, size = spec.partition(":")
        if kind in _BUILTIN_GRAPHS:
            from . import graph as graph_mod
            try:
                m = int(size)
            except ValueError:
                raise ValidationError(f"bad graph size in {spec!r}") from None
            return getattr(graph_mod, _BUILTIN_GRAPHS[kind])(m), None
    top, labels = load_graph(spec)
    return top, labels


# ----------------------------------------------------------------------
# snapshots (JSONL)
# ----------------------------------------------------------------------

def write_snapshots(fh: IO[str], snapshots: Iterable[Snapshot],
                    meta: dict | None = None) -> None:
    if meta is not None:
        fh.write(json.dumps({"meta": meta}) + "\n")
    for s in snapshots:
        rec = {"config_bits_hex": s.config.to_hex(), "x": s.x.tolist()}
        if s.weight != 1.0:
            rec["weight"] = s.weight
        fh.write(json.dumps(rec) + "\n")


def load_snapshots(path: str, topology: Topology) -> list[Snapshot]:
    """Read JSONL snapshot records ``{config_bits_hex, x, weight?}``.

    Metadata records (any object with a ``meta`` key) and unknown extra
    keys are tolerated, so a coupled-chain sample stream with attributes
    loads directly as fit input.
    """
    out: list[Snapshot] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: bad JSON: {exc}") from None
            if "meta" in rec:
                continue
            if "config_bits_hex" not in rec or "x" not in rec:
                raise ValidationError(
                    f"{path}:{lineno}: record needs config_bits_hex and x")
            config = EdgeConfig.from_hex(topology, rec["config_bits_hex"])
            x = np.asarray(rec["x"], dtype=np.float64)
            if x.shape != (topology.m,):
                raise ValidationError(
                    f"{path}:{lineno}: x has length {x.size}, "
                    f"expected {topology.m}")
            out.append(Snapshot(config, x, float(rec.get("weight", 1.0))))
    if not out:
        raise ValidationError(f"{path}: no snapshot records")
    return out


# ----------------------------------------------------------------------
# tables and reports
# ----------------------------------------------------------------------

def write_table_csv(fh: IO[str], table: MeasureTable,
                    meta: dict | None = None) -> None:
    """Enumeration table as CSV: packed config hex, half log-determinant,
    probability.  Row order is configuration-code order."""
    if meta is not None:
        fh.write("# " + json.dumps(meta) + "\n")
    fh.write("config_bits_hex,half_logdet,prob\n")
    nbytes = max(1, (table.topology.n + 7) // 8)
    for code in range(table.n_configs):
        hexstr = int(code).to_bytes(nbytes, "little").hex()
        fh.write(f"{hexstr},{table.half_logdets[code]!r},"
                 f"{table.probs[code]!r}\n")


def write_json(fh: IO[str], payload: dict, meta: dict | None = None) -> None:
    doc = {"meta": meta, **payload} if meta is not None else payload
    json.dump(doc, fh, indent=2)
    fh.write("\n")
