"""Ambient graph topology and edge configurations.

A :class:`Topology` is the fixed maximal simple graph: ``m`` nodes
(integers ``0..m-1``) and an ordered list of undirected edges ``(i, j)``
with ``i < j``.  Random sub-graphs are :class:`EdgeConfig` values: one
0/1 bit per ambient edge, in canonical (lexicographic) edge order, so
that bit ``k`` always refers to the same node pair.

Configurations form a Boolean lattice under :func:`join` (bitwise max),
:func:`meet` (bitwise min) and the partial order :func:`leq`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Literal

import numpy as np

from .errors import ValidationError

#: Hard cap on node count so dense m x m covariance matrices stay addressable.
#: Override per-topology via ``Topology(..., max_nodes=...)``.
MAX_NODES = 4096

NestedKind = Literal["path", "cycle_free_grid", "star"]


@dataclass(frozen=True)
class Topology:
    """Fixed node set plus ordered ambient edge set.

    Edges must be given as pairs ``(i, j)`` with ``0 <= i < j < m``, strictly
    sorted lexicographically and free of duplicates.  Instances are immutable
    and safe to share across threads.
    """

    m: int
    edges: tuple[tuple[int, int], ...]
    max_nodes: int = field(default=MAX_NODES, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValidationError(f"node count must be positive, got {self.m}")
        if self.m > self.max_nodes:
            raise ValidationError(
                f"node count {self.m} exceeds cap {self.max_nodes}"
            )
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        prev = None
        for i, j in edges:
            if not (0 <= i < j < self.m):
                raise ValidationError(f"invalid edge ({i}, {j}) for m={self.m}")
            if prev is not None and (i, j) <= prev:
                raise ValidationError(
                    f"edge list not strictly sorted at ({i}, {j})"
                )
            prev = (i, j)

    @property
    def n(self) -> int:
        """Number of ambient edges."""
        return len(self.edges)

    @cached_property
    def _index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays ``(ei, ej)`` as int64, in canonical edge order."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(self.edges, dtype=np.int64)
        ei = np.ascontiguousarray(arr[:, 0])
        ej = np.ascontiguousarray(arr[:, 1])
        return ei, ej

    def edge_index(self, i: int, j: int) -> int:
        """Canonical index of edge ``(i, j)`` (order of i, j irrelevant)."""
        if i > j:
            i, j = j, i
        try:
            return self._index[(i, j)]
        except KeyError:
            raise ValidationError(f"({i}, {j}) is not an ambient edge") from None

    def has_edge(self, i: int, j: int) -> bool:
        if i > j:
            i, j = j, i
        return (i, j) in self._index


@dataclass
class EdgeConfig:
    """One realization of the random sub-graph: bit ``k`` is the status of
    the ``k``-th ambient edge.  Stored as a uint8 0/1 vector for cheap
    kernel interop; :meth:`code` / :meth:`to_hex` give packed forms."""

    topology: Topology
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.shape[0] != self.topology.n:
            raise ValidationError(
                f"bit vector length {bits.shape} does not match "
                f"{self.topology.n} ambient edges"
            )
        if bits.size and bits.max() > 1:
            raise ValidationError("bits must be 0 or 1")
        self.bits = bits

    # -- constructors -------------------------------------------------

    @classmethod
    def empty(cls, topology: Topology) -> "EdgeConfig":
        return cls(topology, np.zeros(topology.n, dtype=np.uint8))

    @classmethod
    def full(cls, topology: Topology) -> "EdgeConfig":
        return cls(topology, np.ones(topology.n, dtype=np.uint8))

    @classmethod
    def from_bits(cls, topology: Topology, bits: Iterable[int]) -> "EdgeConfig":
        return cls(topology, np.fromiter((int(b) for b in bits), dtype=np.uint8,
                                         count=topology.n))

    @classmethod
    def from_code(cls, topology: Topology, code: int) -> "EdgeConfig":
        """Inverse of :meth:`code`: bit ``k`` of the integer is edge ``k``."""
        n = topology.n
        if code < 0 or code >> n:
            raise ValidationError(f"code {code} out of range for n={n}")
        bits = np.fromiter(((code >> k) & 1 for k in range(n)),
                           dtype=np.uint8, count=n)
        return cls(topology, bits)

    @classmethod
    def from_hex(cls, topology: Topology, hexstr: str) -> "EdgeConfig":
        """Inverse of :meth:`to_hex`."""
        n = topology.n
        nbytes = (n + 7) // 8
        try:
            raw = bytes.fromhex(hexstr)
        except ValueError as exc:
            raise ValidationError(f"bad hex config: {exc}") from None
        if len(raw) != nbytes:
            raise ValidationError(
                f"hex config has {len(raw)} bytes, expected {nbytes} for n={n}"
            )
        unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                                 bitorder="little")
        if unpacked[n:].any():
            raise ValidationError("hex config has bits set beyond edge count")
        return cls(topology, unpacked[:n].copy())

    # -- views ---------------------------------------------------------

    def code(self) -> int:
        """Pack bits into an integer (bit ``k`` = edge ``k``)."""
        if self.topology.n == 0:
            return 0
        packed = np.packbits(self.bits, bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    def to_hex(self) -> str:
        """Little-endian packed-bit hex string, ceil(n/8) bytes."""
        return np.packbits(self.bits, bitorder="little").tobytes().hex() \
            if self.topology.n else ""

    def count(self) -> int:
        """Number of active edges."""
        return int(self.bits.sum())

    def copy(self) -> "EdgeConfig":
        return EdgeConfig(self.topology, self.bits.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeConfig):
            return NotImplemented
        return (self.topology == other.topology
                and np.array_equal(self.bits, other.bits))

    __hash__ = None  # mutable


def _check_same_topology(a: EdgeConfig, b: EdgeConfig) -> None:
    if a.topology != b.topology:
        raise ValidationError("configurations belong to different topologies")


def join(a: EdgeConfig, b: EdgeConfig) -> EdgeConfig:
    """Lattice join: bitwise max (union of edge sets)."""
    _check_same_topology(a, b)
    return EdgeConfig(a.topology, np.maximum(a.bits, b.bits))


def meet(a: EdgeConfig, b: EdgeConfig) -> EdgeConfig:
    """Lattice meet: bitwise min (intersection of edge sets)."""
    _check_same_topology(a, b)
    return EdgeConfig(a.topology, np.minimum(a.bits, b.bits))


def leq(a: EdgeConfig, b: EdgeConfig) -> bool:
    """Partial order: true iff every bit of ``a`` is <= the bit of ``b``."""
    _check_same_topology(a, b)
    return bool(np.all(a.bits <= b.bits))


# -- standard families ------------------------------------------------


def make_path(m: int) -> Topology:
    """Path on ``m`` nodes: edges (0,1), (1,2), ..., (m-2, m-1)."""
    if m < 2:
        raise ValidationError("path needs at least 2 nodes")
    return Topology(m, tuple((k, k + 1) for k in range(m - 1)))


def make_star(m: int) -> Topology:
    """Star on ``m`` nodes with center 0."""
    if m < 2:
        raise ValidationError("star needs at least 2 nodes")
    return Topology(m, tuple((0, k) for k in range(1, m)))


def make_cycle(m: int) -> Topology:
    """Cycle on ``m`` nodes (m >= 3)."""
    if m < 3:
        raise ValidationError("cycle needs at least 3 nodes")
    edges = sorted([(k, k + 1) for k in range(m - 1)] + [(0, m - 1)])
    return Topology(m, tuple(edges))


def make_complete(m: int) -> Topology:
    """Complete graph on ``m`` nodes."""
    if m < 2:
        raise ValidationError("complete graph needs at least 2 nodes")
    return Topology(m, tuple((i, j) for i in range(m) for j in range(i + 1, m)))


def make_cycle_free_grid(m: int) -> Topology:
    """Acyclic ladder (comb): spine along even nodes, one tooth per rung.

    Node ``k`` attaches to ``k-1`` when ``k`` is odd and to ``k-2`` when
    even, which keeps the edge list a lexicographic prefix of every larger
    instance.
    """
    if m < 2:
        raise ValidationError("grid needs at least 2 nodes")
    edges = [(k - 1 if k % 2 else k - 2, k) for k in range(1, m)]
    return Topology(m, tuple(edges))


_MAKERS = {
    "path": make_path,
    "cycle_free_grid": make_cycle_free_grid,
    "star": make_star,
}


def nested_sequence(kind: NestedKind, sizes: Iterable[int]) -> list[Topology]:
    """Strictly growing family of topologies whose edge lists are prefixes
    of one another, so bit ``k`` means the same node pair at every size.

    ``kind`` is one of ``path``, ``cycle_free_grid``, ``star``; ``sizes``
    are node counts and must be strictly increasing.
    """
    key = str(kind).replace("-", "_").replace(" ", "_")
    if key not in _MAKERS:
        raise ValidationError(f"unknown nested kind {kind!r}")
    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError(f"sizes must be strictly increasing, got {sizes}")
    tops = [_MAKERS[key](s) for s in sizes]
    for small, big in zip(tops, tops[1:]):
        if big.edges[: small.n] != small.edges:
            raise AssertionError("nested family lost the prefix property")
    return tops


def random_topology(m: int, n_edges: int, rng: np.random.Generator) -> Topology:
    """Uniformly random simple graph with exactly ``n_edges`` edges."""
    total = m * (m - 1) // 2
    if not 0 <= n_edges <= total:
        raise ValidationError(f"cannot place {n_edges} edges on {m} nodes")
    chosen = rng.choice(total, size=n_edges, replace=False)
    # Unrank upper-triangular linear indices to (i, j) pairs.
    row_counts = np.arange(m - 1, 0, -1)
    offsets = np.concatenate([[0], np.cumsum(row_counts)])
    i = np.searchsorted(offsets, chosen, side="right") - 1
    j = chosen - offsets[i] + i + 1
    edges = sorted((int(a), int(b)) for a, b in zip(i, j))
    return Topology(m, tuple(edges))


def catalog(max_edges: int) -> list[Topology]:
    """Fixed small-graph catalog: paths, cycles, stars, and complete graphs
    up to K4, keeping every member with at most ``max_edges`` edges."""
    tops: list[Topology] = []
    seen: set[tuple] = set()

    def add(t: Topology) -> None:
        key = (t.m, t.edges)
        if t.n <= max_edges and key not in seen:
            seen.add(key)
            tops.append(t)

    for m in range(2, max_edges + 2):
        add(make_path(m))
    for m in range(3, max_edges + 1):
        add(make_cycle(m))
    for m in range(2, max_edges + 2):
        add(make_star(m))
    for m in (2, 3, 4):
        add(make_complete(m))
    return tops


def iter_configs(topology: Topology) -> Iterator[EdgeConfig]:
    """All 2^n configurations in code order (small n only)."""
    for code in range(1 << topology.n):
        yield EdgeConfig.from_code(topology, code)
