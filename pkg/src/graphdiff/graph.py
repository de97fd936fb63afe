"""Undirected graphs in compressed sparse row form.

The container is immutable by convention: every mutating operation returns a
new ``CsrGraph``. Arcs are stored both ways (an undirected edge {u, v}
contributes arcs u->v and v->u), targets within a node's slice are sorted
ascending, and there are no self loops or duplicate arcs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "CsrGraph",
    "EdgeEvent",
    "GraphFormatError",
    "GraphStructureError",
    "load_edge_list",
    "volume",
    "apply_event",
    "apply_events",
    "spectral_norm_estimate",
    "save_csr_cache",
    "load_csr_cache",
]

_CACHE_MAGIC = b"GDCSR"
_CACHE_VERSION = 1


class GraphFormatError(ValueError):
    """Malformed edge-list or cache input."""


class GraphStructureError(ValueError):
    """Edge event violates the current graph structure."""


@dataclass(frozen=True)
class EdgeEvent:
    """A single edge insertion or deletion.

    kind is "insert" or "delete"; insert requires the edge to be absent,
    delete requires it to be present, and u != v always.
    """

    kind: str
    u: int
    v: int

    def __post_init__(self):
        if self.kind not in ("insert", "delete"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.u == self.v:
            raise ValueError("self-loop events are not allowed")


@dataclass(frozen=True)
class CsrGraph:
    """Symmetric adjacency in CSR form with a cached degree vector.

    offsets has length n+1; targets has length 2m and holds neighbor ids,
    sorted ascending within each node's slice. Degree-zero nodes are
    representable (deletes can create them).
    """

    n: int
    offsets: np.ndarray
    targets: np.ndarray
    degrees: np.ndarray = field(default=None)  # derived, filled in __post_init__

    def __post_init__(self):
        if self.degrees is None:
            object.__setattr__(self, "degrees", np.diff(self.offsets))
        self.offsets.setflags(write=False)
        self.targets.setflags(write=False)
        self.degrees.setflags(write=False)

    @property
    def m(self) -> int:
        """Undirected edge count."""
        return self.targets.shape[0] // 2

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors(self, u: int) -> np.ndarray:
        return self.targets[self.offsets[u]:self.offsets[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        lo, hi = self.offsets[u], self.offsets[u + 1]
        i = np.searchsorted(self.targets[lo:hi], v)
        return i < hi - lo and self.targets[lo + i] == v

    def arcs(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self.neighbors(u):
                yield u, int(v)

    def validate(self) -> None:
        """Full structural scan; used by tests and the cache loader."""
        if self.offsets.shape[0] != self.n + 1 or self.offsets[0] != 0:
            raise GraphStructureError("bad offsets array")
        if self.offsets[-1] != self.targets.shape[0]:
            raise GraphStructureError("offsets do not cover targets")
        if np.any(np.diff(self.offsets) < 0):
            raise GraphStructureError("offsets not nondecreasing")
        if self.targets.size and (self.targets.min() < 0 or self.targets.max() >= self.n):
            raise GraphStructureError("target id out of range")
        for u in range(self.n):
            nbrs = self.neighbors(u)
            if np.any(nbrs[:-1] >= nbrs[1:]):
                raise GraphStructureError(f"targets of node {u} not strictly sorted")
            if np.any(nbrs == u):
                raise GraphStructureError(f"self-loop at node {u}")
            for v in nbrs:
                if not self.has_edge(int(v), u):
                    raise GraphStructureError(f"missing reverse arc for ({u}, {v})")


def _from_edge_array(n: int, pairs: np.ndarray) -> CsrGraph:
    """Build a CsrGraph from an array of undirected (u, v) pairs, u != v.

    Duplicates are dropped; arcs are symmetrized and sorted.
    """
    if pairs.size:
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        keys = np.unique(lo.astype(np.int64) * n + hi)
        lo, hi = keys // n, keys % n
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
    else:
        src = dst = np.empty(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return CsrGraph(n=n, offsets=offsets, targets=dst.astype(np.int64))


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> CsrGraph:
    """Construct from explicit edge tuples over nodes [0, n)."""
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if arr.size:
        if arr.min() < 0 or arr.max() >= n:
            raise GraphStructureError("edge endpoint out of range")
        arr = arr[arr[:, 0] != arr[:, 1]]
    return _from_edge_array(n, arr)


def load_edge_list(stream: IO[str] | Iterable[str]) -> CsrGraph:
    """Parse a whitespace-delimited edge list into a graph.

    One "u v" pair per line; lines starting with '#' are comments. Arbitrary
    node tokens are remapped to dense ids in first-appearance order.
    Duplicate edges and self-loops are silently dropped; the graph is
    symmetrized.
    """
    remap: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"line {lineno}: expected two node tokens, got {len(tokens)}")
        ids = []
        for tok in tokens:
            if tok not in remap:
                remap[tok] = len(remap)
            ids.append(remap[tok])
        if ids[0] != ids[1]:
            pairs.append((ids[0], ids[1]))
    if not remap:
        raise GraphFormatError("empty graph: no edges found")
    return _from_edge_array(len(remap), np.asarray(pairs, dtype=np.int64).reshape(-1, 2))


def volume(g: CsrGraph, nodes: Sequence[int] | np.ndarray) -> int:
    """Sum of degrees over a node set."""
    idx = np.asarray(list(nodes), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise GraphStructureError("node id out of range")
    return int(g.degrees[idx].sum())


def _check_event(g: CsrGraph, e: EdgeEvent) -> None:
    if not (0 <= e.u < g.n and 0 <= e.v < g.n):
        raise GraphStructureError(f"event endpoint out of range: ({e.u}, {e.v})")
    present = g.has_edge(e.u, e.v)
    if e.kind == "insert" and present:
        raise GraphStructureError(f"insert of existing edge ({e.u}, {e.v})")
    if e.kind == "delete" and not present:
        raise GraphStructureError(f"delete of missing edge ({e.u}, {e.v})")


def apply_event(g: CsrGraph, e: EdgeEvent) -> CsrGraph:
    """Apply one symmetric edge edit, returning a new graph; n is unchanged."""
    _check_event(g, e)
    offsets = g.offsets
    targets = g.targets
    new_offsets = offsets.copy()
    pos_u = int(offsets[e.u] + np.searchsorted(g.neighbors(e.u), e.v))
    pos_v = int(offsets[e.v] + np.searchsorted(g.neighbors(e.v), e.u))
    lo, hi = min(e.u, e.v), max(e.u, e.v)
    if e.kind == "insert":
        # owner id breaks ties when both insertion points coincide
        (p1, _, t1), (p2, _, t2) = sorted([(pos_u, e.u, e.v), (pos_v, e.v, e.u)])
        new_targets = np.empty(targets.shape[0] + 2, dtype=targets.dtype)
        new_targets[:p1] = targets[:p1]
        new_targets[p1] = t1
        new_targets[p1 + 1:p2 + 1] = targets[p1:p2]
        new_targets[p2 + 1] = t2
        new_targets[p2 + 2:] = targets[p2:]
        new_offsets[lo + 1:hi + 1] += 1
        new_offsets[hi + 1:] += 2
    else:
        keep = np.ones(targets.shape[0], dtype=bool)
        keep[pos_u] = False
        keep[pos_v] = False
        new_targets = targets[keep]
        new_offsets[lo + 1:hi + 1] -= 1
        new_offsets[hi + 1:] -= 2
    return CsrGraph(n=g.n, offsets=new_offsets, targets=new_targets)


def apply_events(g: CsrGraph, events: Sequence[EdgeEvent]) -> CsrGraph:
    """Apply a batch of events in order.

    Above a size threshold (batch > 0.1 * m) the graph is rebuilt from an
    edge set instead of edited arc by arc.
    """
    if len(events) <= max(1, int(0.1 * g.m)):
        for e in events:
            g = apply_event(g, e)
        return g
    edges = {(int(u), int(v)) for u, v in zip(*_edge_pairs(g))}
    for e in events:
        key = (min(e.u, e.v), max(e.u, e.v))
        if e.kind == "insert":
            if key in edges:
                raise GraphStructureError(f"insert of existing edge {key}")
            edges.add(key)
        else:
            if key not in edges:
                raise GraphStructureError(f"delete of missing edge {key}")
            edges.remove(key)
        if not (0 <= e.u < g.n and 0 <= e.v < g.n):
            raise GraphStructureError(f"event endpoint out of range: ({e.u}, {e.v})")
    return from_edges(g.n, edges)


def _edge_pairs(g: CsrGraph) -> tuple[np.ndarray, np.ndarray]:
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    mask = src < g.targets
    return src[mask], g.targets[mask]


def spectral_norm_estimate(g: CsrGraph, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the adjacency spectral norm.

    Iterates on A + d_max * I so the dominant eigenvalue is unique even on
    bipartite graphs and the Rayleigh quotient increases monotonically.
    The result is capped at d_max.
    """
    if g.n < 1:
        raise GraphStructureError("empty graph")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    d_max = float(g.d_max)
    if d_max == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(g.n)
    x /= np.linalg.norm(x)
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    lam = 0.0
    for _ in range(iters):
        y = np.zeros(g.n)
        np.add.at(y, src, x[g.targets])
        y += d_max * x
        lam = float(x @ y)  # Rayleigh quotient of the shifted operator
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            break
        x = y / nrm
    return min(lam - d_max, d_max)


def save_csr_cache(g: CsrGraph, path) -> None:
    """Write the binary CSR cache: magic, version byte, little-endian arrays."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<B", _CACHE_VERSION))
        fh.write(struct.pack("<qq", g.n, g.targets.shape[0]))
        fh.write(g.offsets.astype("<i8").tobytes())
        fh.write(g.targets.astype("<i8").tobytes())


def load_csr_cache(path) -> CsrGraph:
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise GraphFormatError("not a CSR cache file")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != _CACHE_VERSION:
            raise GraphFormatError(f"unsupported cache version {version}")
        n, n_arcs = struct.unpack("<qq", fh.read(16))
        offsets = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8").astype(np.int64)
        targets = np.frombuffer(fh.read(8 * n_arcs), dtype="<i8").astype(np.int64)
    g = CsrGraph(n=n, offsets=offsets, targets=targets)
    g.validate()
    return g
