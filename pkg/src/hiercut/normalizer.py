"""Directed relation graph -> undirected, real-weighted, class-level graph.

Each arc ``i -> j`` is divided by the fan-in ``S_j`` of its target (the sum of
all arc weights entering ``j``), optionally multiplied by a logarithmic
leverage ``max(ln S_j, log_clamp)``.  Opposite arcs are summed into one
undirected edge.  Member-level artifacts are lifted onto their classes
either before or after this normalization.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .relation_graph import Artifact, Level, RelationArc, RelationGraph

#: Edges lighter than this after lifting are dropped.
DROP_THRESHOLD = 1e-12


class Leverage(enum.Enum):
    NONE = "none"
    LOG = "log"


class LiftOrder(enum.Enum):
    LIFT_THEN_NORMALIZE = "pre"
    NORMALIZE_THEN_LIFT = "post"


@dataclass(frozen=True)
class NormalizationConfig:
    leverage: Leverage = Leverage.NONE
    lift_order: LiftOrder = LiftOrder.NORMALIZE_THEN_LIFT
    log_clamp: float = 1.0

    def __post_init__(self):
        if not self.log_clamp > 0:
            raise ValueError("log_clamp must be positive")


class UndirectedGraph:
    """Simple undirected graph with positive real weights.

    Edges are stored canonically (``u < v``), sorted, one per vertex pair.
    """

    def __init__(self, n, u, v, w, labels=None):
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        if (lo == hi).any():
            raise ValueError("self-loops are not allowed")
        if (w <= 0).any():
            raise ValueError("edge weights must be positive")
        key = lo * n + hi
        order = np.lexsort((hi, lo))
        key = key[order]
        if len(key) > 1 and (np.diff(key) == 0).any():
            raise ValueError("duplicate edge")
        self.n = int(n)
        self.u = lo[order]
        self.v = hi[order]
        self.w = w[order]
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        if len(self.labels) != self.n:
            raise ValueError("label count does not match vertex count")

    @classmethod
    def from_pairs(cls, n, u, v, w, labels=None, drop_below=0.0):
        """Accumulate possibly repeated, unordered pairs; drops self-loops and
        edges with weight ``<= drop_below``."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        keep = u != v
        lo = np.minimum(u, v)[keep]
        hi = np.maximum(u, v)[keep]
        w = w[keep]
        if len(lo) == 0:
            return cls(n, [], [], [], labels)
        keys, inv = np.unique(lo * n + hi, return_inverse=True)
        sums = np.bincount(inv.ravel(), weights=w, minlength=len(keys))
        ok = sums > drop_below
        keys = keys[ok]
        return cls(n, keys // n, keys % n, sums[ok], labels)

    @property
    def m(self) -> int:
        return len(self.w)

    def edges(self):
        return zip(self.u.tolist(), self.v.tolist(), self.w.tolist())

    def adjacent_weight(self) -> np.ndarray:
        return (np.bincount(self.u, weights=self.w, minlength=self.n)
                + np.bincount(self.v, weights=self.w, minlength=self.n))

    def subgraph(self, vertices) -> "UndirectedGraph":
        """Induced subgraph, vertices renumbered in the given order."""
        vertices = np.asarray(vertices, dtype=np.int64)
        local = np.full(self.n, -1, dtype=np.int64)
        local[vertices] = np.arange(len(vertices))
        keep = (local[self.u] >= 0) & (local[self.v] >= 0)
        return UndirectedGraph(len(vertices), local[self.u[keep]], local[self.v[keep]],
                               self.w[keep], [self.labels[i] for i in vertices])

    def weight_dict(self):
        return {(a, b): c for a, b, c in self.edges()}

    def __eq__(self, other):
        return (isinstance(other, UndirectedGraph) and self.n == other.n
                and self.labels == other.labels
                and np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)
                and np.array_equal(self.w, other.w))

    def __repr__(self):
        return f"UndirectedGraph(n={self.n}, m={self.m})"


def _multiplier(fan_in, cfg):
    if cfg.leverage is Leverage.NONE:
        return np.ones_like(fan_in)
    with np.errstate(divide="ignore"):
        logs = np.log(fan_in)
    return np.maximum(np.where(fan_in > 0, logs, -np.inf), cfg.log_clamp)


def normalized_arcs(src, dst, w, n, cfg=NormalizationConfig()):
    """Directed normalized arcs ``(src, dst, w_tilde)`` with self-loops
    removed, plus the fan-in vector."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    keep = (src != dst) & (w > 0)
    src, dst, w = src[keep], dst[keep], w[keep]
    fan_in = np.bincount(dst, weights=w, minlength=n).astype(float)
    mult = _multiplier(fan_in, cfg)
    wt = w / fan_in[dst] * mult[dst]
    return src, dst, wt, fan_in


def normalize(g: RelationGraph, cfg=NormalizationConfig(), drop_below=0.0) -> UndirectedGraph:
    """Fan-in normalization of all arcs of ``g`` (no lifting); the result
    has one vertex per artifact."""
    src, dst, w = g.arc_arrays()
    s, d, wt, _ = normalized_arcs(src, dst, w, g.n, cfg)
    return UndirectedGraph.from_pairs(g.n, s, d, wt, g.labels, drop_below=drop_below)


def _class_map(g: RelationGraph):
    classes = g.class_indices()
    pos = {c: k for k, c in enumerate(classes)}
    mapping = np.array([pos.get(g.owner(i), -1) for i in range(g.n)], dtype=np.int64)
    if (mapping < 0).any():
        bad = int(np.flatnonzero(mapping < 0)[0])
        raise ValueError(f"dangling membership for {g.artifacts[bad].label!r}")
    return classes, mapping


def lift_relations(g: RelationGraph) -> RelationGraph:
    """Aggregate member-level arcs onto their classes (directed).

    Intra-class arcs become class self-loops, which normalization discards.
    """
    classes, mapping = _class_map(g)
    artifacts = [Artifact(k, g.artifacts[c].label, Level.CLASS) for k, c in enumerate(classes)]
    acc: dict[tuple[int, int], float] = {}
    for arc in g.arcs:
        key = (int(mapping[arc.src]), int(mapping[arc.dst]))
        acc[key] = acc.get(key, 0.0) + arc.weight
    arcs = [RelationArc(s, d, None, val) for (s, d), val in acc.items()]
    return RelationGraph(artifacts, arcs, {})


def lift_undirected(ug: UndirectedGraph, g: RelationGraph) -> UndirectedGraph:
    """Sum normalized member-level edge weights onto class pairs."""
    classes, mapping = _class_map(g)
    labels = [g.artifacts[c].label for c in classes]
    return UndirectedGraph.from_pairs(len(classes), mapping[ug.u], mapping[ug.v], ug.w,
                                      labels, drop_below=DROP_THRESHOLD)


def lift(x, g: RelationGraph, cfg=NormalizationConfig()):
    """Lift either the directed graph (before normalization) or a normalized
    undirected graph (after) to class level."""
    if isinstance(x, UndirectedGraph):
        return lift_undirected(x, g)
    return lift_relations(x)


def build_clustering_input(g: RelationGraph, cfg=NormalizationConfig()) -> UndirectedGraph:
    """Normalization plus lifting in the configured order."""
    if cfg.lift_order is LiftOrder.LIFT_THEN_NORMALIZE:
        return normalize(lift_relations(g), cfg, drop_below=DROP_THRESHOLD)
    return lift_undirected(normalize(g, cfg), g)


# -- normalized graph file (stage boundary) --------------------------------

GRAPH_HEADER = "#! hiercut normalized-graph 1"


def write_graph(ug: UndirectedGraph, fh):
    fh.write(GRAPH_HEADER + "\n")
    fh.write(f"n {ug.n} {ug.m}\n")
    for i, lab in enumerate(ug.labels):
        fh.write(f"v {i} {lab}\n")
    for a, b, c in ug.edges():
        fh.write(f"e {a} {b} {c!r}\n")


def read_graph(fh) -> UndirectedGraph:
    first = fh.readline().rstrip("\n")
    if first != GRAPH_HEADER:
        raise ValueError(f"not a normalized graph file (header {first!r})")
    n = None
    labels: list[str] = []
    u, v, w = [], [], []
    for lineno, line in enumerate(fh, 2):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "n":
            n = int(parts[1])
        elif parts[0] == "v":
            if int(parts[1]) != len(labels):
                raise ValueError(f"line {lineno}: vertices must be listed in order")
            labels.append(parts[2])
        elif parts[0] == "e":
            u.append(int(parts[1]))
            v.append(int(parts[2]))
            w.append(float(parts[3]))
        else:
            raise ValueError(f"line {lineno}: unexpected record {parts[0]!r}")
    if n is None or len(labels) != n:
        raise ValueError("vertex count mismatch")
    return UndirectedGraph(n, u, v, w, labels)


def write_edge_list(ug: UndirectedGraph, fh):
    """Human-oriented dump: ``label<TAB>label<TAB>weight``."""
    for a, b, c in ug.edges():
        fh.write(f"{ug.labels[a]}\t{ug.labels[b]}\t{c:.12g}\n")


def fan_in_received(src, dst, w, n, cfg=NormalizationConfig()):
    """Normalized weight received by each vertex (NaN where fan-in is 0)."""
    s, d, wt, fan_in = normalized_arcs(src, dst, w, n, cfg)
    got = np.bincount(d, weights=wt, minlength=n).astype(float)
    got[fan_in == 0] = math.nan
    return got, fan_in
