"""Single-alpha cut clustering.

An artificial sink is joined to every vertex with capacity ``alpha``; the
community of a vertex ``s`` is the (smallest) source side of a minimum
``s``-sink cut, and the clusters are the maximal communities.  Real weights
are mapped onto integers by a power-of-two scale so the flow solver works
with exact integer arithmetic.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .maxflow import HEADROOM, FlowNetwork, PushRelabel, read_dimacs
from .normalizer import UndirectedGraph

log = logging.getLogger(__name__)

#: When set to an integer ``k``, every probe brute-forces the inner
#: bicriterion bound on clusters with at most ``k`` vertices.
VERIFY_INNER_BOUND: int | None = None


class BicriterionViolation(AssertionError):
    pass


@dataclass
class Partition:
    alpha: float
    clusters: list[list[int]]
    community_heads: list[list[int]] = field(default_factory=list)
    flow_calls: int = 0
    remarks: int = 0

    @property
    def k(self) -> int:
        return len(self.clusters)

    def labels(self, n) -> np.ndarray:
        out = np.full(n, -1, dtype=np.int64)
        for c, members in enumerate(self.clusters):
            out[members] = c
        return out

    def as_sets(self) -> set[frozenset]:
        return {frozenset(c) for c in self.clusters}


@dataclass
class ScaledNetwork:
    """Integer network of ``g`` plus the artificial sink (vertex ``n``)."""

    net: FlowNetwork
    scale: float
    alpha_int: int
    edges_int: np.ndarray  # integer capacity of each input edge (0 if dropped)
    dropped: int = 0

    @property
    def sink(self) -> int:
        return self.net.n - 1


def choose_scale(g: UndirectedGraph, alpha: float, sink_as_source=False) -> float:
    """Largest power of two with ``max_v(U_v + alpha) * scale <= 2^62``.

    With ``sink_as_source`` the sink's own total ``n * alpha`` is bounded too
    (needed when the sink is used as a flow source, as in a full cut tree).
    """
    top = float(g.adjacent_weight().max(initial=0.0)) + alpha
    if sink_as_source:
        top = max(top, g.n * alpha)
    if top <= 0:
        return 1.0
    mant, exp = math.frexp(HEADROOM / top)  # HEADROOM/top = mant * 2**exp, mant in [0.5, 1)
    return math.ldexp(1.0, exp - 1)


def _round(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def scale_to_integer(g: UndirectedGraph, alpha: float, scale: float | None = None) -> ScaledNetwork:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if scale is None:
        scale = choose_scale(g, alpha)
    caps = _round(g.w * scale)
    if caps.size and caps.max() >= 2.0 ** 63:
        raise OverflowError("scaled capacity does not fit in 64 bits")
    caps = caps.astype(np.int64)
    dropped = int((caps == 0).sum())
    if dropped:
        log.warning("%d edge(s) rounded to zero capacity at scale %g", dropped, scale)
    alpha_int = int(_round(alpha * scale))
    n = g.n
    keep = caps > 0
    sink_caps = np.full(n, alpha_int, dtype=np.int64) if alpha_int > 0 else np.zeros(0, dtype=np.int64)
    sink_vs = np.arange(n, dtype=np.int64) if alpha_int > 0 else np.zeros(0, dtype=np.int64)
    tails = np.concatenate([g.u[keep], sink_vs])
    heads = np.concatenate([g.v[keep], np.full(len(sink_vs), n, dtype=np.int64)])
    c = np.concatenate([caps[keep], sink_caps])
    net = FlowNetwork.from_arcs(n + 1, tails, heads, c, c, 0, n)
    return ScaledNetwork(net, scale, alpha_int, caps, dropped)


def pass_order(g: UndirectedGraph) -> list[int]:
    """Vertices by decreasing adjacent weight, ties by index."""
    adj = g.adjacent_weight()
    return sorted(range(g.n), key=lambda v: (-adj[v], v))


def community_traversal(sn: ScaledNetwork, order, solver: PushRelabel | None = None) -> Partition:
    """Probe vertices in ``order``, skipping those already inside a community.

    A new community that swallows earlier ones re-marks their members.
    """
    n = sn.net.n - 1
    t = sn.sink
    solver = solver or PushRelabel(sn.net)
    owner = np.full(n, -1, dtype=np.int64)
    heads: dict[int, list[int]] = {}
    calls = remarks = 0
    for s in order:
        if owner[s] >= 0:
            continue
        _, side = solver.run(s, t)
        calls += 1
        members = np.flatnonzero(side[:n])
        absorbed = set(owner[members].tolist()) - {-1}
        merged = [s]
        for old in sorted(absorbed):
            merged.extend(heads.pop(old))
            remarks += 1
        heads[s] = merged
        owner[members] = s
    clusters: dict[int, list[int]] = {}
    for v in range(n):
        clusters.setdefault(int(owner[v]), []).append(v)
    ordered = sorted(clusters.items(), key=lambda kv: kv[1][0])
    return Partition(
        alpha=float("nan"),
        clusters=[members for _, members in ordered],
        community_heads=[sorted(heads[h]) for h, _ in ordered],
        flow_calls=calls,
        remarks=remarks,
    )


def basic_cut_cluster(g: UndirectedGraph, alpha: float, order=None, scale=None) -> Partition:
    """Partition a connected graph at one ``alpha``."""
    if g.n == 1:
        return Partition(alpha, [[0]], [[0]])
    sn = scale_to_integer(g, alpha, scale)
    part = community_traversal(sn, pass_order(g) if order is None else order)
    part.alpha = alpha
    check_lower_bound(sn, part)
    if VERIFY_INNER_BOUND:
        check_inner_bound(sn, part, VERIFY_INNER_BOUND)
    return part


# -- bicriterion bounds ------------------------------------------------------

def _int_edges(sn: ScaledNetwork, g_n):
    net = sn.net
    tails = np.repeat(np.arange(net.n), np.diff(net.start))
    fwd = (tails < net.head) & (net.head < g_n)
    return tails[fwd], net.head[fwd], net.cap[fwd]


def check_lower_bound(sn: ScaledNetwork, part: Partition):
    """``c(S, V-S) <= alpha * |V-S|`` for every cluster, exactly in the
    integer network."""
    n = sn.net.n - 1
    u, v, c = _int_edges(sn, n)
    lab = part.labels(n)
    crossing = lab[u] != lab[v]
    cut = np.zeros(part.k, dtype=object)
    np.add.at(cut, lab[u][crossing], c[crossing].astype(object))
    np.add.at(cut, lab[v][crossing], c[crossing].astype(object))
    for i, members in enumerate(part.clusters):
        rest = n - len(members)
        if rest and cut[i] > sn.alpha_int * rest:
            raise BicriterionViolation(
                f"cluster {i} at alpha={part.alpha}: cut {cut[i]} > {sn.alpha_int} * {rest}")


def check_inner_bound(sn: ScaledNetwork, part: Partition, max_size=12):
    """``c(P, Q) >= alpha * min(|P|, |Q|)`` for every bipartition of every
    cluster with at most ``max_size`` vertices (brute force)."""
    n = sn.net.n - 1
    u, v, c = _int_edges(sn, n)
    for members in part.clusters:
        k = len(members)
        if k < 2 or k > max_size:
            continue
        local = np.full(n, -1, dtype=np.int64)
        local[members] = np.arange(k)
        inside = (local[u] >= 0) & (local[v] >= 0)
        a, b, w = local[u[inside]], local[v[inside]], c[inside]
        # vertex k-1 pinned to Q: each unordered bipartition once
        masks = np.arange(1, 2 ** (k - 1), dtype=np.int64)
        bits = (masks[:, None] >> np.arange(k)) & 1
        cross = bits[:, a] != bits[:, b]
        sizes = bits.sum(axis=1)
        small = np.minimum(sizes, k - sizes)
        # float screen, then exact integers for anything near the bound
        approx = cross @ w.astype(float)
        suspect = np.flatnonzero(approx <= float(sn.alpha_int) * small * (1 + 1e-9))
        for i in suspect:
            exact = sum(int(x) for x in w[cross[i]])
            if exact < sn.alpha_int * int(small[i]):
                raise BicriterionViolation(
                    f"cluster {members} at alpha={part.alpha}: inner cut {exact} "
                    f"< {sn.alpha_int} * {small[i]}")


# -- min cut tree ----------------------------------------------------------

def min_cut_tree(g, variant="flow", scale=None, root=0):
    """Gusfield's construction over ``g`` (an :class:`UndirectedGraph` or a
    :class:`FlowNetwork`).  Returns edges ``(s, parent, value)``.

    ``variant="flow"`` follows the short pseudocode (flow-equivalent tree:
    tree-path minima equal pairwise min-cut values).  ``variant="cut"`` adds
    the parent swap that makes every tree edge induce a minimum cut.
    ``root`` is the vertex every other one starts attached to; the rest are
    processed in increasing order.  Real-weighted graphs are scaled by a
    power of two, so integer weights are represented exactly.
    """
    if isinstance(g, UndirectedGraph):
        if scale is None:
            top = float(g.adjacent_weight().max(initial=1.0))
            scale = math.ldexp(1.0, math.frexp(HEADROOM / top)[1] - 1)
            if all(float(x).is_integer() for x in g.w):
                scale = 1.0
        caps = _round(g.w * scale).astype(np.int64)
        net = FlowNetwork.from_arcs(g.n, g.u, g.v, caps, caps)
    else:
        net, scale = g, 1.0
    n = net.n
    order = [root] + [v for v in range(n) if v != root]
    pos = {v: i for i, v in enumerate(order)}
    prev = [root] * n
    weight = [0] * n
    solver = PushRelabel(net)
    for s in order[1:]:
        t = prev[s]
        value, side = solver.run(s, t)
        weight[s] = value
        src = side.copy()
        for i in range(n):
            if i != s and src[i] and prev[i] == t and (variant == "cut" or pos[i] > pos[s]):
                prev[i] = s
        if variant == "cut" and t != root and src[prev[t]]:
            prev[s] = prev[t]
            prev[t] = s
            weight[s], weight[t] = weight[t], value
    return [(s, prev[s], weight[s] / scale) for s in order[1:]]


def tree_path_min(tree_edges, n, s, t):
    adj: dict[int, list[tuple[int, float]]] = {i: [] for i in range(n)}
    for a, b, w in tree_edges:
        adj[a].append((b, w))
        adj[b].append((a, w))
    stack = [(s, math.inf)]
    seen = {s}
    while stack:
        x, best = stack.pop()
        if x == t:
            return best
        for y, w in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append((y, min(best, w)))
    return 0.0


def cut_tree_clusters(g: UndirectedGraph, alpha: float, scale=None) -> Partition:
    """Literal cluster extraction: full cut tree of the expanded graph, sink
    removed, connected components returned.  The tree is grown from the sink
    so that, where minimum cuts tie, each vertex keeps its smallest side."""
    if scale is None:
        scale = choose_scale(g, alpha, sink_as_source=True)
    sn = scale_to_integer(g, alpha, scale)
    n = g.n
    tree = min_cut_tree(sn.net, variant="cut", root=n)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, _ in tree:
        if a != n and b != n:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    clusters = sorted(groups.values(), key=lambda c: c[0])
    return Partition(alpha, clusters, [[c[0]] for c in clusters])


# -- worker boundary files -------------------------------------------------

def write_pass_order(order, fh):
    fh.write(" ".join(str(v) for v in order) + "\n")


def read_pass_order(fh) -> list[int]:
    return [int(x) for x in fh.read().split()]


def write_clusters(part: Partition, fh):
    """One cluster per line (vertex indices); a leading comment carries alpha."""
    fh.write(f"# alpha {part.alpha!r} flow_calls {part.flow_calls} remarks {part.remarks}\n")
    for members, heads in itertools.zip_longest(part.clusters, part.community_heads, fillvalue=[]):
        fh.write(" ".join(map(str, members)) + " ; " + " ".join(map(str, heads)) + "\n")


def read_clusters(fh) -> Partition:
    part = Partition(float("nan"), [], [])
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            tok = line[1:].split()
            meta = dict(zip(tok[::2], tok[1::2]))
            part.alpha = float(meta.get("alpha", "nan"))
            part.flow_calls = int(meta.get("flow_calls", 0))
            part.remarks = int(meta.get("remarks", 0))
            continue
        members, _, heads = line.partition(";")
        part.clusters.append([int(x) for x in members.split()])
        part.community_heads.append([int(x) for x in heads.split()])
    return part


def run_probe_files(network_path, order_path, clusters_path, alpha=float("nan")):
    """Worker side of the file boundary: DIMACS network (sink = the ``t``
    terminal) plus pass order in, cluster list out."""
    with open(network_path) as fh:
        net = read_dimacs(fh)
    with open(order_path) as fh:
        order = read_pass_order(fh)
    tails = np.repeat(np.arange(net.n), np.diff(net.start))
    alpha_caps = net.cap[(net.head == net.sink) & (tails != net.sink)]
    alpha_int = int(alpha_caps[0]) if len(alpha_caps) else 0
    if net.sink != net.n - 1:
        raise ValueError("the artificial sink must be the last vertex")
    sn = ScaledNetwork(net, 1.0, alpha_int, np.zeros(0, dtype=np.int64))
    part = community_traversal(sn, order)
    part.alpha = alpha
    with open(clusters_path, "w") as fh:
        write_clusters(part, fh)
    return part
