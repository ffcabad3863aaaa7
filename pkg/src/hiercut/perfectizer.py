"""Re-nest flat tree nodes with too many children.

A node whose children appeared all at once (a jump in the cluster count over
a tiny alpha change) gets a hierarchy built from the maximum spanning tree
of the weights between its children, rooted by one of two heuristics.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

import numpy as np

from .normalizer import UndirectedGraph
from .tree import FAKE, SYNTH, ClusterTree

#: Alpha printed for nodes created by perfectization.
SYNTHETIC_ALPHA_EXPORT = -0.15834708966782382


class RootHeuristic(enum.Enum):
    HEAVY_CYCLES_DEEP = "cycles"
    CENTRAL_PRIORITIZED_BFS = "central"


@dataclass(frozen=True)
class PerfectizeConfig:
    child_threshold: int = 16
    root_heuristic: RootHeuristic = RootHeuristic.CENTRAL_PRIORITIZED_BFS

    def __post_init__(self):
        if self.child_threshold < 3:
            raise ValueError("child_threshold must be at least 3")


class DisconnectedChildGraph(RuntimeError):
    pass


@dataclass
class ChildGraph:
    nodes: list[int]  # tree node id of each child-graph vertex
    graph: UndirectedGraph


def build_child_graph(tree: ClusterTree, node: int, g: UndirectedGraph) -> ChildGraph:
    kids = tree.ordered_children(node)
    where = np.full(g.n, -1, dtype=np.int64)
    for i, c in enumerate(kids):
        where[tree.leaves_under(c)] = i
    a, b = where[g.u], where[g.v]
    keep = (a >= 0) & (b >= 0) & (a != b)
    cg = UndirectedGraph.from_pairs(len(kids), a[keep], b[keep], g.w[keep],
                                    [str(c) for c in kids])
    return ChildGraph(kids, cg)


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))
        self.size = [1] * n
        self.low = list(range(n))
        self.sets = n

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.p[b] = a
        self.size[a] += self.size[b]
        self.low[a] = min(self.low[a], self.low[b])
        self.sets -= 1
        return True


def max_spanning_tree(cg) -> list[tuple[int, int, float]]:
    """Kruskal on ``B - e`` (``B = 1 + max e``); equal weights are taken in
    lexicographic ``(i, j)`` order.  Returned weights are the originals."""
    g = cg.graph if isinstance(cg, ChildGraph) else cg
    if g.n <= 1:
        return []
    big = 1.0 + float(g.w.max(initial=0.0))
    order = np.lexsort((g.v, g.u, big - g.w))
    dsu = _DSU(g.n)
    out = []
    for e in order:
        i, j = int(g.u[e]), int(g.v[e])
        if dsu.union(i, j):
            out.append((i, j, float(g.w[e])))
    if len(out) != g.n - 1:
        raise DisconnectedChildGraph(f"child graph with {g.n} vertices is disconnected")
    return out


def _adjacency(n, tree_edges):
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for i, j, w in tree_edges:
        adj[i][j] = w
        adj[j][i] = w
    return adj


def _root_central(n, tree_edges) -> int:
    """Prioritized BFS from the leaves inward; the last vertex pushed wins."""
    adj = _adjacency(n, tree_edges)
    togo = [len(a) for a in adj]
    heap = []
    last = 0
    for v in range(n):
        if togo[v] == 1:
            w = next(iter(adj[v].values()))
            heapq.heappush(heap, (-w, v))
            last = v
    done = [False] * n
    while heap:
        _, x = heapq.heappop(heap)
        done[x] = True
        for y, w in sorted(adj[x].items()):
            if done[y]:
                continue
            togo[y] -= 1
            if togo[y] == 1:
                heapq.heappush(heap, (-w, y))
                last = y
    return last


def _tree_path(adj, a, b) -> list[int]:
    prev = {a: None}
    stack = [a]
    while stack:
        x = stack.pop()
        if x == b:
            break
        for y in adj[x]:
            if y not in prev:
                prev[y] = x
                stack.append(y)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _weighted_middle(adj, path) -> int:
    """Path vertex with the most even split of path weight on either side;
    ties to the lower index."""
    steps = [adj[path[i]][path[i + 1]] for i in range(len(path) - 1)]
    total = sum(steps)
    left = 0.0
    best = None
    for i, v in enumerate(path):
        if i:
            left += steps[i - 1]
        key = (abs(left - (total - left)), v)
        if best is None or key < best:
            best = key
    return best[1]


def _root_cycles(cg: UndirectedGraph, tree_edges) -> int:
    """Unite along tree paths, heaviest edges first; the vertex joined last
    becomes the root, leaving heavily tied groups deep in the hierarchy."""
    n = cg.n
    adj = _adjacency(n, tree_edges)
    in_tree = {(i, j) for i, j, _ in tree_edges}
    dsu = _DSU(n)
    for e in np.lexsort((cg.v, cg.u, -cg.w)):
        i, j = int(cg.u[e]), int(cg.v[e])
        if (i, j) in in_tree:
            a, b = dsu.find(i), dsu.find(j)
            if a == b:
                continue
            small = (dsu.size[a], dsu.low[a]), (dsu.size[b], dsu.low[b])
            dsu.union(i, j)
            if dsu.sets == 1:
                return i if small[0] < small[1] else j
        else:
            path = _tree_path(adj, i, j)
            before = dsu.sets
            for x, y in zip(path, path[1:]):
                dsu.union(x, y)
            if dsu.sets == 1 and before > 1:
                return _weighted_middle(adj, path)
    return 0


def select_root(cg, tree_edges, heuristic=RootHeuristic.CENTRAL_PRIORITIZED_BFS) -> int:
    g = cg.graph if isinstance(cg, ChildGraph) else cg
    if g.n <= 1:
        return 0
    if RootHeuristic(heuristic) is RootHeuristic.CENTRAL_PRIORITIZED_BFS:
        return _root_central(g.n, tree_edges)
    return _root_cycles(g, tree_edges)


def _renest(tree: ClusterTree, p: int, cg: ChildGraph, tree_edges, root: int):
    n = len(cg.nodes)
    adj = _adjacency(n, tree_edges)
    kids_of: list[list[int]] = [[] for _ in range(n)]
    depth = [0] * n
    order = [root]
    seen = {root}
    for x in order:
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                kids_of[x].append(y)
                depth[y] = depth[x] + 1
                order.append(y)
    lo = tree.alpha[p]
    finite = [tree.alpha[c] for c in cg.nodes if np.isfinite(tree.alpha[c])]
    hi = min(finite) if finite else lo + max(depth) + 1.0
    levels = max(depth) + 1

    def synth_alpha(d):
        return lo + (hi - lo) * d / levels

    # build bottom-up so every synthetic node knows its leaf count
    made: dict[int, int] = {}
    for x in reversed(order):
        if x == root or not kids_of[x]:
            continue
        members = [cg.nodes[x]] + [made.get(y, cg.nodes[y]) for y in kids_of[x]]
        nid = tree._new_node(SYNTH, synth_alpha(depth[x]), (), tree.comp[p],
                             sum(tree.size[m] for m in members), p)
        for m in members:
            tree.parent[m] = nid
        tree.children[nid] = set(members)
        made[x] = nid
    top = [cg.nodes[root]] + [made.get(y, cg.nodes[y]) for y in kids_of[root]]
    for m in top:
        tree.parent[m] = p
    tree.children[p] = set(top)


def perfectize(tree: ClusterTree, g: UndirectedGraph, cfg=PerfectizeConfig()) -> ClusterTree:
    """Copy of ``tree`` with every excessive node re-nested, bottom-up.
    Fake roots, synthetic nodes and already perfected nodes are left alone."""
    out = ClusterTree.from_dict(tree.to_dict())
    todo = [v for v in out.postorder()
            if v >= out.n_leaves and out.kind[v] not in (FAKE, SYNTH)
            and v not in out.perfected and len(out.children[v]) >= cfg.child_threshold]
    for p in todo:
        cg = build_child_graph(out, p, g)
        edges = max_spanning_tree(cg)
        root = select_root(cg, edges, cfg.root_heuristic)
        _renest(out, p, cg, edges, root)
        out.perfected.add(p)
    return out
