"""Global cluster tree (forest) over the artifacts.

Node ids: leaves are ``0..n-1`` (one per artifact), then one fake root per
disjoint component, then inner nodes.  Alpha strictly increases from a fake
root (``-inf``) down to the leaves (``+inf``).  A cluster observed at several
alphas is stored once, carrying the largest alpha at which it was seen, which
makes the final tree independent of the order partitions are merged in.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable

LEAF, INNER, FAKE, SYNTH = "leaf", "inner", "fake", "synth"

TREE_FORMAT = "hiercut-cluster-tree"
TREE_VERSION = 1


class NestingViolation(RuntimeError):
    """A merged cluster straddles existing clusters formed at a larger alpha."""


class ClusterTree:
    def __init__(self, labels: list[str], components: list[list[int]]):
        n = len(labels)
        self.labels = list(labels)
        self.n_leaves = n
        self.parent: list[int] = [-1] * n
        self.children: list[set[int]] = [set() for _ in range(n)]
        self.alpha: list[float] = [math.inf] * n
        self.heads: list[tuple[int, ...]] = [()] * n
        self.comp: list[int] = [-1] * n
        self.size: list[int] = [1] * n
        self.kind: list[str] = [LEAF] * n
        self.perfected: set[int] = set()
        self.touches = 0
        covered = 0
        for c, members in enumerate(components):
            root = self._new_node(FAKE, -math.inf, (), c, len(members), -1)
            for v in members:
                self.comp[v] = c
                self.parent[v] = root
                self.children[root].add(v)
            covered += len(members)
        if covered != n or -1 in self.comp:
            raise ValueError("components must partition the leaves")
        self.n_components = len(components)

    # -- structure ---------------------------------------------------------

    def _new_node(self, kind, alpha, heads, comp, size, parent):
        i = len(self.parent)
        self.parent.append(parent)
        self.children.append(set())
        self.alpha.append(alpha)
        self.heads.append(tuple(heads))
        self.comp.append(comp)
        self.size.append(size)
        self.kind.append(kind)
        return i

    def __len__(self):
        return len(self.parent)

    def fake_root(self, comp: int) -> int:
        return self.n_leaves + comp

    def is_leaf(self, v) -> bool:
        return v < self.n_leaves

    def roots(self) -> list[int]:
        """Top-level clusters and leaves (children of the fake roots)."""
        out = []
        for c in range(self.n_components):
            out.extend(self.children[self.fake_root(c)])
        return out

    def real_nodes(self) -> list[int]:
        return [v for v in range(len(self)) if self.kind[v] != FAKE]

    def leaves_under(self, v) -> list[int]:
        out, stack = [], [v]
        while stack:
            x = stack.pop()
            if x < self.n_leaves:
                out.append(x)
            else:
                stack.extend(self.children[x])
        return sorted(out)

    def ancestors(self, v) -> list[int]:
        """Real ancestors of ``v``, parent first (fake roots excluded)."""
        out = []
        p = self.parent[v]
        while p >= 0 and self.kind[p] != FAKE:
            out.append(p)
            p = self.parent[p]
        return out

    def depth(self, v) -> int:
        return len(self.ancestors(v))

    def heights(self) -> dict[int, int]:
        h = {}
        for v in self.postorder():
            h[v] = 0 if v < self.n_leaves else 1 + max(h[c] for c in self.children[v])
        return h

    def postorder(self, roots: Iterable[int] | None = None) -> list[int]:
        out = []
        stack = [(r, False) for r in (self.roots() if roots is None else roots)]
        while stack:
            v, expanded = stack.pop()
            if expanded:
                out.append(v)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in self.children[v])
        return out

    def lca(self, vertices) -> int | None:
        """Lowest real common ancestor-or-self; ``None`` if the vertices sit
        under different top-level nodes."""
        vertices = list(vertices)
        paths = [[v] + self.ancestors(v) for v in vertices]
        common = set(paths[0])
        for p in paths[1:]:
            common &= set(p)
        for x in paths[0]:
            if x in common:
                return x
        return None

    # -- merging -----------------------------------------------------------

    def merge_partition(self, part, vertex_map=None) -> int:
        """Insert every non-singleton cluster of ``part``; returns the number
        of nodes created.  ``vertex_map`` maps partition-local vertex ids to
        leaf ids."""
        created = 0
        heads_list = part.community_heads or [[] for _ in part.clusters]
        for members, heads in zip(part.clusters, heads_list):
            if len(members) < 2:
                continue
            if vertex_map is not None:
                members = [int(vertex_map[x]) for x in members]
                heads = [int(vertex_map[x]) for x in heads]
            created += self.insert_cluster(members, part.alpha, heads)
        return created

    def insert_cluster(self, members, alpha, heads=()) -> int:
        members = sorted(set(int(x) for x in members))
        size = len(members)
        if size < 2:
            return 0
        # climb to the topmost ancestor not larger than the cluster
        x = members[0]
        while True:
            p = self.parent[x]
            self.touches += 1
            if self.kind[p] == FAKE or self.size[p] > size:
                break
            x = p
        if self.size[x] == size:
            self._check_cover(members, x)
            if alpha > self.alpha[x]:
                self.alpha[x] = alpha
                self.heads[x] = tuple(sorted(heads))
            elif alpha == self.alpha[x] and not self.heads[x]:
                self.heads[x] = tuple(sorted(heads))
            return 0
        p = self.parent[x]
        if not self.alpha[p] < alpha:
            raise NestingViolation(
                f"cluster of {size} at alpha={alpha} would nest under node {p} "
                f"formed at alpha={self.alpha[p]}")
        tops = self._check_cover(members, p, strict=True)
        for t in tops:
            if not self.alpha[t] > alpha:
                raise NestingViolation(
                    f"node {t} (alpha={self.alpha[t]}) inside a cluster at alpha={alpha}")
        node = self._new_node(INNER, alpha, sorted(heads), self.comp[p], size, p)
        for t in tops:
            self.parent[t] = node
        self.children[p] -= tops
        self.children[p].add(node)
        self.children[node] = set(tops)
        return 1

    def _check_cover(self, members, anchor, strict=False) -> set[int]:
        """Nodes just below ``anchor`` (or ``anchor`` itself when not strict)
        whose leaf sets exactly tile ``members``."""
        tops: set[int] = set()
        seen: set[int] = set()
        for leaf in members:
            y = leaf
            while True:
                if y in seen:
                    break
                seen.add(y)
                p = self.parent[y]
                if (not strict and y == anchor) or (strict and p == anchor):
                    tops.add(y)
                    break
                if p < 0 or self.kind[p] == FAKE:
                    raise NestingViolation(f"leaf {leaf} is not under node {anchor}")
                y = p
        if sum(self.size[t] for t in tops) != len(members):
            raise NestingViolation(
                f"cluster of {len(members)} straddles existing clusters below node {anchor}")
        return tops

    # -- canonical form ----------------------------------------------------

    def min_labels(self) -> dict[int, str]:
        out = {}
        for v in self.postorder():
            out[v] = self.labels[v] if v < self.n_leaves else min(out[c] for c in self.children[v])
        return out

    def ordered_children(self, v, min_label=None) -> list[int]:
        """Children by descending leaf count, ties by smallest leaf label."""
        ml = min_label if min_label is not None else self.min_labels()
        return sorted(self.children[v], key=lambda c: (-self.size[c], ml[c], c))

    def ordered_roots(self, min_label=None) -> list[int]:
        ml = min_label if min_label is not None else self.min_labels()
        return sorted(self.roots(), key=lambda c: (-self.size[c], ml[c], c))

    def preorder(self, min_label=None) -> list[tuple[int, int]]:
        """``(node, depth)`` pairs in deterministic pre-order."""
        ml = min_label if min_label is not None else self.min_labels()
        out = []
        stack = [(r, 0) for r in reversed(self.ordered_roots(ml))]
        while stack:
            v, d = stack.pop()
            out.append((v, d))
            if v >= self.n_leaves:
                stack.extend((c, d + 1) for c in reversed(self.ordered_children(v, ml)))
        return out

    def canonical(self) -> "ClusterTree":
        """Copy with inner nodes renumbered in deterministic pre-order."""
        ml = self.min_labels()
        order = [v for v, _ in self.preorder(ml) if v >= self.n_leaves]
        first = self.n_leaves + self.n_components
        remap = {v: v for v in range(first)}
        for i, v in enumerate(order):
            remap[v] = first + i
        out = ClusterTree.__new__(ClusterTree)
        out.labels = list(self.labels)
        out.n_leaves = self.n_leaves
        out.n_components = self.n_components
        out.touches = 0
        total = first + len(order)
        out.parent = [-1] * total
        out.children = [set() for _ in range(total)]
        out.alpha = [0.0] * total
        out.heads = [()] * total
        out.comp = [0] * total
        out.size = [0] * total
        out.kind = [LEAF] * total
        for v, nv in remap.items():
            out.parent[nv] = remap[self.parent[v]] if self.parent[v] >= 0 else -1
            out.children[nv] = {remap[c] for c in self.children[v]}
            out.alpha[nv] = self.alpha[v]
            out.heads[nv] = self.heads[v]
            out.comp[nv] = self.comp[v]
            out.size[nv] = self.size[v]
            out.kind[nv] = self.kind[v]
        out.perfected = {remap[v] for v in self.perfected if v in remap}
        return out

    def signature(self) -> frozenset:
        """Order-free description: one entry per real inner node."""
        return frozenset(
            (frozenset(self.leaves_under(v)), self.alpha[v], self.kind[v], self.heads[v])
            for v in self.real_nodes() if v >= self.n_leaves)

    def validate(self):
        for v in range(len(self)):
            p = self.parent[v]
            if self.kind[v] == FAKE:
                if p != -1:
                    raise AssertionError("fake root with a parent")
                continue
            if p < 0 or v not in self.children[p]:
                raise AssertionError(f"node {v} is detached")
            if not self.alpha[p] < self.alpha[v]:
                raise AssertionError(f"alpha not increasing from {p} to {v}")
            if v >= self.n_leaves:
                if self.size[v] != sum(self.size[c] for c in self.children[v]):
                    raise AssertionError(f"size mismatch at {v}")
        if sorted(self.leaves_under_all()) != list(range(self.n_leaves)):
            raise AssertionError("leaf set changed")

    def leaves_under_all(self) -> list[int]:
        out = []
        for r in self.roots():
            out.extend(self.leaves_under(r))
        return out

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for v in range(self.n_leaves, len(self)):
            if self.kind[v] == FAKE:
                continue
            nodes.append({
                "id": v, "parent": self.parent[v], "kind": self.kind[v],
                "alpha": self.alpha[v], "heads": list(self.heads[v]),
            })
        comps: list[list[int]] = [[] for _ in range(self.n_components)]
        for v in range(self.n_leaves):
            comps[self.comp[v]].append(v)
        return {
            "format": TREE_FORMAT, "version": TREE_VERSION,
            "labels": self.labels, "components": comps,
            "leaf_parents": self.parent[: self.n_leaves],
            "nodes": nodes, "perfected": sorted(self.perfected),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterTree":
        if d.get("format") != TREE_FORMAT:
            raise ValueError(f"not a cluster tree document (format {d.get('format')!r})")
        if d.get("version") != TREE_VERSION:
            raise ValueError(f"unsupported cluster tree version {d.get('version')!r}")
        tree = cls(d["labels"], d["components"])
        for v in tree.roots():
            tree.children[tree.parent[v]].discard(v)
        for nd in sorted(d["nodes"], key=lambda nd: nd["id"]):
            if nd["id"] != len(tree):
                raise ValueError("node ids must be dense")
            tree._new_node(nd["kind"], float(nd["alpha"]), nd["heads"], -1, 0, nd["parent"])
        for v, p in enumerate(d["leaf_parents"]):
            tree.parent[v] = p
        for v in range(len(tree)):
            p = tree.parent[v]
            if p >= 0:
                tree.children[p].add(v)
        for v in tree.postorder():
            if v >= tree.n_leaves:
                kids = tree.children[v]
                tree.size[v] = sum(tree.size[c] for c in kids)
                tree.comp[v] = tree.comp[next(iter(kids))]
        tree.perfected = set(d.get("perfected", []))
        return tree

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ClusterTree":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
