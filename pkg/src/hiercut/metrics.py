"""Per-package ubiquity statistics over a cluster tree.

Labels are split into tokens on ``.`` and ``$``; every token-wise prefix of a
label (excluding the full label) is a candidate package.  At each inner node,
a prefix present in ``c`` of the node's children scores ``c - 1`` match
events: that many groups of its classes first meet there.  Each event adds
the node's depth, height and subtree node count to the prefix's averages.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

from .tree import ClusterTree

_SPLIT = re.compile(r"[.$]")


@dataclass
class PrefixStats:
    prefix: str
    suffix_count: int
    avgMH: float
    avgMD: float
    avgNU: float
    rank: int = 0


def label_prefixes(label: str) -> list[str]:
    """Proper token-wise prefixes, shortest first, joined back with the
    original separators."""
    out = []
    for m in _SPLIT.finditer(label):
        if m.start() > 0:
            out.append(label[: m.start()])
    return out


def _subtree_counts(t: ClusterTree) -> dict[int, int]:
    nu = {}
    for v in t.postorder():
        nu[v] = 1 + sum(nu[c] for c in t.children[v])
    return nu


def ubiquity_stats(tree: ClusterTree) -> list[PrefixStats]:
    t = tree
    heights = t.heights()
    nu = _subtree_counts(t)
    prefixes_of = {v: set(label_prefixes(t.labels[v])) for v in range(t.n_leaves)}
    suffixes: dict[str, int] = defaultdict(int)
    for ps in prefixes_of.values():
        for p in ps:
            suffixes[p] += 1
    present: dict[int, set[str]] = {}
    acc: dict[str, list[float]] = defaultdict(lambda: [0, 0.0, 0.0, 0.0])
    depth = {}
    for v, d in t.preorder():
        depth[v] = d
    for v in t.postorder():
        if v < t.n_leaves:
            present[v] = prefixes_of[v]
            continue
        seen: dict[str, int] = defaultdict(int)
        for c in t.children[v]:
            for p in present[c]:
                seen[p] += 1
        for p, c in seen.items():
            if c > 1:
                a = acc[p]
                a[0] += c - 1
                a[1] += (c - 1) * heights[v]
                a[2] += (c - 1) * depth[v]
                a[3] += (c - 1) * nu[v]
        present[v] = set(seen)
        for c in t.children[v]:
            if c >= t.n_leaves:
                del present[c]
    stats = [PrefixStats(p, suffixes[p], a[1] / a[0], a[2] / a[0], a[3] / a[0])
             for p, a in acc.items() if a[0] > 0]
    return rank_stats(stats)


def _sign(x):
    return (x > 0) - (x < 0)


def rank_stats(stats: list[PrefixStats]) -> list[PrefixStats]:
    """Pairwise ranking: on each dimension a prefix loses a point (rank +1)
    to every other prefix that is more ubiquitous and gains one (rank -1)
    against every less ubiquitous one.  More ubiquitous means higher match
    height, lower match depth, larger subtree.  Lowest rank first, ties by
    prefix."""
    for s in stats:
        r = 0
        for o in stats:
            if o is s:
                continue
            r += _sign(o.avgMH - s.avgMH) + _sign(s.avgMD - o.avgMD) + _sign(o.avgNU - s.avgNU)
        s.rank = r
    return sorted(stats, key=lambda s: (s.rank, s.prefix))


def stats_tsv(stats: list[PrefixStats]) -> str:
    lines = ["rank\tavgMH\tavgMD\tavgNU\t!Suff.!\tPrefix"]
    for s in stats:
        lines.append(f"{s.rank}\t{s.avgMH:#.6g}\t{s.avgMD:#.6g}\t{s.avgNU:#.6g}\t"
                     f"{s.suffix_count}\t{s.prefix}")
    return "\n".join(lines) + "\n"


def stats_xml(stats: list[PrefixStats]) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', f"<packageStats count=\"{len(stats)}\">"]
    for s in stats:
        lines.append(f"  <package prefix={quoteattr(s.prefix)} rank=\"{s.rank}\" "
                     f"avgMH=\"{s.avgMH:#.6g}\" avgMD=\"{s.avgMD:#.6g}\" avgNU=\"{s.avgNU:#.6g}\" "
                     f"suffixCount=\"{s.suffix_count}\" />")
    lines.append("</packageStats>")
    return "\n".join(lines) + "\n"
