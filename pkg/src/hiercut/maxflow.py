"""Integer-capacity maximum flow / minimum s-t cut on undirected networks.

The solver is a push-relabel implementation (highest-label selection, gap
relabeling, periodic global relabeling) followed by a second phase that
returns stranded excess to the source, so the final assignment is a valid
flow.  The reported source side is the set of vertices reachable from the
source in the final residual graph, i.e. the smallest source side among all
minimum cuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _flowcore

#: Upper bound on the total capacity incident to any non-sink vertex.
HEADROOM = 2 ** 62


class CapacityOverflowError(ArithmeticError):
    """Capacities exceed the headroom reserved for excess accumulation."""


class DimacsFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FlowNetwork:
    """Residual-arc network in CSR layout.

    Every arc ``a`` has a paired reverse arc ``rev[a]``.  An undirected edge
    of capacity ``c`` is the pair (u->v: c, v->u: c), so ``c`` units may cross
    in either direction.
    """

    n: int
    start: np.ndarray
    head: np.ndarray
    rev: np.ndarray
    cap: np.ndarray
    source: int = 0
    sink: int = 1

    @property
    def m(self) -> int:
        return int(self.start[-1])

    @classmethod
    def from_arcs(cls, n, tails, heads, caps, back_caps=None, source=0, sink=1):
        """Build from arc pairs; ``back_caps`` gives the reverse capacity
        (defaults to 0, i.e. directed arcs)."""
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        caps = np.asarray(caps, dtype=np.int64)
        back = np.zeros_like(caps) if back_caps is None else np.asarray(back_caps, dtype=np.int64)
        if len(tails) and (tails.min() < 0 or heads.min() < 0 or max(tails.max(), heads.max()) >= n):
            raise ValueError("arc endpoint out of range")
        if (caps < 0).any() or (back < 0).any():
            raise ValueError("negative capacity")
        if len(caps) and max(caps.max(), back.max()) >= HEADROOM:
            raise CapacityOverflowError("single arc capacity exceeds 2^62")
        e = len(tails)
        all_tails = np.concatenate([tails, heads])
        all_heads = np.concatenate([heads, tails])
        all_caps = np.concatenate([caps, back])
        order = np.argsort(all_tails, kind="stable")
        pos = np.empty(2 * e, dtype=np.int64)
        pos[order] = np.arange(2 * e, dtype=np.int64)
        rev = np.empty(2 * e, dtype=np.int64)
        rev[pos[:e]] = pos[e:]
        rev[pos[e:]] = pos[:e]
        start = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(all_tails, minlength=n), out=start[1:])
        return cls(n, start, all_heads[order].copy(), rev, all_caps[order].copy(), source, sink)

    @classmethod
    def undirected(cls, n, edges, source=0, sink=1):
        """``edges`` is an iterable of ``(u, v, capacity)``."""
        edges = list(edges)
        if not edges:
            return cls.from_arcs(n, [], [], [], [], source, sink)
        u, v, c = (np.array(col) for col in zip(*edges))
        return cls.from_arcs(n, u, v, c, c, source, sink)

    def vertex_capacity(self) -> np.ndarray:
        """Total capacity of the arcs leaving each vertex."""
        sums = np.zeros(self.n, dtype=object)
        tails = np.repeat(np.arange(self.n), np.diff(self.start))
        # exact sums: object dtype avoids silent int64 wraparound
        np.add.at(sums, tails, self.cap.astype(object))
        return sums

    def with_terminals(self, source, sink) -> "FlowNetwork":
        return FlowNetwork(self.n, self.start, self.head, self.rev, self.cap, source, sink)


class MinCut(NamedTuple):
    value: int
    source_side: frozenset


class PushRelabel:
    """Reusable solver bound to one network.  Not thread-safe: give each
    worker its own instance."""

    def __init__(self, net: FlowNetwork):
        self.net = net
        self._buf = _flowcore.buffers(net.n, net.m)
        sums = net.vertex_capacity()
        order = np.argsort(-sums.astype(float), kind="stable")
        self._heavy = [(int(v), int(sums[v])) for v in order[:2]]
        self.calls = 0
        self.relabels = 0
        self.value = None

    def _check_headroom(self, s, t):
        for v, total in self._heavy:
            if v != t and total > HEADROOM:
                raise CapacityOverflowError(
                    f"vertex {v} has incident capacity {total} > 2^62")

    def run(self, s: int, t: int):
        """Solve for terminals ``(s, t)``; returns ``(value, side_mask)``.

        ``side_mask`` is a view into an internal buffer, overwritten by the
        next call.
        """
        net = self.net
        if s == t:
            raise ValueError("source and sink must differ")
        if not (0 <= s < net.n and 0 <= t < net.n):
            raise ValueError("terminal out of range")
        self._check_headroom(s, t)
        b = self._buf
        value, relabels, ok = _flowcore.solve(
            net.n, net.start, net.head, net.rev, net.cap, s, t,
            b["res"], b["excess"], b["d"], b["cur"], b["count"],
            b["afirst"], b["anext"], b["flags"], b["queue"], b["side"])
        if not ok:
            raise RuntimeError("excess return phase failed to converge")
        self.calls += 1
        self.relabels += int(relabels)
        self.value = int(value)
        return int(value), b["side"]

    def flow(self) -> np.ndarray:
        """Per-arc flow of the last solve (negative on the reverse arc)."""
        return self.net.cap - self._buf["res"]


def max_flow(net: FlowNetwork) -> MinCut:
    value, side = PushRelabel(net).run(net.source, net.sink)
    return MinCut(value, frozenset(np.flatnonzero(side).tolist()))


def min_cut_between(net: FlowNetwork, s: int, t: int) -> MinCut:
    return max_flow(net.with_terminals(s, t))


def cut_capacity(net: FlowNetwork, side) -> int:
    """Capacity of arcs leaving the vertex set ``side``."""
    mask = np.zeros(net.n, dtype=bool)
    mask[list(side)] = True
    tails = np.repeat(np.arange(net.n), np.diff(net.start))
    crossing = mask[tails] & ~mask[net.head]
    return int(net.cap[crossing].astype(object).sum())


# -- DIMACS max-flow format ------------------------------------------------

def write_dimacs(net: FlowNetwork, fh, comment=None):
    """Write ``net`` as a DIMACS ``max`` problem (1-based vertex ids).

    Each arc pair with positive forward capacity becomes one ``a`` line, so an
    undirected edge appears as two opposite arcs.
    """
    tails = np.repeat(np.arange(net.n), np.diff(net.start))
    keep = net.cap > 0
    if comment:
        for line in str(comment).splitlines():
            fh.write(f"c {line}\n")
    fh.write(f"p max {net.n} {int(keep.sum())}\n")
    fh.write(f"n {net.source + 1} s\n")
    fh.write(f"n {net.sink + 1} t\n")
    for u, v, c in zip(tails[keep], net.head[keep], net.cap[keep]):
        fh.write(f"a {u + 1} {v + 1} {c}\n")


def read_dimacs(fh) -> FlowNetwork:
    n = None
    source = sink = None
    arcs = {}
    for lineno, raw in enumerate(fh, 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        try:
            if parts[0] == "p":
                if len(parts) != 4 or parts[1] != "max":
                    raise DimacsFormatError(f"line {lineno}: expected 'p max <n> <m>'")
                n = int(parts[2])
            elif parts[0] == "n":
                vid, kind = int(parts[1]) - 1, parts[2]
                if kind == "s":
                    source = vid
                elif kind == "t":
                    sink = vid
                else:
                    raise DimacsFormatError(f"line {lineno}: bad node designator {kind!r}")
            elif parts[0] == "a":
                if n is None:
                    raise DimacsFormatError(f"line {lineno}: arc before problem line")
                u, v, c = int(parts[1]) - 1, int(parts[2]) - 1, int(parts[3])
                if u == v:
                    continue
                key = (min(u, v), max(u, v))
                fwd, back = arcs.get(key, (0, 0))
                if u < v:
                    fwd += c
                else:
                    back += c
                arcs[key] = (fwd, back)
            else:
                raise DimacsFormatError(f"line {lineno}: unknown line type {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, DimacsFormatError):
                raise
            raise DimacsFormatError(f"line {lineno}: {exc}") from exc
    if n is None or source is None or sink is None:
        raise DimacsFormatError("missing problem line or terminal designators")
    if arcs:
        keys = sorted(arcs)
        u = [k[0] for k in keys]
        v = [k[1] for k in keys]
        fwd = [arcs[k][0] for k in keys]
        back = [arcs[k][1] for k in keys]
    else:
        u = v = fwd = back = []
    return FlowNetwork.from_arcs(n, u, v, fwd, back, source, sink)
