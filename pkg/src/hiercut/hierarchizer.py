"""Alpha search: probe cut clusterings at chosen alphas and merge them into
one cluster tree.

Each connected component gets an alpha bracket ``[alpha_min, alpha_max]``
(few clusters at the low end, almost all singletons at the high end).  The
bracket is the root of a search tree of alpha intervals; the most promising
leaf interval is split at its midpoint, probed, and its children are
enqueued unless the cluster count does not change across them.  Probes run
on a thread pool (the flow kernel releases the GIL); results are merged on
the coordinating thread only, so the queue and the tree never need locks.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import os
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import asdict, dataclass

from .cut_clustering import Partition, basic_cut_cluster, choose_scale, pass_order
from .normalizer import UndirectedGraph
from .relation_graph import components
from .tree import ClusterTree

log = logging.getLogger(__name__)

MIN_WIDTH = 1e-12
MAX_BRACKET_STEPS = 64

STATE_FORMAT = "hiercut-search-state"
STATE_VERSION = 1


class SearchError(RuntimeError):
    pass


def priority(a_l, a_m, a_r, k_l, k_m, k_r) -> float:
    """Priority of the left child ``[a_l, a_m]`` of a split interval."""
    return _child_priority(a_l, a_m, k_m - k_l, min(k_m - k_l, k_r - k_m))


def _child_priority(lo, hi, dk, balance) -> float:
    if dk <= 0 or not hi > lo:
        return -math.inf
    return math.log(dk * dk) + math.log(hi - lo) + balance + 1.0 / math.sqrt((lo + hi) / 2)


@dataclass
class Interval:
    comp: int
    a_l: float
    a_r: float
    k_l: int
    k_r: int
    priority: float


@dataclass
class _Active:
    node: Interval
    points: list[float]
    ks: list[int | None]
    outstanding: int


class AlphaSearch:
    """Search state: per-component graphs, the probe queue and the tree."""

    def __init__(self, g: UndirectedGraph, fanout=2, min_target_k=1, max_target_frac=0.9):
        if fanout < 2:
            raise ValueError("fan-out must be at least 2")
        self.g = g
        self.fanout = int(fanout)
        self.min_target_k = int(min_target_k)
        self.max_target_frac = float(max_target_frac)
        self.comps = components(g)
        self.sub = [g.subgraph(c) for c in self.comps]
        self.orders = [pass_order(s) for s in self.sub]
        # one scale per component for every probe keeps rounding consistent
        # across alphas, so integer nesting holds exactly
        self.scales = [choose_scale(s, 4.0 * max(float(s.adjacent_weight().max(initial=0.0)), 1.0))
                       for s in self.sub]
        self.tree = ClusterTree(g.labels, self.comps)
        self.brackets: dict[int, tuple[float, float]] = {}
        self.queue: list[tuple[float, int, Interval]] = []
        self._seq = 0
        self.active: dict[int, _Active] = {}
        self.kmemo: dict[tuple[int, float], int] = {}
        self.probes = 0
        self.midpoint_probes = 0
        self.flow_calls = 0
        self.remarks = 0
        self.initialized = False
        self._bracket_parts: list[tuple[int, Partition]] = []
        self.probe_fn = self._probe

    # -- probes --------------------------------------------------------------

    def _probe(self, comp: int, alpha: float) -> Partition:
        return basic_cut_cluster(self.sub[comp], alpha, self.orders[comp], self.scales[comp])

    def _absorb(self, comp: int, part: Partition):
        """Record and merge one probe result (coordinator thread only)."""
        self.probes += 1
        self.flow_calls += part.flow_calls
        self.remarks += part.remarks
        self.kmemo[(comp, part.alpha)] = part.k
        self.tree.merge_partition(part, self.comps[comp])

    def _probe_now(self, comp, alpha, pending):
        key = (comp, alpha)
        if key not in self.kmemo:
            part = self.probe_fn(comp, alpha)
            self.kmemo[key] = part.k
            pending.append((comp, part))
        return self.kmemo[key]

    # -- initialization ------------------------------------------------------

    def bracket(self, comp: int, pending: list) -> tuple[float, float] | None:
        n = len(self.comps[comp])
        if n < 2:
            return None
        lo_target = min(self.min_target_k, n - 1)
        hi_target = math.ceil(self.max_target_frac * n)
        a_min = 1.0
        steps = 0
        while self._probe_now(comp, a_min, pending) > lo_target:
            a_min /= 2
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise SearchError(f"component {comp}: no alpha with at most {lo_target} clusters")
        a_max = max(a_min, 1.0)
        steps = 0
        while self._probe_now(comp, a_max, pending) < hi_target:
            a_max *= 2
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise SearchError(f"component {comp}: no alpha with at least {hi_target} clusters")
        return a_min, a_max

    def init(self):
        """Bracket every component; returns the root intervals."""
        roots = []
        pending: list[tuple[int, Partition]] = []
        for c in range(len(self.comps)):
            br = self.bracket(c, pending)
            if br is None:
                continue
            self.brackets[c] = br
            a_l, a_r = br
            k_l, k_r = self.kmemo[(c, a_l)], self.kmemo[(c, a_r)]
            dk = k_r - k_l
            node = Interval(c, a_l, a_r, k_l, k_r, _child_priority(a_l, a_r, dk, dk))
            if dk > 0 and a_r - a_l >= MIN_WIDTH:
                roots.append(node)
        self._bracket_parts = pending
        self.initialized = True
        return roots

    def _push(self, node: Interval):
        heapq.heappush(self.queue, (-node.priority, self._seq, node))
        self._seq += 1

    # -- main loop -----------------------------------------------------------

    def _split(self, node: Interval) -> _Active:
        f = self.fanout
        w = node.a_r - node.a_l
        points = [node.a_l + w * i / f for i in range(1, f)]
        return _Active(node, points, [None] * len(points), len(points))

    def _children(self, act: _Active) -> list[Interval]:
        node = act.node
        bounds = [node.a_l] + act.points + [node.a_r]
        ks = [node.k_l] + act.ks + [node.k_r]
        dks = [ks[i + 1] - ks[i] for i in range(len(ks) - 1)]
        if min(dks) < 0:
            raise SearchError(
                f"cluster count decreased inside [{node.a_l}, {node.a_r}]: {ks}")
        balance = min(dks)
        out = []
        for i, dk in enumerate(dks):
            lo, hi = bounds[i], bounds[i + 1]
            if dk > 0 and hi - lo >= MIN_WIDTH:
                out.append(Interval(node.comp, lo, hi, ks[i], ks[i + 1],
                                    _child_priority(lo, hi, dk, balance)))
        return out

    def run(self, budget=None, time_limit=None, workers=1, snapshot_path=None,
            snapshot_secs=None, stop_file=None) -> ClusterTree:
        """Probe until the budget (midpoint probes), the time limit or the
        queue runs out, or ``stop_file`` appears."""
        if budget is not None and budget < 0:
            raise ValueError("budget must be nonnegative")
        if budget == 0:
            return self.tree
        if not self.initialized:
            for node in self.init():
                self._push(node)
        for comp, part in self._bracket_parts:
            self._absorb(comp, part)
        self._bracket_parts = []
        deadline = None if time_limit is None else time.monotonic() + time_limit
        last_snap = time.monotonic()
        jobs: list[tuple[int, int]] = []  # (active id, point index) not yet dispatched
        retries: dict[tuple[int, int], int] = {}
        inflight = {}
        stopping = False
        with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
            while True:
                if stop_file and os.path.exists(stop_file):
                    if not stopping:
                        log.info("stop file %s found, finishing in-flight probes", stop_file)
                    stopping = True
                if deadline is not None and time.monotonic() >= deadline:
                    stopping = True
                while not stopping and len(inflight) < max(1, workers):
                    if budget is not None and self.midpoint_probes >= budget:
                        break
                    if not jobs:
                        if not self.queue:
                            break
                        _, seq, node = heapq.heappop(self.queue)
                        self.active[seq] = self._split(node)
                        jobs.extend((seq, i) for i in range(len(self.active[seq].points)))
                    aid, i = jobs.pop(0)
                    act = self.active[aid]
                    fut = pool.submit(self.probe_fn, act.node.comp, act.points[i])
                    inflight[fut] = (aid, i)
                    self.midpoint_probes += 1
                if not inflight:
                    break
                done, _ = wait(list(inflight), timeout=1.0, return_when=FIRST_COMPLETED)
                for fut in done:
                    aid, i = inflight.pop(fut)
                    act = self.active[aid]
                    try:
                        part = fut.result()
                    except Exception:
                        if retries.get((aid, i), 0) >= 1:
                            raise
                        retries[(aid, i)] = 1
                        log.warning("probe at alpha=%r failed, retrying once",
                                    act.points[i], exc_info=True)
                        jobs.insert(0, (aid, i))
                        self.midpoint_probes -= 1
                        continue
                    self._absorb(act.node.comp, part)
                    act.ks[i] = part.k
                    act.outstanding -= 1
                    if act.outstanding == 0:
                        del self.active[aid]
                        for child in self._children(act):
                            self._push(child)
                if snapshot_path and snapshot_secs is not None \
                        and time.monotonic() - last_snap >= snapshot_secs:
                    self.snapshot(snapshot_path)
                    last_snap = time.monotonic()
        if snapshot_path:
            self.snapshot(snapshot_path)
        log.info("search finished: %d probes, %d flow calls, %d re-marks, %d queued",
                 self.probes, self.flow_calls, self.remarks, len(self.queue))
        return self.tree

    # -- snapshots -----------------------------------------------------------

    def state(self) -> dict:
        """Resumable state; partly probed intervals go back to the queue."""
        queued = [node for _, _, node in sorted(self.queue)]
        queued.extend(act.node for act in self.active.values())
        return {
            "format": STATE_FORMAT, "version": STATE_VERSION,
            "fanout": self.fanout, "min_target_k": self.min_target_k,
            "max_target_frac": self.max_target_frac,
            "tree": self.tree.to_dict(),
            "brackets": {str(c): list(b) for c, b in self.brackets.items()},
            "queue": [asdict(nd) for nd in queued],
            "counters": {"probes": self.probes, "midpoint_probes": self.midpoint_probes,
                         "flow_calls": self.flow_calls, "remarks": self.remarks},
        }

    def snapshot(self, path):
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.state(), fh)
        os.replace(tmp, path)

    @classmethod
    def from_state(cls, g: UndirectedGraph, state: dict) -> "AlphaSearch":
        if state.get("format") != STATE_FORMAT or state.get("version") != STATE_VERSION:
            raise ValueError("not a search state document")
        s = cls(g, state["fanout"], state["min_target_k"], state["max_target_frac"])
        tree = ClusterTree.from_dict(state["tree"])
        if tree.labels != g.labels:
            raise ValueError("snapshot does not belong to this graph")
        s.tree = tree
        s.brackets = {int(c): tuple(b) for c, b in state["brackets"].items()}
        for nd in state["queue"]:
            s._push(Interval(**nd))
        for key, val in state["counters"].items():
            setattr(s, key, val)
        s.initialized = True
        return s

    @classmethod
    def load(cls, g: UndirectedGraph, path) -> "AlphaSearch":
        with open(path, encoding="utf-8") as fh:
            return cls.from_state(g, json.load(fh))


def init_search(g: UndirectedGraph, alpha_min_target_k=1, alpha_max_target_frac=0.9, fanout=2):
    """Bracket every component; returns ``(root intervals, search)``.  The
    search's tree is still the bare forest of fake roots."""
    search = AlphaSearch(g, fanout, alpha_min_target_k, alpha_max_target_frac)
    roots = search.init()
    for node in roots:
        search._push(node)
    return roots, search


def run_search(g: UndirectedGraph, budget=None, workers=1, time_limit=None, fanout=2,
               **kwargs) -> ClusterTree:
    """Initialize and run a search; ``budget`` counts midpoint probes (the
    bracketing probes are free), ``None`` means until the queue is empty."""
    search = AlphaSearch(g, fanout)
    return search.run(budget=budget, time_limit=time_limit, workers=workers, **kwargs)
