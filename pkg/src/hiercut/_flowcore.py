"""Numba kernels for push-relabel maximum flow.

Arcs are stored in CSR order: the arcs leaving vertex ``v`` occupy
``start[v]:start[v + 1]``; ``rev[a]`` is the paired reverse arc of ``a``.
All kernels release the GIL so several solvers can run in threads.
"""

import numpy as np
from numba import njit

_GLOBAL_RELABEL_FREQ = 0.5
_RELABEL_WORK = 12


@njit(cache=True, nogil=True)
def _global_relabel(n, start, head, rev, res, s, t, d, cur, count, excess,
                    afirst, anext, inact, queue):
    # exact distances to t in the residual graph; unreachable vertices get n
    for v in range(n):
        d[v] = n
        cur[v] = start[v]
        inact[v] = False
    for lab in range(n + 1):
        count[lab] = 0
        afirst[lab] = -1
    d[t] = 0
    count[0] = 1
    qh = 0
    qt = 0
    queue[qt] = t
    qt += 1
    while qh < qt:
        w = queue[qh]
        qh += 1
        dw = d[w] + 1
        for a in range(start[w], start[w + 1]):
            v = head[a]
            if d[v] == n and v != s and res[rev[a]] > 0:
                d[v] = dw
                count[dw] += 1
                queue[qt] = v
                qt += 1
    amax = 0
    for v in range(n):
        if v != s and v != t and excess[v] > 0 and d[v] < n:
            lab = d[v]
            anext[v] = afirst[lab]
            afirst[lab] = v
            inact[v] = True
            if lab > amax:
                amax = lab
    return amax


@njit(cache=True, nogil=True)
def _phase_one(n, start, head, rev, res, s, t, excess, d, cur, count,
               afirst, anext, inact, queue):
    """Highest-label preflow push with gap relabeling and periodic global
    relabeling.  Returns the number of relabel operations."""
    m = start[n]
    for a in range(start[s], start[s + 1]):
        c = res[a]
        if c > 0:
            w = head[a]
            res[a] = 0
            res[rev[a]] += c
            excess[w] += c
            excess[s] -= c
    amax = _global_relabel(n, start, head, rev, res, s, t, d, cur, count,
                           excess, afirst, anext, inact, queue)
    threshold = _GLOBAL_RELABEL_FREQ * (6 * n + m)
    work = 0.0
    relabels = 0
    while amax > 0:
        v = afirst[amax]
        if v == -1:
            amax -= 1
            continue
        afirst[amax] = anext[v]
        inact[v] = False
        if d[v] != amax or excess[v] == 0:
            continue
        # discharge v
        while excess[v] > 0:
            dv = d[v]
            end = start[v + 1]
            a = cur[v]
            while a < end:
                if res[a] > 0:
                    w = head[a]
                    if d[w] == dv - 1:
                        delta = excess[v]
                        if res[a] < delta:
                            delta = res[a]
                        res[a] -= delta
                        res[rev[a]] += delta
                        excess[v] -= delta
                        excess[w] += delta
                        if w != t and not inact[w]:
                            lab = d[w]
                            anext[w] = afirst[lab]
                            afirst[lab] = w
                            inact[w] = True
                        if excess[v] == 0:
                            break
                a += 1
            cur[v] = a
            if excess[v] == 0:
                break
            # relabel
            relabels += 1
            old = dv
            count[old] -= 1
            if count[old] == 0:
                # gap: nothing above `old` can reach t any more
                for u in range(n):
                    if old < d[u] < n:
                        count[d[u]] -= 1
                        d[u] = n
                d[v] = n
                break
            newd = n
            newcur = start[v]
            for b in range(start[v], end):
                if res[b] > 0:
                    cand = d[head[b]] + 1
                    if cand < newd:
                        newd = cand
                        newcur = b
            work += _RELABEL_WORK + (end - start[v])
            if newd >= n:
                d[v] = n
                break
            d[v] = newd
            count[newd] += 1
            cur[v] = newcur
            if newd > amax:
                amax = newd
        if work > threshold:
            work = 0.0
            amax = _global_relabel(n, start, head, rev, res, s, t, d, cur,
                                   count, excess, afirst, anext, inact, queue)
    return relabels


@njit(cache=True, nogil=True)
def _phase_two(n, start, head, rev, res, s, t, excess, d, cur, inq, queue):
    """Return stranded excess to the source, turning the preflow into a flow."""
    for v in range(n):
        d[v] = 2 * n
        cur[v] = start[v]
        inq[v] = False
    d[s] = 0
    qh = 0
    qt = 0
    queue[qt] = s
    qt += 1
    while qh < qt:
        w = queue[qh]
        qh += 1
        for a in range(start[w], start[w + 1]):
            v = head[a]
            if d[v] == 2 * n and v != t and res[rev[a]] > 0:
                d[v] = d[w] + 1
                queue[qt] = v
                qt += 1
    # FIFO discharge over a circular queue
    size = 0
    qh = 0
    for v in range(n):
        if v != s and v != t and excess[v] > 0:
            queue[(qh + size) % n] = v
            inq[v] = True
            size += 1
    limit = 4 * n
    while size > 0:
        v = queue[qh]
        qh = (qh + 1) % n
        size -= 1
        inq[v] = False
        while excess[v] > 0:
            end = start[v + 1]
            a = cur[v]
            while a < end:
                if res[a] > 0:
                    w = head[a]
                    if d[w] == d[v] - 1:
                        delta = excess[v]
                        if res[a] < delta:
                            delta = res[a]
                        res[a] -= delta
                        res[rev[a]] += delta
                        excess[v] -= delta
                        excess[w] += delta
                        if w != s and w != t and not inq[w]:
                            queue[(qh + size) % n] = w
                            inq[w] = True
                            size += 1
                        if excess[v] == 0:
                            break
                a += 1
            cur[v] = a
            if excess[v] == 0:
                break
            newd = limit
            newcur = start[v]
            for b in range(start[v], end):
                if res[b] > 0:
                    cand = d[head[b]] + 1
                    if cand < newd:
                        newd = cand
                        newcur = b
            if newd >= limit:
                return False
            d[v] = newd
            cur[v] = newcur
    return True


@njit(cache=True, nogil=True)
def _reachable_from(n, start, head, res, s, mark, queue):
    for v in range(n):
        mark[v] = False
    mark[s] = True
    qh = 0
    qt = 0
    queue[qt] = s
    qt += 1
    while qh < qt:
        w = queue[qh]
        qh += 1
        for a in range(start[w], start[w + 1]):
            if res[a] > 0:
                v = head[a]
                if not mark[v]:
                    mark[v] = True
                    queue[qt] = v
                    qt += 1


@njit(cache=True, nogil=True)
def solve(n, start, head, rev, cap, s, t, res, excess, d, cur, count,
          afirst, anext, flags, queue, side):
    """Compute a maximum s-t flow into ``res`` and the minimal source side
    into ``side``.  Returns ``(value, relabels, ok)``."""
    for a in range(start[n]):
        res[a] = cap[a]
    for v in range(n):
        excess[v] = 0
    relabels = _phase_one(n, start, head, rev, res, s, t, excess, d, cur,
                          count, afirst, anext, flags, queue)
    value = excess[t]
    ok = _phase_two(n, start, head, rev, res, s, t, excess, d, cur, flags,
                    queue)
    _reachable_from(n, start, head, res, s, side, queue)
    return value, relabels, ok


def buffers(n, m):
    return dict(
        res=np.empty(m, dtype=np.int64),
        excess=np.empty(n, dtype=np.int64),
        d=np.empty(n, dtype=np.int64),
        cur=np.empty(n, dtype=np.int64),
        count=np.empty(n + 1, dtype=np.int64),
        afirst=np.empty(n + 1, dtype=np.int64),
        anext=np.empty(n, dtype=np.int64),
        flags=np.empty(n, dtype=np.bool_),
        queue=np.empty(max(n, 1), dtype=np.int64),
        side=np.empty(n, dtype=np.bool_),
    )
