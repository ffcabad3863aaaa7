import io
import json
import math
import random
from fractions import Fraction

import pytest

from hiercut.cut_clustering import Partition, basic_cut_cluster
from hiercut.hierarchizer import (AlphaSearch, Interval, SearchError, _Active, init_search,
                                  priority, run_search)
from hiercut.normalizer import Leverage, NormalizationConfig, build_clustering_input
from hiercut.relation_graph import merge_relation_kinds, parse_relations
from fixtures import module_split, utility_relations
from oracles import as_graph, brute_communities, exhaustive_hierarchy, random_connected

BRIDGE = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 0.2)]


def leafsets(tree):
    return {frozenset(tree.leaves_under(v)) for v in tree.real_nodes() if v >= tree.n_leaves}


def canonical_doc(tree):
    return json.dumps(tree.canonical().to_dict(), sort_keys=True)


def test_priority_example():
    assert priority(0.1, 0.2, 0.3, 10, 100, 150) == pytest.approx(59.279, abs=5e-4)


def test_priority_doubling_delta_k():
    base = priority(0.1, 0.2, 0.3, 10, 100, 150)
    doubled = priority(0.1, 0.2, 0.3, 10, 190, 240)
    assert doubled - base == pytest.approx(math.log(4), abs=1e-12)


def test_dead_intervals_suppressed():
    s = AlphaSearch(as_graph(6, BRIDGE))
    node = Interval(0, 0.1, 0.3, 1, 6, 0.0)
    act = _Active(node, [0.2], [1], 0)
    kids = s._children(act)
    assert [(c.a_l, c.a_r) for c in kids] == [(0.2, 0.3)]
    act = _Active(Interval(0, 0.1, 0.1 + 1e-13, 1, 6, 0.0), [0.1 + 5e-14], [3], 0)
    assert s._children(act) == []


def test_bracket_on_triangle_bridge():
    g = as_graph(6, BRIDGE)
    roots, search = init_search(g)
    (root,) = roots
    lo = basic_cut_cluster(g, root.a_l)
    hi = basic_cut_cluster(g, root.a_r)
    assert lo.k == 1 and hi.k == 6
    assert lo.as_sets() == brute_communities(6, BRIDGE, Fraction(root.a_l))
    assert hi.as_sets() == brute_communities(6, BRIDGE, Fraction(root.a_r))


def test_single_vertex_component_not_searched():
    g = as_graph(3, [(0, 1, 1.0)])
    roots, search = init_search(g)
    assert len(roots) == 1 and roots[0].comp == 0
    tree = search.run()
    assert tree.parent[2] == tree.fake_root(1)
    assert 1 not in search.brackets


def test_identical_components_behave_identically():
    edges = [(0, 1, 2), (1, 2, 1), (0, 2, 1), (2, 3, 1)]
    both = edges + [(a + 4, b + 4, w) for a, b, w in edges]
    s = AlphaSearch(as_graph(8, both))
    tree = s.run()
    assert s.brackets[0] == s.brackets[1]
    shift = {frozenset(x + 4 for x in ls) for ls in leafsets(tree) if max(ls) < 4}
    assert shift == {ls for ls in leafsets(tree) if min(ls) >= 4}


def test_budget_zero_returns_bare_forest():
    tree = run_search(as_graph(6, BRIDGE), budget=0)
    assert len(tree) == 7 and leafsets(tree) == set()


def test_budget_counts_midpoint_probes():
    s = AlphaSearch(as_graph(6, BRIDGE))
    s.run(budget=3)
    assert s.midpoint_probes == 3
    assert s.probes == len(s.kmemo)


@pytest.mark.parametrize("seed", range(6))
def test_exhaustive_search_matches_sweep(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 6)
    edges = random_connected(rng, n, extra_p=0.5, wmax=3)
    g = as_graph(n, edges)
    s = AlphaSearch(g, max_target_frac=1.0)
    tree = s.run()
    tree.validate()
    top = max(sum(w for a, b, w in edges if v in (a, b)) for v in range(n)) + 1
    assert leafsets(tree) == exhaustive_hierarchy(n, edges, Fraction(top))


def test_workers_do_not_change_tree():
    rng = random.Random(7)
    edges = random_connected(rng, 14, extra_p=0.3, real=True, wmin=0.2, wmax=3)
    g = as_graph(14, edges)
    docs = {canonical_doc(AlphaSearch(g).run(workers=w)) for w in (1, 4)}
    assert len(docs) == 1


def test_fanout_three_finds_same_clusters():
    rng = random.Random(8)
    edges = random_connected(rng, 9, extra_p=0.4, wmax=4)
    g = as_graph(9, edges)
    assert leafsets(AlphaSearch(g, fanout=3).run()) == leafsets(AlphaSearch(g).run())


def test_probes_nest():
    rng = random.Random(12)
    edges = random_connected(rng, 10, extra_p=0.3, real=True, wmin=0.1, wmax=2)
    g = as_graph(10, edges)
    prev = None
    for alpha in sorted(rng.uniform(0.01, 3) for _ in range(25)):
        cur = basic_cut_cluster(g, alpha)
        if prev is not None:
            for c in cur.as_sets():
                assert any(c <= p for p in prev.as_sets())
        prev = cur


def test_snapshot_and_resume(tmp_path):
    rng = random.Random(2)
    g = as_graph(10, random_connected(rng, 10, extra_p=0.3, wmax=5))
    full = canonical_doc(AlphaSearch(g).run())
    snap = tmp_path / "snap.json"
    first = AlphaSearch(g)
    first.run(budget=4, snapshot_path=snap, snapshot_secs=0)
    assert snap.exists()
    resumed = AlphaSearch.load(g, snap)
    assert resumed.midpoint_probes == 4
    assert canonical_doc(resumed.run()) == full


def test_stop_file_flushes_and_resumes(tmp_path):
    rng = random.Random(4)
    g = as_graph(10, random_connected(rng, 10, extra_p=0.3, wmax=5))
    full = canonical_doc(AlphaSearch(g).run())
    stop = tmp_path / "shutdown.sig"
    snap = tmp_path / "snap.json"
    s = AlphaSearch(g)
    inner = s.probe_fn

    def probe(comp, alpha):
        if s.midpoint_probes >= 3:
            stop.touch()
        return inner(comp, alpha)

    s.probe_fn = probe
    s.run(snapshot_path=snap, stop_file=stop)
    state = json.loads(snap.read_text())
    assert state["queue"], "stopped early, so work must remain"
    stop.unlink()
    assert canonical_doc(AlphaSearch.load(g, snap).run()) == full


def test_failed_probe_retried_once():
    g = as_graph(6, BRIDGE)
    s = AlphaSearch(g)
    for node in s.init():
        s._push(node)
    inner = s.probe_fn
    failed = []

    def flaky(comp, alpha):
        if not failed:
            failed.append(alpha)
            raise RuntimeError("worker crashed")
        return inner(comp, alpha)

    s.probe_fn = flaky
    tree = s.run()
    assert failed
    assert canonical_doc(tree) == canonical_doc(AlphaSearch(g).run())


def test_persistent_failure_surfaces():
    s = AlphaSearch(as_graph(6, BRIDGE))
    for node in s.init():
        s._push(node)

    def broken(comp, alpha):
        raise RuntimeError("worker crashed")

    s.probe_fn = broken
    with pytest.raises(RuntimeError, match="crashed"):
        s.run()


def test_time_limit_stops_early():
    rng = random.Random(5)
    g = as_graph(30, random_connected(rng, 30, extra_p=0.2, real=True, wmin=0.1, wmax=3))
    s = AlphaSearch(g)
    s.run(time_limit=0.0)
    assert s.midpoint_probes == 0


def test_bracket_gives_up_when_k_never_grows():
    s = AlphaSearch(as_graph(2, [(0, 1, 1.0)]))
    # a probe that never splits the component cannot reach the upper target
    s.probe_fn = lambda comp, alpha: Partition(alpha, [[0, 1]], [[0]])
    with pytest.raises(SearchError):
        s.init()


def test_utility_calls_hide_modules_without_leverage():
    # Without leverage every class receives weight 1, so a module's cut to the
    # three utilities (about 1.5) is too close to a single class's adjacent
    # weight (about 2.15): the whole graph wins for alpha < 1.5/13 and the
    # module loses to singletons above 0.65/9, so no alpha yields the modules.
    rel = merge_relation_kinds(parse_relations(io.StringIO(utility_relations())))
    flat = AlphaSearch(build_clustering_input(rel))
    assert module_split(flat.run(), flat.tree.labels) is None
    assert sorted(set(flat.kmemo.values())) == [1, 23]
    lev = AlphaSearch(build_clustering_input(rel, NormalizationConfig(Leverage.LOG)))
    assert module_split(lev.run(), lev.tree.labels) is not None
