"""Fixed inputs shared by the exporter, search and acceptance tests."""

import random
from pathlib import Path

from hiercut.normalizer import UndirectedGraph
from hiercut.perfectizer import PerfectizeConfig, perfectize
from hiercut.tree import ClusterTree

GOLDEN = Path(__file__).parent / "golden"

LABELS = [
    "com.dem0.app.Main", "com.dem0.app.Config", "com.dem0.ui.Window", "com.dem0.ui.Button",
    "com.dem0.ui.Menu", "com.dem0.ui.Dialog", "org.util.Strings", "org.util.Lists",
    "net.log.Logger", "net.log.Sink$Buffer",
]


def ten_leaf_tree() -> ClusterTree:
    """Two components (8 + 2 leaves); one node with four children is
    perfectized so the output includes a synthetic node."""
    t = ClusterTree(LABELS, [list(range(8)), [8, 9]])
    t.insert_cluster(list(range(8)), 0.125, heads=(0,))
    t.insert_cluster([0, 1], 0.75, heads=(0,))
    t.insert_cluster([2, 3, 4, 5], 0.5, heads=(2,))
    t.insert_cluster([6, 7], 0.625, heads=(6, 7))
    t.insert_cluster([8, 9], 1.5, heads=(8,))
    edges = [(2, 3, 3.0), (3, 4, 2.0), (4, 5, 1.0), (2, 5, 0.5),
             (0, 1, 2.0), (1, 2, 1.0), (6, 7, 1.0), (0, 6, 0.25), (8, 9, 1.0)]
    g = UndirectedGraph.from_pairs(10, *zip(*edges), labels=LABELS)
    return perfectize(t, g, PerfectizeConfig(child_threshold=4))


def two_leaf_tree() -> ClusterTree:
    t = ClusterTree(["a.X", "a.Y"], [[0, 1]])
    t.insert_cluster([0, 1], 0.5, heads=(1,))
    return t


def utility_relations(seed=107):
    """Two 10-class modules with many internal call sites, plus three
    utilities that every class calls once."""
    rnd = random.Random(seed)
    lines = []
    mods = ("alpha", "beta")
    for mod in mods:
        lines += [f"class app.{mod}.C{i}" for i in range(10)]
    lines += [f"class lib.util.U{k}" for k in range(3)]
    for mod in mods:
        for i in range(10):
            for j in range(10):
                if i != j and rnd.random() < 0.9:
                    lines.append(f"arc app.{mod}.C{i} app.{mod}.C{j} CALL {rnd.randint(5, 20)}")
            for k in range(3):
                lines.append(f"arc app.{mod}.C{i} lib.util.U{k} CALL 1")
    lines.append("arc app.alpha.C0 app.beta.C0 CALL 1")
    return "\n".join(lines) + "\n"


def module_split(tree, labels):
    idx = {lab: i for i, lab in enumerate(labels)}
    a = [idx[f"app.alpha.C{i}"] for i in range(10)]
    b = [idx[f"app.beta.C{i}"] for i in range(10)]
    ra, rb, rab = tree.lca(a), tree.lca(b), tree.lca(a + b)
    if ra is None or rb is None or rab is None:
        return None
    separate = not set(tree.leaves_under(ra)) & set(b) and not set(tree.leaves_under(rb)) & set(a)
    above = rab not in (ra, rb) and rab in tree.ancestors(ra) and rab in tree.ancestors(rb)
    return (ra, rb, rab) if separate and above else None
