"""
Utility classes and fan-in normalization
========================================

Two modules of ten classes each call three shared utility classes.  Every
class's incoming weight is normalized, so a utility called by everyone
receives no more than a class called by a few peers.  With logarithmic
leverage the modules come out as separate subtrees; without it the three
utilities still tie everything together and the tree stays flat.
"""

import io
import random

from hiercut import AlphaSearch, Leverage, NormalizationConfig, build_clustering_input
from hiercut.relation_graph import merge_relation_kinds, parse_relations

rnd = random.Random(7)
lines = [f"class app.{m}.C{i}" for m in ("alpha", "beta") for i in range(10)]
lines += [f"class lib.util.U{k}" for k in range(3)]
for m in ("alpha", "beta"):
    for i in range(10):
        for j in range(10):
            if i != j and rnd.random() < 0.9:
                lines.append(f"arc app.{m}.C{i} app.{m}.C{j} CALL {rnd.randint(5, 20)}")
        lines += [f"arc app.{m}.C{i} lib.util.U{k} CALL 1" for k in range(3)]
lines.append("arc app.alpha.C0 app.beta.C0 CALL 1")
rel = merge_relation_kinds(parse_relations(io.StringIO("\n".join(lines))))

for leverage in (Leverage.NONE, Leverage.LOG):
    g = build_clustering_input(rel, NormalizationConfig(leverage))
    search = AlphaSearch(g)
    tree = search.run()
    counts = sorted(set(search.kmemo.values()))
    print(f"leverage={leverage.value}: cluster counts seen {counts}")
    # the clusters just above the leaves, by alpha
    for v in sorted(tree.real_nodes(), key=lambda v: tree.alpha[v]):
        if v >= tree.n_leaves:
            names = sorted({g.labels[x].rsplit(".", 1)[0] for x in tree.leaves_under(v)})
            print(f"  alpha {tree.alpha[v]:.4f}: {len(tree.leaves_under(v))} classes from {names}")
