"""
Clusters of a small graph at several alphas
===========================================

Two triangles joined by one light edge.  Small alpha keeps everything in
one cluster, large alpha splits every vertex off, and in between the
triangles show up on their own.
"""

from hiercut import AlphaSearch, TextStyle, basic_cut_cluster, export_text
from hiercut.normalizer import UndirectedGraph

# vertices 0-2 and 3-5 are triangles, 2-3 is the bridge
g = UndirectedGraph.from_pairs(
    6, [0, 1, 0, 3, 4, 3, 2], [1, 2, 2, 4, 5, 5, 3], [1, 1, 1, 1, 1, 1, 0.2],
    labels=["a.X", "a.Y", "a.Z", "b.X", "b.Y", "b.Z"])

# one probe is one cut clustering at a fixed alpha
for alpha in (0.05, 0.5, 2.0):
    part = basic_cut_cluster(g, alpha)
    print(f"alpha={alpha}: {part.k} clusters {part.clusters} ({part.flow_calls} max flows)")

# the search picks the alphas itself and nests the results into one tree
search = AlphaSearch(g)
tree = search.run()
print(f"\n{search.probes} probes")
print(export_text(tree, TextStyle.BRACKETED))
