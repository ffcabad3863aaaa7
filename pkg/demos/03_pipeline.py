"""
From a relation file to ranked packages
=======================================

Runs every stage through the command line entry point into a scratch
directory: normalize, search, perfectize, export and package statistics.
"""

import random
import tempfile
from pathlib import Path

from hiercut.cli import main

rnd = random.Random(3)
packages = {"shop.cart": 6, "shop.pay": 5, "shop.ui": 7, "common.text": 2}
classes = [f"{p}.K{i}" for p, n in packages.items() for i in range(n)]
lines = [f"class {c}" for c in classes]
for a in classes:
    for b in classes:
        if a == b:
            continue
        same = a.rsplit(".", 1)[0] == b.rsplit(".", 1)[0]
        if b.startswith("common.") or rnd.random() < (0.7 if same else 0.04):
            lines.append(f"arc {a} {b} CALL {rnd.randint(1, 9)}")

work = Path(tempfile.mkdtemp(prefix="hiercut-demo-"))
(work / "rel.txt").write_text("\n".join(lines) + "\n")
code = main(["pipeline", "--input", str(work / "rel.txt"), "--out", str(work / "out"),
             "--leverage", "log", "--child-threshold", "4", "--client-prefix", "shop."])
print("exit code", code, "outputs in", work / "out")

# indented by depth, then the per-package ranking
print((work / "out" / "perfected_tree_depth.txt").read_text()[:1500])
print((work / "out" / "stats.tsv").read_text())
