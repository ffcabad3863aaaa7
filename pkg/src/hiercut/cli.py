"""Command line: normalize -> cluster -> perfectize -> export / stats.

Each stage reads the previous stage's file and writes its own, so any stage
can be rerun by itself.  ``pipeline`` chains all of them into one directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cut_clustering import BicriterionViolation, run_probe_files
from .exporters import TextStyle, export_h3, export_text, export_treeviz, export_xml
from .hierarchizer import AlphaSearch, SearchError
from .maxflow import DimacsFormatError
from .metrics import stats_tsv, stats_xml, ubiquity_stats
from .normalizer import (LiftOrder, Leverage, NormalizationConfig, build_clustering_input,
                         read_graph, write_graph)
from .perfectizer import (DisconnectedChildGraph, PerfectizeConfig, RootHeuristic,
                          perfectize)
from .relation_graph import RelationFormatError, RelationKind, load_relations, merge_relation_kinds
from .tree import ClusterTree, NestingViolation

log = logging.getLogger("hiercut")

EXIT_MISSING = 3
EXIT_FORMAT = 4
EXIT_ARGUMENT = 5
EXIT_INVARIANT = 6

RUN_FORMAT = "hiercut-run"
EXPORTS = {
    "depth": ("tree_depth.txt", lambda t, a: export_text(t, TextStyle.DEPTH_INDENT)),
    "height": ("tree_height.txt", lambda t, a: export_text(t, TextStyle.HEIGHT_INDENT)),
    "bracketed": ("tree_bracketed.txt", lambda t, a: export_text(t, TextStyle.BRACKETED)),
    "xml": ("tree.xml", lambda t, a: export_xml(t)),
    "treeviz": ("treeviz.xml", lambda t, a: export_treeviz(t, a.client_prefix)),
    "h3": ("tree.lvlist", lambda t, a: export_h3(t, a.client_prefix)),
}


class ArgumentProblem(Exception):
    pass


class InputFormatProblem(Exception):
    pass


def _kind_weight(text):
    name, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KIND=REAL, got {text!r}")
    try:
        kind = RelationKind(name.strip().upper())
        weight = float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad kind weight {text!r}") from None
    if weight < 0:
        raise argparse.ArgumentTypeError("kind weights must be nonnegative")
    return kind, weight


def _positive(name, value):
    if value is not None and value <= 0:
        raise ArgumentProblem(f"--{name} must be positive, got {value}")


def _read(loader, path):
    """Run ``loader(path)``; failures to parse become format problems."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return loader(path)
    except (RelationFormatError, DimacsFormatError, json.JSONDecodeError, KeyError,
            ValueError, TypeError) as exc:
        raise InputFormatProblem(f"{path}: {exc}") from exc


def _load_graph(path):
    def load(p):
        with open(p, encoding="utf-8") as fh:
            return read_graph(fh)
    return _read(load, path)


def _load_tree(path):
    return _read(ClusterTree.load, path)


# -- stages ------------------------------------------------------------------

def stage_normalize(args):
    cfg = NormalizationConfig(Leverage(args.leverage), LiftOrder(args.lift_order), args.log_clamp)
    rel = _read(load_relations, args.input)
    rel = merge_relation_kinds(rel, dict(args.kind_weight or []))
    ug = build_clustering_input(rel, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        write_graph(ug, fh)
    log.info("normalized graph: %d vertices, %d edges -> %s", ug.n, ug.m, out)
    return ug


def _log_to(outdir: Path):
    handler = logging.FileHandler(outdir / "run.log", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger("hiercut").addHandler(handler)
    return handler


def stage_cluster(args):
    _positive("budget", args.budget)
    _positive("workers", args.workers)
    _positive("snapshot-secs", args.snapshot_secs)
    _positive("time-limit", args.time_limit)
    if args.alpha_fanout < 2:
        raise ArgumentProblem("--alpha-fanout must be at least 2")
    if args.resume:
        outdir = Path(args.resume)
        run = _read(lambda p: json.loads(p.read_text(encoding="utf-8")), outdir / "run.json")
        if run.get("format") != RUN_FORMAT:
            raise InputFormatProblem(f"{outdir / 'run.json'}: not a run description")
        g = _load_graph(run["graph"])
        search = _read(lambda p: AlphaSearch.load(g, p), outdir / "snapshot.json")
    else:
        if not args.graph or not args.out:
            raise ArgumentProblem("cluster needs --graph and --out (or --resume DIR)")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        g = _load_graph(args.graph)
        search = AlphaSearch(g, fanout=args.alpha_fanout)
        run = {"format": RUN_FORMAT, "version": 1, "graph": str(Path(args.graph).resolve())}
        (outdir / "run.json").write_text(json.dumps(run), encoding="utf-8")
    handler = _log_to(outdir)
    try:
        stop = Path(args.stop_file or outdir / "shutdown.sig")
        if stop.exists():
            log.info("removing stale stop file %s", stop)
            stop.unlink()
        tree = search.run(budget=args.budget, time_limit=args.time_limit, workers=args.workers,
                          snapshot_path=outdir / "snapshot.json",
                          snapshot_secs=args.snapshot_secs, stop_file=stop)
        tree.canonical().save(outdir / "tree.json")
        log.info("probes=%d flow_calls=%d remarks=%d queued=%d", search.probes,
                 search.flow_calls, search.remarks, len(search.queue))
    finally:
        logging.getLogger("hiercut").removeHandler(handler)
        handler.close()
    return tree


def stage_perfectize(args):
    if args.child_threshold < 3:
        raise ArgumentProblem("--child-threshold must be at least 3")
    tree = _load_tree(args.tree)
    g = _load_graph(args.graph)
    if g.labels != tree.labels:
        raise InputFormatProblem("tree and graph have different vertex labels")
    cfg = PerfectizeConfig(args.child_threshold, RootHeuristic(args.root_heuristic))
    out = perfectize(tree, g, cfg).canonical()
    out.save(args.out)
    return out


def stage_export(args):
    tree = _load_tree(args.tree)
    _, render = EXPORTS[args.format]
    Path(args.out).write_text(render(tree, args), encoding="utf-8")


def stage_stats(args):
    tree = _load_tree(args.tree)
    stats = ubiquity_stats(tree)
    text = stats_xml(stats) if args.xml else stats_tsv(stats)
    Path(args.out).write_text(text, encoding="utf-8")


def stage_pipeline(args):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    graph = outdir / "graph.txt"
    stage_normalize(argparse.Namespace(**{**vars(args), "out": str(graph)}))
    stage_cluster(argparse.Namespace(**{**vars(args), "graph": str(graph), "out": str(outdir),
                                        "resume": None}))
    stage_perfectize(argparse.Namespace(**{**vars(args), "tree": str(outdir / "tree.json"),
                                           "graph": str(graph),
                                           "out": str(outdir / "perfected.json")}))
    for which in ("tree", "perfected"):
        for fmt, (name, _) in EXPORTS.items():
            prefix = "" if which == "tree" else "perfected_"
            stage_export(argparse.Namespace(**{**vars(args), "tree": str(outdir / f"{which}.json"),
                                               "format": fmt, "out": str(outdir / (prefix + name))}))
    stage_stats(argparse.Namespace(tree=str(outdir / "perfected.json"),
                                   out=str(outdir / "stats.tsv"), xml=False))
    stage_stats(argparse.Namespace(tree=str(outdir / "perfected.json"),
                                   out=str(outdir / "stats.xml"), xml=True))


def stage_probe(args):
    run_probe_files(args.network, args.order, args.out, args.alpha)


# -- parser --------------------------------------------------------------------

def _add_normalize_flags(p):
    p.add_argument("--leverage", choices=[m.value for m in Leverage], default="none")
    p.add_argument("--lift-order", choices=[m.value for m in LiftOrder], default="post")
    p.add_argument("--log-clamp", type=float, default=1.0)
    p.add_argument("--kind-weight", type=_kind_weight, action="append", metavar="KIND=REAL")


def _add_cluster_flags(p):
    p.add_argument("--budget", type=int, help="midpoint probes (default: until exhausted)")
    p.add_argument("--time-limit", type=float, help="wall-clock seconds")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--alpha-fanout", type=int, default=2)
    p.add_argument("--snapshot-secs", type=float, default=300.0)
    p.add_argument("--stop-file", help="graceful stop when this file appears "
                                       "(default: OUT/shutdown.sig)")


def _add_perfectize_flags(p):
    p.add_argument("--child-threshold", type=int, default=16)
    p.add_argument("--root-heuristic", choices=[m.value for m in RootHeuristic], default="central")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hiercut", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="relation file -> normalized class graph")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_normalize_flags(p)
    p.set_defaults(func=stage_normalize)

    p = sub.add_parser("cluster", help="alpha search -> cluster tree")
    p.add_argument("--graph")
    p.add_argument("--out", help="output directory")
    p.add_argument("--resume", metavar="DIR", help="continue from DIR/snapshot.json")
    _add_cluster_flags(p)
    p.set_defaults(func=stage_cluster)

    p = sub.add_parser("perfectize", help="re-nest nodes with too many children")
    p.add_argument("--tree", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    _add_perfectize_flags(p)
    p.set_defaults(func=stage_perfectize)

    p = sub.add_parser("export", help="write a tree in a presentation format")
    p.add_argument("--tree", required=True)
    p.add_argument("--format", choices=list(EXPORTS), default="depth")
    p.add_argument("--out", required=True)
    p.add_argument("--client-prefix", action="append", default=[])
    p.set_defaults(func=stage_export)

    p = sub.add_parser("stats", help="per-package ubiquity ranking")
    p.add_argument("--tree", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--xml", action="store_true")
    p.set_defaults(func=stage_stats)

    p = sub.add_parser("pipeline", help="run every stage into one directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--client-prefix", action="append", default=[])
    _add_normalize_flags(p)
    _add_cluster_flags(p)
    _add_perfectize_flags(p)
    p.set_defaults(func=stage_pipeline)

    p = sub.add_parser("probe", help="one cut clustering from network files (debugging)")
    p.add_argument("--network", required=True)
    p.add_argument("--order", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=float("nan"))
    p.set_defaults(func=stage_probe)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("hiercut").setLevel(logging.INFO)
    try:
        args.func(args)
    except FileNotFoundError as exc:
        print(f"hiercut: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except InputFormatProblem as exc:
        print(f"hiercut: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ArgumentProblem as exc:
        print(f"hiercut: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except (NestingViolation, BicriterionViolation, SearchError, DisconnectedChildGraph) as exc:
        print(f"hiercut: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return 0


if __name__ == "__main__":
    sys.exit(main())
