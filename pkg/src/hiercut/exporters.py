"""Text and XML renderings of a cluster tree.

Every export first renumbers the tree canonically, so the output depends only
on the tree's content.  Children are listed by descending leaf count, ties
by smallest leaf label.  Fake roots are never written.
"""

from __future__ import annotations

import enum
import math
from xml.sax.saxutils import escape, quoteattr

from .perfectizer import SYNTHETIC_ALPHA_EXPORT
from .tree import FAKE, SYNTH, ClusterTree


class TextStyle(enum.Enum):
    DEPTH_INDENT = "depth"
    HEIGHT_INDENT = "height"
    BRACKETED = "bracketed"


def format_alpha(x: float) -> str:
    """17 significant digits, zero-padded to 20 decimals (the dump style of
    the original tool, e.g. ``0.43857382202148437000``)."""
    s = f"{x:.17g}"
    if "e" in s:
        return f"{x:.20f}"
    whole, _, frac = s.partition(".")
    return f"{whole}.{frac.ljust(20, '0')}"


def _alpha_text(t: ClusterTree, v) -> str:
    if t.kind[v] == SYNTH:
        return format_alpha(SYNTHETIC_ALPHA_EXPORT)
    if math.isinf(t.alpha[v]):
        return "VeryBig"
    return format_alpha(t.alpha[v])


def _export_heads(t: ClusterTree, v) -> list[int]:
    """Heads of ``v`` as the ids of the children containing them."""
    if v < t.n_leaves or not t.heads[v]:
        return []
    out = set()
    for h in t.heads[v]:
        x = h
        while t.parent[x] != v:
            x = t.parent[x]
            if x < 0:
                break
        if x >= 0:
            out.add(x)
    return sorted(out)


def _record(t: ClusterTree, v) -> str:
    heads = _export_heads(t, v)
    tail = f" {' '.join(map(str, heads))}" if heads else ""
    return (f"{v} {len(t.children[v])} {t.comp[v]} {_alpha_text(t, v)} ; "
            f"{len(heads)} heads{tail}")


def _note(t: ClusterTree, v, depth) -> str:
    if v < t.n_leaves:
        return t.labels[v]
    anc = t.ancestors(v)
    return f"Level {depth} cluster under {','.join(map(str, anc))}" if anc else f"Level {depth} cluster"


def export_text(tree: ClusterTree, style=TextStyle.DEPTH_INDENT) -> str:
    style = TextStyle(style)
    t = tree.canonical()
    ml = t.min_labels()
    heights = t.heights()
    lines = []
    if style is TextStyle.BRACKETED:
        stack = [(r, 0, False) for r in reversed(t.ordered_roots(ml))]
        while stack:
            v, d, closing = stack.pop()
            pad = "  " * d
            if v < t.n_leaves:
                lines.append(f"{pad}{d} {v} \"{t.labels[v]}\"")
                continue
            if closing:
                lines.append(f"{pad}h{heights[v]}{v}>")
                continue
            parent = "-" if t.kind[t.parent[v]] == FAKE else t.parent[v]
            lines.append(f"{pad}p{parent} <{v}h{heights[v]} {_alpha_text(t, v)}")
            stack.append((v, d, True))
            stack.extend((c, d + 1, False) for c in reversed(t.ordered_children(v, ml)))
        return "\n".join(lines) + ("\n" if lines else "")
    for v, d in t.preorder(ml):
        pad = "  " * (d if style is TextStyle.DEPTH_INDENT else heights[v])
        lines.append(pad + _record(t, v))
        lines.append(pad + _note(t, v, d))
    return "\n".join(lines) + ("\n" if lines else "")


def _xml_walk(t, ml, write_node):
    """Depth-first element emission with explicit open/close events."""
    out = []
    stack = [(r, 1, False) for r in reversed(t.ordered_roots(ml))]
    while stack:
        v, d, closing = stack.pop()
        pad = "  " * d
        if closing:
            out.append(f"{pad}</{write_node(v, None)}>")
            continue
        if v < t.n_leaves:
            out.append(pad + write_node(v, True))
            continue
        out.append(pad + write_node(v, False))
        stack.append((v, d, True))
        stack.extend((c, d + 1, False) for c in reversed(t.ordered_children(v, ml)))
    return out


def export_xml(tree: ClusterTree) -> str:
    t = tree.canonical()
    ml = t.min_labels()
    inner = sum(1 for v in t.real_nodes() if v >= t.n_leaves)

    def node(v, leaf):
        if leaf is None:
            return "node"
        if leaf:
            return f"<node id=\"{v}\" label={quoteattr(t.labels[v])} djComp=\"{t.comp[v]}\" />"
        heads = ", ".join(map(str, _export_heads(t, v)))
        return (f"<node id=\"{v}\" childCount=\"{len(t.children[v])}\" alb=\"{_alpha_text(t, v)}\" "
                f"heads=\"{heads}\" djComp=\"{t.comp[v]}\">")

    head = (f"<clusterTree vertexCount=\"{t.n_leaves}\" nodeCount=\"{t.n_leaves + inner}\" "
            f"rootCount=\"{len(t.roots())}\" disjointCount=\"{t.n_components}\">")
    body = _xml_walk(t, ml, node)
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head, *body, "</clusterTree>"]) + "\n"


def _is_client(label, prefixes) -> bool:
    return any(label.startswith(p) for p in prefixes)


def export_treeviz(tree: ClusterTree, client_prefixes=()) -> str:
    """TreeML document (the XML tree input read by treemap-style viewers).

    A forest gets one extra ``branch`` on top so the document has a single
    root.  Leaves carry ``kind`` = ``client`` or ``library``.
    """
    t = tree.canonical()
    ml = t.min_labels()

    def attrs(v, pad):
        if v < t.n_leaves:
            kind = "client" if _is_client(t.labels[v], client_prefixes) else "library"
            pairs = [("name", t.labels[v]), ("id", str(v)), ("kind", kind)]
        else:
            pairs = [("name", f"cluster {v}"), ("id", str(v)), ("alpha", _alpha_text(t, v)),
                     ("size", str(t.size[v]))]
        return [f"{pad}  <attribute name=\"{k}\" value={quoteattr(val)}/>" for k, val in pairs]

    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<tree>", "  <declarations>"]
    for name, typ in (("name", "String"), ("id", "Int"), ("kind", "String"),
                      ("alpha", "String"), ("size", "Int")):
        lines.append(f"    <attributeDecl name=\"{name}\" type=\"{typ}\"/>")
    lines.append("  </declarations>")
    roots = t.ordered_roots(ml)
    base = 1
    if len(roots) != 1:
        lines += ["  <branch>", "    <attribute name=\"name\" value=\"forest\"/>"]
        base = 2
    stack = [(r, base, False) for r in reversed(roots)]
    while stack:
        v, d, closing = stack.pop()
        pad = "  " * d
        tag = "leaf" if v < t.n_leaves else "branch"
        if closing:
            lines.append(f"{pad}</branch>")
            continue
        lines.append(f"{pad}<{tag}>")
        lines.extend(attrs(v, pad))
        if tag == "leaf":
            lines.append(f"{pad}</leaf>")
        else:
            stack.append((v, d, True))
            stack.extend((c, d + 1, False) for c in reversed(t.ordered_children(v, ml)))
    if base == 2:
        lines.append("  </branch>")
    lines.append("</tree>")
    return "\n".join(lines) + "\n"


def export_h3(tree: ClusterTree, client_prefixes=()) -> str:
    """Level list for hyperbolic viewers: one ``level id kind name`` line per
    node in pre-order under a single virtual root at level 0."""
    t = tree.canonical()
    lines = ["# hiercut lvlist 1", "0 root cluster forest"]
    for v, d in t.preorder():
        if v < t.n_leaves:
            kind = "client" if _is_client(t.labels[v], client_prefixes) else "library"
            name = t.labels[v]
        else:
            kind, name = "cluster", f"cluster_{v}"
        lines.append(f"{d + 1} {v} {kind} {escape(name)}")
    return "\n".join(lines) + "\n"
