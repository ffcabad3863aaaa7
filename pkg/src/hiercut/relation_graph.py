"""Directed heterogeneous relation graph: ingestion, kind merging, components.

Relation file grammar (UTF-8, one statement per line)::

    # comment                       (also allowed after a statement)
    class  <label>
    member <label> of <class-label>
    arc    <src-label> <dst-label> <KIND> <count>

``KIND`` is one of CALL, INHERITANCE, FIELD_ACCESS, TYPE_USAGE, PARAM_RETURN and
``count`` a positive integer.  Labels are whitespace-free.  Declarations may
appear in any order; arcs may only reference declared labels.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class RelationKind(enum.Enum):
    CALL = "CALL"
    INHERITANCE = "INHERITANCE"
    FIELD_ACCESS = "FIELD_ACCESS"
    TYPE_USAGE = "TYPE_USAGE"
    PARAM_RETURN = "PARAM_RETURN"


class Level(enum.Enum):
    CLASS = "class"
    MEMBER = "member"


class RelationFormatError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


@dataclass(frozen=True)
class Artifact:
    index: int
    label: str
    level: Level


@dataclass(frozen=True)
class RelationArc:
    src: int
    dst: int
    kind: RelationKind | None  # None once kinds have been merged
    weight: float


@dataclass
class RelationGraph:
    artifacts: list[Artifact]
    arcs: list[RelationArc]
    membership: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def n(self) -> int:
        return len(self.artifacts)

    @property
    def labels(self) -> list[str]:
        return [a.label for a in self.artifacts]

    def validate(self):
        seen = set()
        for i, a in enumerate(self.artifacts):
            if a.index != i:
                raise ValueError("artifact indices must be dense 0..n-1")
            if a.label in seen:
                raise ValueError(f"duplicate label {a.label!r}")
            seen.add(a.label)
        for a in self.artifacts:
            if a.level is Level.MEMBER:
                owner = self.membership.get(a.index)
                if owner is None:
                    raise ValueError(f"member {a.label!r} has no owning class")
                if self.artifacts[owner].level is not Level.CLASS:
                    raise ValueError(f"member {a.label!r} maps to a non-class")
            elif a.index in self.membership and self.membership[a.index] != a.index:
                raise ValueError(f"class {a.label!r} cannot be a member")

    def owner(self, i: int) -> int:
        return self.membership.get(i, i)

    def class_indices(self) -> list[int]:
        return [a.index for a in self.artifacts if a.level is Level.CLASS]

    def arc_arrays(self):
        """``(src, dst, weight)`` numpy arrays of all arcs."""
        src = np.fromiter((a.src for a in self.arcs), dtype=np.int64, count=len(self.arcs))
        dst = np.fromiter((a.dst for a in self.arcs), dtype=np.int64, count=len(self.arcs))
        w = np.fromiter((a.weight for a in self.arcs), dtype=float, count=len(self.arcs))
        return src, dst, w


def parse_relations(lines) -> RelationGraph:
    classes: list[str] = []
    members: list[tuple[str, str, int]] = []
    raw_arcs: list[tuple[str, str, RelationKind, int, int]] = []
    declared: dict[str, int] = {}

    def declare(label, lineno):
        if label in declared:
            raise RelationFormatError(
                f"duplicate label {label!r} (first declared on line {declared[label]})", lineno)
        declared[label] = lineno

    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0]
        if word == "class":
            if len(parts) != 2:
                raise RelationFormatError("expected 'class <label>'", lineno)
            declare(parts[1], lineno)
            classes.append(parts[1])
        elif word == "member":
            if len(parts) != 4 or parts[2] != "of":
                raise RelationFormatError("expected 'member <label> of <class>'", lineno)
            declare(parts[1], lineno)
            members.append((parts[1], parts[3], lineno))
        elif word == "arc":
            if len(parts) != 5:
                raise RelationFormatError("expected 'arc <src> <dst> <KIND> <count>'", lineno)
            try:
                kind = RelationKind(parts[3])
            except ValueError:
                raise RelationFormatError(f"unknown relation kind {parts[3]!r}", lineno) from None
            try:
                count = int(parts[4])
            except ValueError:
                raise RelationFormatError(f"count must be an integer, got {parts[4]!r}", lineno) from None
            if count < 1:
                raise RelationFormatError("count must be positive", lineno)
            raw_arcs.append((parts[1], parts[2], kind, count, lineno))
        else:
            raise RelationFormatError(f"unknown statement {word!r}", lineno)

    class_set = set(classes)
    artifacts = [Artifact(i, lab, Level.CLASS) for i, lab in enumerate(classes)]
    index = {lab: i for i, lab in enumerate(classes)}
    membership = {}
    for lab, owner, lineno in members:
        if owner not in class_set:
            raise RelationFormatError(f"member {lab!r} belongs to unknown class {owner!r}", lineno)
        i = len(artifacts)
        artifacts.append(Artifact(i, lab, Level.MEMBER))
        index[lab] = i
        membership[i] = index[owner]
    arcs = []
    for src, dst, kind, count, lineno in raw_arcs:
        for lab in (src, dst):
            if lab not in index:
                raise RelationFormatError(f"arc references undeclared label {lab!r}", lineno)
        arcs.append(RelationArc(index[src], index[dst], kind, count))
    return RelationGraph(artifacts, arcs, membership)


def load_relations(path, format="text") -> RelationGraph:
    if format != "text":
        raise ValueError(f"unsupported relation format {format!r}")
    with open(path, encoding="utf-8") as fh:
        return parse_relations(fh)


def dump_relations(g: RelationGraph, fh):
    for a in g.artifacts:
        if a.level is Level.CLASS:
            fh.write(f"class {a.label}\n")
    for a in g.artifacts:
        if a.level is Level.MEMBER:
            fh.write(f"member {a.label} of {g.artifacts[g.membership[a.index]].label}\n")
    for arc in g.arcs:
        if arc.kind is None or arc.weight != int(arc.weight):
            raise ValueError("only unmerged integer-count graphs can be written as relation files")
        fh.write(f"arc {g.artifacts[arc.src].label} {g.artifacts[arc.dst].label} "
                 f"{arc.kind.value} {int(arc.weight)}\n")


def merge_relation_kinds(g: RelationGraph, weights=None) -> RelationGraph:
    """Collapse parallel arcs of all kinds into one real-weighted arc per
    ``(src, dst)``; each arc contributes ``count * weights[kind]``.

    Missing kinds default to weight 1.0.  Zero-weight contributions vanish.
    """
    w = {k: 1.0 for k in RelationKind}
    for k, val in (weights or {}).items():
        k = RelationKind(k) if not isinstance(k, RelationKind) else k
        if val < 0:
            raise ValueError(f"negative weight for {k.value}")
        w[k] = float(val)
    acc: dict[tuple[int, int], float] = defaultdict(float)
    for arc in g.arcs:
        factor = 1.0 if arc.kind is None else w[arc.kind]
        contribution = arc.weight * factor
        if contribution > 0:
            acc[(arc.src, arc.dst)] += contribution
    arcs = [RelationArc(s, d, None, val) for (s, d), val in acc.items() if val > 0]
    return RelationGraph(list(g.artifacts), arcs, dict(g.membership))


def components(g, undirected_view=True) -> list[list[int]]:
    """Connected components, each a sorted vertex list, ordered by smallest
    vertex.  ``g`` may be a :class:`RelationGraph` or an undirected graph
    with ``n``/``u``/``v`` attributes.  With ``undirected_view=False`` the
    strongly connected components of the directed graph are returned."""
    n = g.n
    if n == 0:
        return []
    if isinstance(g, RelationGraph):
        src, dst, _ = g.arc_arrays()
    else:
        src, dst = np.asarray(g.u), np.asarray(g.v)
    mat = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)).tocsr()
    _, lab = connected_components(mat, directed=True,
                                  connection="weak" if undirected_view else "strong")
    groups: dict[int, list[int]] = defaultdict(list)
    for v, c in enumerate(lab):
        groups[int(c)].append(v)
    return sorted(groups.values(), key=lambda grp: grp[0])
