import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiercut.relation_graph import (Level, RelationFormatError, RelationKind, components,
                                    dump_relations, load_relations, merge_relation_kinds,
                                    parse_relations)


def parse(text):
    return parse_relations(io.StringIO(text))


def test_minimal_file():
    g = parse("class A\nclass B\narc A B CALL 2\n")
    assert g.n == 2
    assert len(g.arcs) == 1
    assert g.arcs[0].weight == 2 and g.arcs[0].kind is RelationKind.CALL


def test_membership():
    g = parse("class A\nclass B\nmember m1 of A\narc m1 B CALL 1\n")
    assert g.n == 3
    m1 = g.labels.index("m1")
    assert g.membership == {m1: g.labels.index("A")}
    assert g.artifacts[m1].level is Level.MEMBER


def test_comments_and_blank_lines():
    g = parse("# header\n\nclass A  # trailing\nclass B\narc A B TYPE_USAGE 1 # x\n")
    assert g.labels == ["A", "B"]


@pytest.mark.parametrize("text, line", [
    ("class A\nA -> \n", 2),
    ("class A\nclass A\n", 2),
    ("class A\nmember m of Z\n", 2),
    ("class A\narc A B CALL 1\n", 2),
    ("class A\nclass B\narc A B SHOUT 1\n", 3),
    ("class A\nclass B\narc A B CALL 0\n", 3),
    ("class A\nclass B\narc A B CALL x\n", 3),
    ("class A\nmember A of A\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(RelationFormatError) as err:
        parse(text)
    assert err.value.lineno == line


def test_self_loops_kept_at_load():
    g = parse("class A\narc A A CALL 3\n")
    assert len(g.arcs) == 1


def test_load_from_disk(tmp_path):
    p = tmp_path / "rel.txt"
    p.write_text("class A\nclass B\narc A B CALL 2\n", encoding="utf-8")
    assert load_relations(p).n == 2
    with pytest.raises(ValueError):
        load_relations(p, format="soot")


def test_merge_kinds_sums():
    g = parse("class A\nclass B\narc A B CALL 3\narc A B FIELD_ACCESS 2\n")
    m = merge_relation_kinds(g)
    assert [(a.src, a.dst, a.weight, a.kind) for a in m.arcs] == [(0, 1, 5.0, None)]


def test_merge_zero_weight_drops():
    g = parse("class A\nclass B\nclass C\narc A B CALL 3\narc A C INHERITANCE 1\n")
    m = merge_relation_kinds(g, {"CALL": 0.0})
    assert [(a.src, a.dst, a.weight) for a in m.arcs] == [(0, 2, 1.0)]


def test_merge_rejects_negative():
    g = parse("class A\nclass B\narc A B CALL 3\n")
    with pytest.raises(ValueError):
        merge_relation_kinds(g, {RelationKind.CALL: -1})


KINDS = list(RelationKind)


def random_relation_text(rnd, n_classes=5, n_members=4, n_arcs=15):
    classes = [f"pkg.C{i}" for i in range(n_classes)]
    lines = [f"class {c}" for c in classes]
    members = []
    for j in range(n_members):
        m = f"pkg.m{j}"
        members.append(m)
        lines.append(f"member {m} of {rnd.choice(classes)}")
    labels = classes + members
    for _ in range(n_arcs):
        a, b = rnd.choice(labels), rnd.choice(labels)
        lines.append(f"arc {a} {b} {rnd.choice(KINDS).value} {rnd.randint(1, 9)}")
    rnd.shuffle(lines)
    return "\n".join(lines) + "\n"


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_merge_preserves_mass(rnd):
    g = parse(random_relation_text(rnd))
    weights = {k: rnd.choice([0.0, 0.5, 1.0, 2.0, 3.25]) for k in KINDS}
    before = sum(a.weight * weights[a.kind] for a in g.arcs)
    after = sum(a.weight for a in merge_relation_kinds(g, weights).arcs)
    assert after == pytest.approx(before, rel=0, abs=1e-9)
    # small integers times dyadic weights are exact
    assert after == before


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_dump_load_roundtrip(rnd):
    g = parse(random_relation_text(rnd))
    buf = io.StringIO()
    dump_relations(g, buf)
    h = parse(buf.getvalue())
    assert sorted(h.labels) == sorted(g.labels)

    def arcs(x):
        lab = x.labels
        return sorted((lab[a.src], lab[a.dst], a.kind.value, a.weight) for a in x.arcs)

    assert arcs(h) == arcs(g)
    owner = lambda x: {x.labels[m]: x.labels[c] for m, c in x.membership.items()}
    assert owner(h) == owner(g)


def test_components_examples():
    g = parse("class A\nclass B\nclass C\nclass D\narc A B CALL 1\narc C D CALL 1\n")
    assert components(g) == [[0, 1], [2, 3]]
    g = parse("class A\nclass B\nclass C\narc A B CALL 1\narc B C CALL 1\n")
    assert components(g) == [[0, 1, 2]]
    assert components(parse("")) == []


def test_orphans_are_singletons():
    g = parse("class A\nclass B\nclass Z\narc A B CALL 1\n")
    assert components(g) == [[0, 1], [2]]


def test_strong_components():
    g = parse("class A\nclass B\nclass C\narc A B CALL 1\narc B A CALL 1\narc B C CALL 1\n")
    assert components(g, undirected_view=False) == [[0, 1], [2]]


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_components_partition(rnd):
    g = parse(random_relation_text(rnd, n_arcs=rnd.randint(0, 8)))
    comps = components(g)
    flat = sorted(v for c in comps for v in c)
    assert flat == list(range(g.n))
    lab = {v: i for i, c in enumerate(comps) for v in c}
    for a in g.arcs:
        assert lab[a.src] == lab[a.dst]


def test_random_text_generator_is_parseable():
    parse(random_relation_text(random.Random(0)))
