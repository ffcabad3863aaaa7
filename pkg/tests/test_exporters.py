import random
import re
import xml.etree.ElementTree as ET

import pytest

from hiercut.exporters import (TextStyle, export_h3, export_text, export_treeviz, export_xml,
                               format_alpha)
from hiercut.tree import ClusterTree
from fixtures import GOLDEN, LABELS, ten_leaf_tree, two_leaf_tree
from oracles import random_laminar_tree

RECORD = re.compile(r"^( *)(\d+) (\d+) (\d+) (\S+) ; (\d+) heads")


@pytest.mark.parametrize("style", list(TextStyle))
def test_text_goldens(style):
    want = (GOLDEN / f"ten_leaf_{style.value}.txt").read_text()
    assert export_text(ten_leaf_tree(), style) == want


def test_xml_golden():
    assert export_xml(ten_leaf_tree()) == (GOLDEN / "ten_leaf.xml").read_text()


def test_xml_attribute_names():
    root = ET.fromstring(export_xml(ten_leaf_tree()))
    assert root.tag == "clusterTree"
    assert set(root.attrib) == {"vertexCount", "nodeCount", "rootCount", "disjointCount"}
    for el in root.iter("node"):
        if len(el):
            assert list(el.attrib) == ["id", "childCount", "alb", "heads", "djComp"]
        else:
            assert list(el.attrib) == ["id", "label", "djComp"]


def test_two_leaf_depth_indent():
    lines = export_text(two_leaf_tree(), TextStyle.DEPTH_INDENT).splitlines()
    assert lines[0].startswith("3 2 0 0.50000000000000000000 ; 1 heads 1")
    assert lines[2:] == ["  0 0 0 VeryBig ; 0 heads", "  a.X", "  1 0 0 VeryBig ; 0 heads", "  a.Y"]


def test_two_leaf_height_indent():
    lines = export_text(two_leaf_tree(), TextStyle.HEIGHT_INDENT).splitlines()
    assert lines[0].startswith("  3 ")
    assert lines[2] == "0 0 0 VeryBig ; 0 heads"


def random_tree(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 30)
    t = ClusterTree([f"x{rng.randint(0, 9)}.C{i}" for i in range(n)], [list(range(n))])
    for members, alpha in sorted(random_laminar_tree(rng, n), key=lambda x: x[1]):
        t.insert_cluster(members, alpha, heads=(members[0],))
    return t


@pytest.mark.parametrize("seed", range(10))
def test_height_indent_equals_height(seed):
    t = random_tree(seed)
    c = t.canonical()
    heights = c.heights()
    for line in export_text(t, TextStyle.HEIGHT_INDENT).splitlines():
        m = RECORD.match(line)
        if m:
            assert len(m.group(1)) == 2 * heights[int(m.group(2))]


@pytest.mark.parametrize("seed", range(10))
def test_every_export_lists_every_leaf(seed):
    t = random_tree(seed)
    n = t.n_leaves
    for style in TextStyle:
        text = export_text(t, style)
        if style is TextStyle.BRACKETED:
            assert sum(1 for ln in text.splitlines() if ln.strip().endswith('"')) == n
        else:
            assert sum(1 for ln in text.splitlines() if " VeryBig ; " in ln) == n
    assert len([e for e in ET.fromstring(export_xml(t)).iter("node") if "label" in e.attrib]) == n
    assert len(ET.fromstring(export_treeviz(t)).findall(".//leaf")) == n
    assert sum(1 for ln in export_h3(t).splitlines()[2:] if " cluster " not in ln) == n


def test_exports_are_deterministic_across_node_numbering():
    # same clusters inserted in a different order give different raw ids
    a, b = ClusterTree(LABELS, [list(range(10))]), ClusterTree(LABELS, [list(range(10))])
    clusters = [(list(range(10)), 0.1), (list(range(6)), 0.4), ([0, 1], 0.9), ([6, 7, 8], 0.5)]
    for m, al in clusters:
        a.insert_cluster(m, al)
    for m, al in reversed(clusters):
        b.insert_cluster(m, al)
    for style in TextStyle:
        assert export_text(a, style) == export_text(b, style)
    assert export_xml(a) == export_xml(b)
    assert export_treeviz(a) == export_treeviz(b)
    assert export_h3(a) == export_h3(b)


def test_treeviz_client_prefix():
    doc = ET.fromstring(export_treeviz(ten_leaf_tree(), ["com.dem0."]))
    kinds = {}
    for leaf in doc.iter("leaf"):
        attrs = {a.get("name"): a.get("value") for a in leaf.findall("attribute")}
        kinds[attrs["name"]] = attrs["kind"]
    assert {k for k, v in kinds.items() if v == "client"} == set(LABELS[:6])
    assert len(kinds) == 10


def test_h3_client_prefix():
    lines = export_h3(ten_leaf_tree(), ["com.dem0."]).splitlines()
    assert lines[:2] == ["# hiercut lvlist 1", "0 root cluster forest"]
    assert sum(" client " in ln for ln in lines) == 6


def test_single_leaf_documents():
    t = ClusterTree(["only.One"], [[0]])
    assert len(ET.fromstring(export_treeviz(t)).findall(".//leaf")) == 1
    assert export_h3(t).splitlines()[2:] == ["1 0 library only.One"]
    assert export_text(t) == "0 0 0 VeryBig ; 0 heads\nonly.One\n"


def test_empty_forest():
    t = ClusterTree([], [])
    root = ET.fromstring(export_xml(t))
    assert root.attrib == {"vertexCount": "0", "nodeCount": "0", "rootCount": "0", "disjointCount": "0"}
    assert export_text(t) == ""


def test_alpha_format():
    assert format_alpha(0.43857382202148437) == "0.43857382202148437000"
    assert format_alpha(0.017802734375) == "0.01780273437500000000"
    assert format_alpha(-0.15834708966782382) == "-0.15834708966782382000"
