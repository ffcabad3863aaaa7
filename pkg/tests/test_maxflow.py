import io
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiercut.maxflow import (CapacityOverflowError, DimacsFormatError, FlowNetwork, PushRelabel,
                             cut_capacity, max_flow, min_cut_between, read_dimacs, write_dimacs)
from oracles import brute_min_cut, random_connected


def test_spec_path_example():
    net = FlowNetwork.undirected(3, [(0, 1, 3), (1, 2, 2)], 0, 2)
    cut = max_flow(net)
    assert cut.value == 2
    assert cut.source_side == {0, 1}


def test_parallel_paths_example():
    net = FlowNetwork.undirected(4, [(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)], 0, 3)
    assert max_flow(net).value == 2


def test_disconnected_terminals_give_zero():
    net = FlowNetwork.undirected(4, [(0, 1, 5), (2, 3, 5)], 0, 3)
    cut = max_flow(net)
    assert cut.value == 0
    assert cut.source_side == {0, 1}


def test_same_terminals_rejected():
    net = FlowNetwork.undirected(2, [(0, 1, 1)])
    with pytest.raises(ValueError):
        PushRelabel(net).run(0, 0)


def test_overflowing_vertex_rejected():
    big = 2 ** 61 + 1
    net = FlowNetwork.undirected(4, [(0, 1, big), (0, 2, big), (0, 3, 1)], 0, 3)
    with pytest.raises(CapacityOverflowError):
        max_flow(net)


def test_sink_may_exceed_headroom():
    big = 2 ** 61 + 1
    net = FlowNetwork.undirected(4, [(0, 3, big), (1, 3, big), (2, 3, 1)], 0, 3)
    assert max_flow(net).value == big


def _check_flow(net, solver, s, t, value):
    f = solver.flow()
    tails = np.repeat(np.arange(net.n), np.diff(net.start))
    assert (net.cap - f >= 0).all()
    out = np.bincount(tails, weights=f.astype(float), minlength=net.n)
    for v in range(net.n):
        expect = value if v == s else -value if v == t else 0
        assert out[v] == expect


def test_against_enumeration():
    rng = random.Random(11)
    for _ in range(300):
        n = rng.randint(2, 8)
        edges = random_connected(rng, n)
        s, t = rng.sample(range(n), 2)
        net = FlowNetwork.undirected(n, edges, s, t)
        solver = PushRelabel(net)
        value, side = solver.run(s, t)
        want, want_side = brute_min_cut(n, edges, s, t)
        assert value == want
        assert frozenset(np.flatnonzero(side).tolist()) == want_side
        _check_flow(net, solver, s, t, value)


def test_against_networkx_on_larger_graphs():
    rng = random.Random(5)
    for _ in range(20):
        n = rng.randint(30, 80)
        edges = random_connected(rng, n, extra_p=0.1, wmax=1000)
        s, t = rng.sample(range(n), 2)
        G = nx.Graph()
        G.add_weighted_edges_from(edges, weight="capacity")
        assert min_cut_between(FlowNetwork.undirected(n, edges), s, t).value \
            == nx.maximum_flow_value(G, s, t)


def test_solver_reuse_across_terminals():
    rng = random.Random(3)
    edges = random_connected(rng, 8)
    net = FlowNetwork.undirected(8, edges)
    solver = PushRelabel(net)
    for s, t in [(0, 7), (3, 1), (0, 7), (5, 2)]:
        assert solver.run(s, t)[0] == brute_min_cut(8, edges, s, t)[0]
    assert solver.calls == 4


def test_directed_arcs():
    net = FlowNetwork.from_arcs(3, [0, 1], [1, 2], [4, 3], source=0, sink=2)
    assert max_flow(net).value == 3
    assert max_flow(net.with_terminals(2, 0)).value == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.randoms(use_true_random=False))
def test_cut_value_matches_side(n, rnd):
    edges = random_connected(rnd, n)
    s, t = rnd.sample(range(n), 2)
    net = FlowNetwork.undirected(n, edges, s, t)
    cut = max_flow(net)
    assert cut_capacity(net, cut.source_side) == cut.value
    assert s in cut.source_side and t not in cut.source_side


def test_dimacs_roundtrip():
    rng = random.Random(2)
    edges = random_connected(rng, 6)
    net = FlowNetwork.undirected(6, edges, 1, 4)
    buf = io.StringIO()
    write_dimacs(net, buf, comment="round trip")
    text = buf.getvalue()
    assert text.startswith("c round trip\np max 6 ")
    back = read_dimacs(io.StringIO(text))
    assert (back.source, back.sink) == (1, 4)
    assert max_flow(back).value == max_flow(net).value


def test_dimacs_errors():
    with pytest.raises(DimacsFormatError):
        read_dimacs(io.StringIO("a 1 2 3\n"))
    with pytest.raises(DimacsFormatError):
        read_dimacs(io.StringIO("p max 2 1\nn 1 s\na 1 2 x\n"))
    with pytest.raises(DimacsFormatError):
        read_dimacs(io.StringIO("p max 2 1\na 1 2 3\n"))


def test_single_edge():
    cut = max_flow(FlowNetwork.undirected(2, [(0, 1, 5)], 0, 1))
    assert cut == (5, frozenset({0}))


def test_diamond():
    net = FlowNetwork.undirected(4, [(0, 1, 4), (0, 2, 2), (1, 3, 3), (2, 3, 3)], 0, 3)
    assert max_flow(net).value == 5


def test_triangle_pairs():
    net = FlowNetwork.undirected(3, [(0, 1, 3), (0, 2, 1), (1, 2, 2)])
    assert min_cut_between(net, 0, 1).value == 4
    assert min_cut_between(net, 0, 2).value == 3


def test_deterministic_sides():
    rng = random.Random(8)
    edges = random_connected(rng, 20, extra_p=0.2, wmax=3)
    net = FlowNetwork.undirected(20, edges, 0, 19)
    assert len({max_flow(net).source_side for _ in range(5)}) == 1
