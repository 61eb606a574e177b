"""Exploration: determinism, truncation, ordering, graph dump format."""

import io

from netgen import random_network
from tamcheck import NetworkBuilder, dump_graph, explore
from tamcheck.model import ModelError


def two_state_net():
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_location("a", initial=True)
    t.add_location("b")
    t.add_edge("a", "b")
    nb.add_process("P")
    return nb.build()


def test_single_edge_graph():
    g = explore(two_state_net())
    assert g.n_states == 2
    assert g.n_transitions == 1
    assert not g.truncated


def test_truncation_flag_and_partial_graph():
    nb = NetworkBuilder()
    nb.declare_global("v", "int[0,100]", init=0)
    t = nb.new_template("P")
    t.add_location("a", initial=True)
    t.add_edge("a", "a", guard="v < 100", update="v = v + 1")
    nb.add_process("P")
    net = nb.build()
    g = explore(net, limit=10)
    assert g.truncated
    assert g.n_states == 10
    full = explore(net)
    assert not full.truncated
    assert full.n_states == 101


def test_determinism_across_runs_and_threads():
    seed = 0
    checked = 0
    while checked < 6 and seed < 100:
        seed += 1
        try:
            net = random_network(seed)
        except ModelError:
            continue
        g1 = explore(net, limit=3000)
        g2 = explore(net, limit=3000)
        g4 = explore(net, limit=3000, threads=4)
        assert g1.states == g2.states == g4.states
        assert g1.edges == g2.edges == g4.edges
        checked += 1
    assert checked == 6


def test_successor_order_processes_then_edges_then_delay():
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_clock("x")
    t.add_location("a", initial=True, invariant="x <= 5")
    t.add_location("b")
    t.add_location("c")
    t.add_edge("a", "b")
    t.add_edge("a", "c")
    nb.add_process("P", name="P0")
    nb.add_process("P", name="P1")
    net = nb.build()
    from tamcheck.semantics import initial_state, successors
    succs = successors(net, initial_state(net))
    keys = [(l.kind, l.proc, l.edge) for l, _ in succs]
    assert keys == [("internal", 0, 0), ("internal", 0, 1),
                    ("internal", 1, 0), ("internal", 1, 1),
                    ("delay", -1, -1)]


def test_dump_format():
    g = explore(two_state_net())
    buf = io.StringIO()
    dump_graph(g, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("0 | a |")
    assert lines[1].startswith("1 | b |")
    state_lines = [l for l in lines if " | " in l]
    edge_lines = [l for l in lines if " -> " in l and ":" in l]
    assert len(state_lines) == 2
    assert len(edge_lines) == 1
    assert edge_lines[0].startswith("0 -> 1 :")


def test_graph_edges_reference_indexed_states():
    seed = 0
    checked = 0
    while checked < 4 and seed < 50:
        seed += 1
        try:
            net = random_network(seed)
        except ModelError:
            continue
        g = explore(net, limit=2000)
        if g.truncated:
            continue
        for sid in range(g.n_states):
            for _label, tid in g.adjacency(sid):
                assert 0 <= tid < g.n_states
        checked += 1
    assert checked == 4
