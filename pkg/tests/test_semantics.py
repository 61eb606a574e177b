"""Operational semantics battery: committed priority, channel blocking,
receiver nondeterminism, ceiling abstraction, deadlock detection, and
equivalence against a naively coded enumerator."""

import pytest

from netgen import random_network
from oracles import naive_state_graph
from tamcheck import NetworkBuilder, explore, initial_state, is_deadlock
from tamcheck.model import ModelError
from tamcheck.semantics import State, successors


def one_receiver_pair(kind):
    nb = NetworkBuilder()
    nb.declare_channel("ch", kind=kind)
    s = nb.new_template("Sender")
    s.add_location("s0", initial=True)
    s.add_location("s1")
    s.add_edge("s0", "s1", sync="ch!")
    r = nb.new_template("Receiver")
    r.add_location("r0", initial=True)
    r.add_location("r1")
    r.add_edge("r0", "r1", sync="ch?")
    return nb


def test_binary_sender_blocks_without_receiver():
    nb = one_receiver_pair("binary")
    nb.add_process("Sender")
    net = nb.build()
    succs = successors(net, initial_state(net))
    assert [l.kind for l, _ in succs if l.kind == "sync"] == []
    assert is_deadlock(net, initial_state(net))


def test_broadcast_sender_fires_with_zero_receivers():
    nb = one_receiver_pair("broadcast")
    nb.add_process("Sender")
    net = nb.build()
    succs = successors(net, initial_state(net))
    syncs = [l for l, _ in succs if l.kind == "sync"]
    assert len(syncs) == 1
    assert syncs[0].receivers == ()


def test_binary_two_receivers_two_successors():
    # Hand enumeration on the 3-process network: sender S in s0, receivers
    # R1, R2 both in r0.  The sync pairs S with each receiver exactly once:
    #   (s1, r1, r0) and (s1, r0, r1).
    nb = one_receiver_pair("binary")
    nb.add_process("Sender")
    nb.add_process("Receiver", name="R1")
    nb.add_process("Receiver", name="R2")
    net = nb.build()
    s0 = initial_state(net)
    syncs = [(l, t) for l, t in successors(net, s0) if l.kind == "sync"]
    assert len(syncs) == 2
    assert {t.locs for _l, t in syncs} == {(1, 1, 0), (1, 0, 1)}
    assert [l.receivers for l, _t in syncs] == [((1, 0),), ((2, 0),)]


def test_broadcast_takes_all_enabled_receivers():
    nb = one_receiver_pair("broadcast")
    nb.add_process("Sender")
    nb.add_process("Receiver", name="R1")
    nb.add_process("Receiver", name="R2")
    net = nb.build()
    syncs = [(l, t) for l, t in successors(net, initial_state(net)) if l.kind == "sync"]
    assert len(syncs) == 1
    label, t = syncs[0]
    assert t.locs == (1, 1, 1)
    assert label.receivers == ((1, 0), (2, 0))


def test_committed_location_excludes_delay_and_other_processes():
    nb = NetworkBuilder()
    c = nb.new_template("C")
    c.add_clock("x")  # give the network a clock so delays exist at all
    c.add_location("c0", initial=True, committed=True)
    c.add_location("c1")
    c.add_edge("c0", "c1", update="x = 0")
    other = nb.new_template("Free")
    other.add_location("f0", initial=True)
    other.add_location("f1")
    other.add_edge("f0", "f1")
    nb.add_process("C")
    nb.add_process("Free")
    net = nb.build()
    succs = successors(net, initial_state(net))
    # only the committed process may act; no delay
    assert len(succs) == 1
    label, t = succs[0]
    assert label.kind == "internal" and label.proc == 0
    assert t.locs == (1, 0)
    # once out of the committed location everything opens up again
    kinds = {l.kind for l, _ in successors(net, t)}
    assert kinds == {"internal", "delay"}


def test_mutual_binary_block_is_deadlock():
    nb = NetworkBuilder()
    nb.declare_channel("a", kind="binary")
    nb.declare_channel("b", kind="binary")
    t1 = nb.new_template("P")
    t1.add_location("w", initial=True)
    t1.add_location("d")
    t1.add_edge("w", "d", sync="a!")
    t2 = nb.new_template("Q")
    t2.add_location("w", initial=True)
    t2.add_location("d")
    t2.add_edge("w", "d", sync="b!")
    nb.add_process("P")
    nb.add_process("Q")
    net = nb.build()
    s0 = initial_state(net)
    assert is_deadlock(net, s0)


def test_enabled_internal_edge_not_deadlock():
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_location("a", initial=True)
    t.add_location("b")
    t.add_edge("a", "b")
    nb.add_process("P")
    net = nb.build()
    assert not is_deadlock(net, initial_state(net))


def test_edge_enabled_after_delay_not_deadlock():
    # Single-clock automaton with guard x >= 3: no action now, but delaying
    # three units enables one.
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_clock("x")
    t.add_location("a", initial=True)
    t.add_location("b")
    t.add_edge("a", "b", guard="x >= 3")
    nb.add_process("P")
    net = nb.build()
    s0 = initial_state(net)
    assert successors(net, s0, first_action_only=True) == []
    assert not is_deadlock(net, s0)
    # ... and the terminal location deadlocks (nothing ever enabled).
    g = explore(net)
    terminal = [s for s in g.states if s.locs == (1,)]
    assert terminal and all(is_deadlock(net, s) for s in terminal)


def test_clock_ceiling_free_running_values():
    # Ceiling 2 (largest compared constant): exactly ceiling + 2 = 4
    # abstract clock values 0, 1, 2, 3 where 3 means "> 2".
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_clock("x")
    t.add_location("a", initial=True)
    t.add_location("b")
    t.add_edge("a", "b", guard="x <= 2")
    nb.add_process("P")
    net = nb.build()
    assert net.compiled().clock_ceil == [2]
    g = explore(net)
    values = {s.clocks[0] for s in g.states}
    assert values == {0, 1, 2, 3}
    assert all(s.clocks[0] <= 3 for s in g.states)


def test_delay_blocked_by_invariant():
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_clock("x")
    t.add_location("a", initial=True, invariant="x <= 1")
    t.add_location("b")
    t.add_edge("a", "b", guard="x >= 1", update="x = 0")
    nb.add_process("P")
    net = nb.build()
    s0 = initial_state(net)
    (l1, s1), = [x for x in successors(net, s0) if x[0].kind == "delay"]
    assert s1.clocks == (1,)
    kinds = [l.kind for l, _ in successors(net, s1)]
    assert kinds == ["internal"]  # invariant blocks a second delay


def test_updates_sender_first_then_receivers():
    nb = NetworkBuilder()
    nb.declare_channel("ch", kind="broadcast")
    nb.declare_global("v", "int[0,10]", init=0)
    s = nb.new_template("S")
    s.add_location("a", initial=True)
    s.add_location("b")
    s.add_edge("a", "b", sync="ch!", update="v = 3")
    r = nb.new_template("R")
    r.add_location("a", initial=True)
    r.add_location("b")
    r.add_edge("a", "b", sync="ch?", update="v = v * 2")
    nb.add_process("S")
    nb.add_process("R")
    net = nb.build()
    syncs = [t for l, t in successors(net, initial_state(net)) if l.kind == "sync"]
    assert syncs[0].vars == (6,)  # sender writes 3, receiver doubles it


def test_guards_evaluated_in_pre_state():
    # The receiver's guard sees the pre-state even though the sender's
    # update would falsify it.
    nb = NetworkBuilder()
    nb.declare_channel("ch", kind="broadcast")
    nb.declare_global("v", "int[0,10]", init=0)
    s = nb.new_template("S")
    s.add_location("a", initial=True)
    s.add_location("b")
    s.add_edge("a", "b", sync="ch!", update="v = 1")
    r = nb.new_template("R")
    r.add_location("a", initial=True)
    r.add_location("b")
    r.add_edge("a", "b", sync="ch?", guard="v == 0")
    nb.add_process("S")
    nb.add_process("R")
    net = nb.build()
    syncs = [(l, t) for l, t in successors(net, initial_state(net)) if l.kind == "sync"]
    assert len(syncs) == 1
    assert syncs[0][1].locs == (1, 1)


def test_initial_state_contract():
    nb = NetworkBuilder()
    nb.declare_global("v", "int[0,5]", init=2)
    t = nb.new_template("P")
    t.add_clock("x")
    t.add_location("a", initial=True)
    nb.add_process("P")
    net = nb.build()
    s0 = initial_state(net)
    assert s0 == State((0,), (2,), (0,))


def test_initial_state_empty_network():
    nb = NetworkBuilder()
    net = nb.build()
    s0 = initial_state(net)
    assert s0 == State((), (), ())


def test_initial_state_requires_clean_network():
    nb = NetworkBuilder()
    t = nb.new_template("P")
    t.add_location("a", initial=True)
    t.add_location("b")
    t.add_edge("a", "b", guard="ghost == 1")
    nb.add_process("P")
    with pytest.raises(ModelError):
        initial_state(nb.net)


def test_naive_enumerator_equivalence():
    """The explored graph equals an independently coded enumerator's graph
    on a batch of small random networks (<= 3 processes, <= 4 locations,
    ceilings <= 3)."""
    checked = 0
    seed = 0
    while checked < 10 and seed < 200:
        seed += 1
        try:
            net = random_network(seed)
        except ModelError:
            continue
        g = explore(net, limit=600)
        if g.truncated or g.n_states > 300:
            continue
        try:
            reach, edges = naive_state_graph(net)
        except ValueError:
            continue
        eng_states = set(g.states)
        eng_edges = set()
        for sid in range(g.n_states):
            for label, tid in g.adjacency(sid):
                eng_edges.add((g.states[sid], label, g.states[tid]))
        assert eng_states == reach, f"seed {seed}: state sets differ"
        assert eng_edges == edges, f"seed {seed}: edge sets differ"
        checked += 1
    assert checked == 10


def test_delay_monotonicity_and_committed_exclusion_random():
    """Graph-level invariants on random networks: a delay successor never
    violates invariants (by construction it exists only then), and no state
    with a committed location has a delay successor."""
    seed = 0
    checked = 0
    while checked < 10 and seed < 200:
        seed += 1
        try:
            net = random_network(seed)
        except ModelError:
            continue
        cn = net.compiled()
        g = explore(net, limit=2000)
        if g.truncated:
            continue
        for sid in range(g.n_states):
            s = g.states[sid]
            committed = any(s.locs[p] in cn.committed[p] for p in range(cn.n_procs))
            delays = [g.states[tid] for l, tid in g.adjacency(sid) if l.kind == "delay"]
            if committed:
                assert not delays
            for t in delays:
                for p in range(cn.n_procs):
                    inv = cn.invariants[p][t.locs[p]]
                    assert inv is None or inv(t.clocks)
            # ceiling soundness
            for k, c in enumerate(s.clocks):
                assert c <= cn.clock_ceil[k] + 1
        checked += 1
    assert checked == 10
