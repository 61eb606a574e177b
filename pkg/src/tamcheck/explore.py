"""Exhaustive breadth-first exploration of the reachable state space.

States are hash-consed: the graph holds each canonical state once, and the
location/variable/clock component tuples are interned so structurally equal
components share storage.  Exploration is deterministic: states are numbered
in BFS discovery order with successors in canonical order, so two runs over
the same network produce identical graphs regardless of the worker count
(workers only parallelise successor computation within a frontier; results
are merged in frontier order).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .model import Network
from .semantics import State, initial_state, render_label, render_state, successors

DEFAULT_STATE_LIMIT = 10_000_000


@dataclass
class StateGraph:
    compiled: object
    states: list = field(default_factory=list)       # id -> State
    index: dict = field(default_factory=dict)        # State -> id
    edges: list = field(default_factory=list)        # id -> [(label, succ_id)] | None
    initial: int = 0
    truncated: bool = False

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return sum(len(adj) for adj in self.edges if adj is not None)

    def adjacency(self, sid: int):
        adj = self.edges[sid]
        return adj if adj is not None else []


class _Intern:
    __slots__ = ("table",)

    def __init__(self):
        self.table = {}

    def __call__(self, t: tuple) -> tuple:
        got = self.table.get(t)
        if got is None:
            self.table[t] = t
            return t
        return got


def explore(net, limit: int = DEFAULT_STATE_LIMIT, threads: int = 1) -> StateGraph:
    """Reachable graph from the initial state; truncated (not fatal) at `limit`."""
    cn = net.compiled() if isinstance(net, Network) else net
    init = initial_state(cn)
    g = StateGraph(compiled=cn)
    g.states.append(init)
    g.index[init] = 0
    g.edges.append(None)
    intern_locs, intern_vars, intern_clocks = _Intern(), _Intern(), _Intern()

    frontier = [0]
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while frontier:
            if pool is not None:
                chunks = _chunk(frontier, threads)
                parts = pool.map(lambda ch: [successors(cn, g.states[sid]) for sid in ch], chunks)
                succ_lists = [s for part in parts for s in part]
            else:
                succ_lists = [successors(cn, g.states[sid]) for sid in frontier]

            next_frontier = []
            for sid, succs in zip(frontier, succ_lists):
                adj = []
                for label, succ in succs:
                    succ = State(intern_locs(succ.locs), intern_vars(succ.vars),
                                 intern_clocks(succ.clocks))
                    tid = g.index.get(succ)
                    if tid is None:
                        if len(g.states) >= limit:
                            g.truncated = True
                            continue
                        tid = len(g.states)
                        g.states.append(succ)
                        g.index[succ] = tid
                        g.edges.append(None)
                        next_frontier.append(tid)
                    adj.append((label, tid))
                g.edges[sid] = adj
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown()

    if g.truncated:
        # States whose successors were never computed stay unexpanded (None).
        pass
    else:
        for sid in range(len(g.edges)):
            if g.edges[sid] is None:
                g.edges[sid] = []
    return g


def _chunk(items: list, n: int) -> list:
    if n <= 1 or len(items) <= 1:
        return [items]
    size = (len(items) + n - 1) // n
    return [items[i : i + size] for i in range(0, len(items), size)]


def dump_graph(graph: StateGraph, out) -> None:
    """Line-oriented text dump: one state per line
    `id | loc-vector | var-assignments | clocks`, then one edge per line
    `src -> dst : label`."""
    cn = graph.compiled
    for sid, s in enumerate(graph.states):
        locv = ",".join(cn.loc_names[p][l] for p, l in enumerate(s.locs))
        varv = ",".join(f"{cn.var_names[i]}={v}" for i, v in enumerate(s.vars))
        clkv = ",".join(f"{cn.clock_names[k]}={c}" for k, c in enumerate(s.clocks))
        out.write(f"{sid} | {locv} | {varv} | {clkv}\n")
    for sid in range(graph.n_states):
        adj = graph.edges[sid]
        if adj is None:
            continue
        for label, tid in adj:
            out.write(f"{sid} -> {tid} : {render_label(cn, label)}\n")


def shortest_path(graph: StateGraph, target_pred) -> list | None:
    """BFS-shortest alternating [state_id, label, state_id, ...] path from the
    initial state to the first state satisfying `target_pred(sid)`."""
    if target_pred(graph.initial):
        return [graph.initial]
    parent = {graph.initial: None}
    frontier = [graph.initial]
    while frontier:
        nxt = []
        for sid in frontier:
            for label, tid in graph.adjacency(sid):
                if tid in parent:
                    continue
                parent[tid] = (sid, label)
                if target_pred(tid):
                    return _unwind(parent, tid)
                nxt.append(tid)
        frontier = nxt
    return None


def _unwind(parent: dict, sid: int) -> list:
    path = [sid]
    while parent[sid] is not None:
        prev, label = parent[sid]
        path.append(label)
        path.append(prev)
        sid = prev
    path.reverse()
    return path


__all__ = [
    "DEFAULT_STATE_LIMIT", "StateGraph", "explore", "dump_graph",
    "shortest_path", "render_state", "render_label",
]
