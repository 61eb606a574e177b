"""Operational semantics: delay and action successors under integer time.

States hold one location per process, a flat integer valuation of all global
and local variables, and one integer per clock.  Clocks are stored clamped at
`ceiling + 1`, where the ceiling of a clock is the largest constant it is
compared against anywhere in the network; this keeps the state space finite
while preserving the truth of every guard and invariant.

Committed locations take priority: while any process sits in one, only action
successors in which at least one participating process leaves a committed
location exist, and time cannot pass.  Binary senders block without a
receiver; a broadcast sender fires with every currently enabled receiver,
possibly none.  Updates run sender first, then receivers in ascending process
order.  Guards and channel indices are evaluated in the pre-state.
"""

from __future__ import annotations

from typing import NamedTuple

from .model import CompiledNetwork, EvalRangeError, Network


class State(NamedTuple):
    locs: tuple
    vars: tuple
    clocks: tuple


class TransitionLabel(NamedTuple):
    kind: str          # 'delay' | 'internal' | 'sync'
    delay: int         # >= 1 for delay labels
    proc: int          # acting / sending process (-1 for delay)
    edge: int          # sender edge id within its process (-1 for delay)
    channel: int       # channel id (-1 unless sync)
    index: int         # resolved channel index (-1 unless sync)
    receivers: tuple   # ((proc, edge), ...) for sync labels


DELAY_1 = TransitionLabel("delay", 1, -1, -1, -1, -1, ())


def _compiled(net) -> CompiledNetwork:
    if isinstance(net, CompiledNetwork):
        return net
    if isinstance(net, Network):
        return net.compiled()
    raise TypeError(f"expected Network or CompiledNetwork, got {type(net).__name__}")


def initial_state(net) -> State:
    """All processes at their initial locations, variables at declared initial
    values, clocks at zero.  Requires a network that validates cleanly."""
    cn = _compiled(net)
    return State(cn.initial_locs, cn.var_init, (0,) * len(cn.clock_names))


def _sync_index(sync, V, C) -> int:
    idx = sync[2]
    if isinstance(idx, int):
        return idx
    return idx(V, C)


def _guard_ok(edge, V, C) -> bool:
    return edge.guard is None or edge.guard(V, C)


def successors(net, s: State, first_action_only: bool = False) -> list:
    """All (label, state) successors of `s` in canonical order: action
    successors by (process, edge) declaration order, then the unit delay."""
    cn = _compiled(net)
    locs, V, C = s
    committed = cn.committed
    committed_present = False
    for p, l in enumerate(locs):
        if l in committed[p]:
            committed_present = True
            break

    out = []
    n = cn.n_procs
    for p in range(n):
        p_committed = locs[p] in committed[p]
        for ce in cn.edges_by_loc[p][locs[p]]:
            if ce.sync is None:
                if committed_present and not p_committed:
                    continue
                if not _guard_ok(ce, V, C):
                    continue
                succ = _apply(cn, s, [(p, ce)])
                if succ is not None:
                    out.append((TransitionLabel("internal", 0, p, ce.eid, -1, -1, ()), succ))
                    if first_action_only:
                        return out
            elif ce.sync[1] == "send":
                if not _guard_ok(ce, V, C):
                    continue
                chan = ce.sync[0]
                try:
                    idx = _sync_index(ce.sync, V, C)
                except EvalRangeError:
                    raise
                if cn.broadcast[chan]:
                    combos = _broadcast_receivers(cn, s, p, chan, idx)
                    for receivers in combos:
                        if committed_present and not p_committed and \
                                not any(locs[q] in committed[q] for q, _ in receivers):
                            continue
                        parts = [(p, ce)] + [(q, re) for q, re in receivers]
                        succ = _apply(cn, s, parts)
                        if succ is not None:
                            label = TransitionLabel(
                                "sync", 0, p, ce.eid, chan, idx,
                                tuple((q, re.eid) for q, re in receivers))
                            out.append((label, succ))
                            if first_action_only:
                                return out
                else:
                    for q, src_loc, re in cn.receivers[chan]:
                        if q == p or locs[q] != src_loc:
                            continue
                        if _sync_index(re.sync, V, C) != idx:
                            continue
                        if not _guard_ok(re, V, C):
                            continue
                        if committed_present and not p_committed and locs[q] not in committed[q]:
                            continue
                        succ = _apply(cn, s, [(p, ce), (q, re)])
                        if succ is not None:
                            label = TransitionLabel("sync", 0, p, ce.eid, chan, idx,
                                                    ((q, re.eid),))
                            out.append((label, succ))
                            if first_action_only:
                                return out
            # bare receive edges only fire as part of a send

    if first_action_only:
        return out

    if not committed_present:
        d = _delay_successor(cn, s)
        if d is not None:
            out.append((DELAY_1, d))
    return out


def _broadcast_receivers(cn, s: State, sender: int, chan: int, idx: int) -> list:
    """Per-process choices of enabled receive edges, expanded to combinations.

    Receivers are taken in ascending process order; a process with several
    enabled receiving edges on the same channel+index yields one combination
    per choice.  The empty receiver set is a valid combination only when no
    process can receive.
    """
    locs, V, C = s
    per_proc = []  # (q, [edges]) for processes with >= 1 enabled edge
    seen = set()
    for q, src_loc, re in cn.receivers[chan]:
        if q == sender or locs[q] != src_loc:
            continue
        if _sync_index(re.sync, V, C) != idx:
            continue
        if not _guard_ok(re, V, C):
            continue
        if q not in seen:
            seen.add(q)
            per_proc.append((q, [re]))
        else:
            for i, (qq, edges) in enumerate(per_proc):
                if qq == q:
                    edges.append(re)
                    break
    per_proc.sort(key=lambda item: item[0])
    combos = [[]]
    for q, edges in per_proc:
        combos = [c + [(q, e)] for c in combos for e in edges]
    return combos


def _apply(cn: CompiledNetwork, s: State, participants: list):
    """Fire the given (process, edge) set: updates sender-first (participants
    are passed in firing order), then check every participant's target
    invariant.  Returns the successor state or None if an invariant fails."""
    locs, V, C = s
    V2 = list(V)
    C2 = list(C)
    locs2 = list(locs)
    for p, ce in participants:
        if ce.update is not None:
            ce.update(V2, C2)
        locs2[p] = ce.dst
    for p, ce in participants:
        inv = cn.invariants[p][ce.dst]
        if inv is not None and not inv(C2):
            return None
    return State(tuple(locs2), tuple(V2), tuple(C2))


def _delay_successor(cn: CompiledNetwork, s: State):
    """Unit delay with ceiling clamping, or None if an invariant blocks it.

    Networks without clocks have no delay transitions at all (time passage
    is unobservable there); in networks with clocks the delay exists even
    when every clock is clamped, so time divergence shows up as a delay
    self-loop and liveness properties must beat it."""
    if not cn.clock_names:
        return None
    locs, V, C = s
    ceil = cn.clock_ceil
    C2 = tuple(c if c > ceil[k] else c + 1 for k, c in enumerate(C))
    for p, l in enumerate(locs):
        inv = cn.invariants[p][l]
        if inv is not None and not inv(C2):
            return None
    return State(locs, V, C2)


def has_action_successor(net, s: State) -> bool:
    return bool(successors(net, s, first_action_only=True))


def is_deadlock(net, s: State) -> bool:
    """True iff no action transition is possible from `s` or from any state
    reachable from `s` by delay alone."""
    cn = _compiled(net)
    cur = s
    while True:
        if successors(cn, cur, first_action_only=True):
            return False
        if any(cur.locs[p] in cn.committed[p] for p in range(cn.n_procs)):
            return True  # committed states cannot delay
        d = _delay_successor(cn, cur)
        if d is None or d == cur:
            return True
        cur = d


# ---------------------------------------------------------------------------
# Rendering helpers (used by trace printers and graph dumps)

def render_state(cn: CompiledNetwork, s: State, diff_from: State | None = None) -> str:
    parts = []
    for p, l in enumerate(s.locs):
        if diff_from is None or diff_from.locs[p] != l:
            parts.append(f"{cn.proc_names[p]}.{cn.loc_names[p][l]}")
    for i, v in enumerate(s.vars):
        if diff_from is None or diff_from.vars[i] != v:
            parts.append(f"{cn.var_names[i]}={v}")
    for k, c in enumerate(s.clocks):
        if diff_from is None or diff_from.clocks[k] != c:
            parts.append(f"{cn.clock_names[k]}={c}")
    return " ".join(parts) if parts else "(unchanged)"


def render_label(cn: CompiledNetwork, label: TransitionLabel) -> str:
    if label.kind == "delay":
        return f"delay({label.delay})"
    if label.kind == "internal":
        ce = _edge_by_id(cn, label.proc, label.edge)
        return ce.text
    ch = cn.channel_list[label.channel]
    chan_txt = ch.name if ch.arity == 1 else f"{ch.name}[{label.index}]"
    recv = ", ".join(cn.proc_names[q] for q, _ in label.receivers) or "-"
    return f"{cn.proc_names[label.proc]} {chan_txt}! -> {recv}"


def _edge_by_id(cn: CompiledNetwork, proc: int, eid: int):
    for edges in cn.edges_by_loc[proc]:
        for ce in edges:
            if ce.eid == eid:
                return ce
    raise KeyError((proc, eid))
