"""Query language: parse and decide a TCTL subset over an explored graph.

Supported shapes: `E<> f` (reachability), `A[] f` (invariant), `E[] f`
(possible invariance along some maximal path), `A<> f` (inevitability) and
`f --> g` (leads-to).  State formulae may test process locations
(`Proc.loc`, `Proc(i).loc`), compare integer variables and record fields,
call read-only model functions (`Proc(i).fn(...)`), use `deadlock`, boolean
connectives (`&&`, `||`, `not`, `imply`) and bounded quantifiers
(`forall (i : typename)`, `exists (i : typename)`).

A maximal path is infinite or ends in a state without outgoing transitions;
in the finite explored graph an infinite path is a lasso, and a delay
self-loop at the clock ceiling counts (time divergence is a real run).
Boolean operators short-circuit, and a location test on a process index
outside the family's range is false rather than an error, which keeps
ring-indexed formulae like `Camera(i+1).loc` total at the boundary.

Verdicts carry replayable evidence: a witness path for `E<>`/`E[]`, a
counterexample for `A[]`/`A<>`/`-->`.  Lassos are reported as a path whose
last state repeats an earlier one (`cycle_index` marks the re-entry point).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import expr as E
from . import model
from .explore import StateGraph, shortest_path
from .semantics import State, is_deadlock, successors

SHAPES = ("E<>", "A[]", "E[]", "A<>")


class CheckError(Exception):
    pass


class TruncatedGraphError(CheckError):
    """Raised when a truncated graph cannot support a definitive verdict."""


@dataclass(frozen=True)
class StateFormula:
    text: str
    ast: object
    fn: object  # callable(L, V, C, K) -> bool

    def __call__(self, state: State, K) -> bool:
        return self.fn(state.locs, state.vars, state.clocks, K)


@dataclass(frozen=True)
class Query:
    shape: str  # one of SHAPES or '-->'
    formula: StateFormula
    formula2: StateFormula | None = None
    text: str = ""
    name: str = ""

    def named(self, name: str) -> "Query":
        return Query(self.shape, self.formula, self.formula2, self.text, name)


@dataclass
class Verdict:
    satisfied: bool
    query: Query
    evidence: list | None = None      # [State, label, State, ...]
    cycle_index: int | None = None    # lasso re-entry position (state index)
    truncated: bool = False


# ---------------------------------------------------------------------------
# Compilation of state formulae

def _ploc(L, procs, i, locid) -> bool:
    if 0 <= i < len(procs):
        return L[procs[i]] == locid
    return False


def _pcall(fns, i, V, C, *args):
    if 0 <= i < len(fns):
        return fns[i](V, C, *args)
    raise model.EvalRangeError(f"process index {i} out of range [0,{len(fns)})")


class _QueryCompiler(model._Compiler):
    def __init__(self, net: model.Network):
        super().__init__(net)
        cn = net.compiled()
        self.cn = cn
        self.global_layout, self.local_layout, self.global_clock_ids, self.local_clocks = cn._layout
        self.ns = {"_ix": model._ix, "_chk": model._chk, "_b": model._b,
                   "_tdiv": model._tdiv, "_tmod": model._tmod,
                   "_ploc": _ploc, "_pcall": _pcall}

    def _gen(self, node, scope, where, clocks_ok=True):
        if isinstance(node, E.DeadlockAtom):
            return "K(L, V, C)", None, None
        if isinstance(node, E.Quant):
            if node.typename not in self.net.typedefs:
                raise model.ModelError(f"quantifier over unknown range type {node.typename!r}")
            lo, hi = self.net.typedefs[node.typename]
            py = self._tmp()
            old = scope.bound.get(node.var)
            scope.bound[node.var] = py
            bsrc, _bs, bclock = self._gen(node.body, scope, where, clocks_ok)
            if old is None:
                del scope.bound[node.var]
            else:
                scope.bound[node.var] = old
            if bclock is not None:
                raise model.ModelError("clocks are not allowed in queries")
            op = "all" if node.kind == "forall" else "any"
            return f"{op}(({bsrc}) for {py} in range({lo}, {hi + 1}))", None, None
        if isinstance(node, E.Postfix):
            atom = self._try_process_atom(node, scope, where)
            if atom is not None:
                return atom
        if isinstance(node, E.Name) and scope.lookup(node.ident) is None \
                and node.ident in self.cn.fam_procs:
            raise model.ModelError(
                f"process {node.ident!r} must be followed by a location or function")
        return super()._gen(node, scope, where, clocks_ok)

    def _try_process_atom(self, node: E.Postfix, scope, where):
        head = node.base.ident
        if scope.lookup(head) is not None or head not in self.cn.fam_procs:
            return None
        procs = self.cn.fam_procs[head]
        ops = list(node.ops)
        index_src, index_static = None, None
        if ops and ops[0][0] == "call":
            args = ops.pop(0)[1]
            if len(args) != 1:
                raise model.ModelError(f"process index of {head!r} takes one argument")
            isrc, istatic, iclock = self._gen(args[0], scope, where, clocks_ok=False)
            if iclock is not None:
                raise model.ModelError("clocks cannot index processes")
            index_src, index_static = isrc, istatic
        elif len(procs) > 1:
            raise model.ModelError(f"{head!r} has {len(procs)} instances; an index is required")
        if not ops or ops[0][0] != "attr":
            raise model.ModelError(f"process {head!r} must select a location or function")
        member = ops.pop(0)[1]
        proc0 = procs[0]
        template = self.net.processes[proc0].template
        loc_ids = self.cn.loc_ids[proc0]
        if member in loc_ids:
            if ops:
                raise model.ModelError(f"location test {head}.{member} takes no arguments")
            locid = loc_ids[member]
            if index_src is None:
                return f"(L[{proc0}] == {locid})", None, None
            if index_static is not None:
                if 0 <= index_static < len(procs):
                    return f"(L[{procs[index_static]}] == {locid})", None, None
                return "False", 0, None
            key = f"_fam_{head}"
            self.ns[key] = procs
            return f"_ploc(L, {key}, ({index_src}), {locid})", None, None
        if member in template.functions:
            if not ops or ops[0][0] != "call":
                raise model.ModelError(f"model function {head}.{member} must be called")
            if not model._is_pure(template.functions[member], template):
                raise model.ModelError(f"query calls impure function {member!r}")
            call_args = ops.pop(0)[1]
            if ops:
                raise model.ModelError(f"malformed call of {head}.{member}")
            f = template.functions[member]
            if len(call_args) != len(f.params):
                raise model.ModelError(
                    f"{head}.{member} expects {len(f.params)} args, got {len(call_args)}")
            arg_srcs = []
            for a in call_args:
                asrc, _astatic, aclock = self._gen(a, scope, where, clocks_ok=False)
                if aclock is not None:
                    raise model.ModelError("clocks cannot be passed to functions")
                arg_srcs.append(asrc)
            tail = "".join(f", {s}" for s in arg_srcs)
            fns_key = f"_pfn_{head}_{member}"
            if fns_key not in self.ns:
                self.ns[fns_key] = [self.cn.proc_fn_tables[p][member] for p in procs]
            if index_src is None:
                return f"{fns_key}[0](V, C{tail})", None, None
            if index_static is not None:
                if not (0 <= index_static < len(procs)):
                    raise model.ModelError(f"process index {index_static} out of range for {head!r}")
                return f"{fns_key}[{index_static}](V, C{tail})", None, None
            return f"_pcall({fns_key}, ({index_src}), V, C{tail})", None, None
        raise model.ModelError(f"{head!r} has no location or function {member!r}")


def compile_state_formula(net: model.Network, ast, text: str) -> StateFormula:
    qc = _QueryCompiler(net)
    scope = model._Scope(qc, None, None, {})
    src, _static, clock = qc._gen(ast, scope, "query", clocks_ok=False)
    if clock is not None:
        raise model.ModelError("clock constraints are not supported in queries")
    fsrc = f"def q(L, V, C, K):\n    return bool({src})\n"
    exec(fsrc, qc.ns)
    return StateFormula(text, ast, qc.ns["q"])


# ---------------------------------------------------------------------------
# Parsing

def parse_query(text: str, net: model.Network, name: str = "") -> Query:
    """Parse one query: a path quantifier applied to a state formula, or a
    top-level leads-to `f --> g`.  Nested path quantifiers are rejected."""
    stripped = text.strip()
    shape = None
    rest = stripped
    for s in SHAPES:
        if stripped.startswith(s):
            shape = s
            rest = stripped[len(s):]
            break
    try:
        p = E.Parser(rest)
        ast1 = p.expression()
        if p.at("-->"):
            if shape is not None:
                tok = p.peek()
                raise E.ParseError("'-->' cannot be nested under a path quantifier",
                                   rest, tok.pos)
            p.next()
            ast2 = p.expression()
            if not p.done():
                raise E.ParseError(f"trailing input {p.peek().text!r}", rest, p.peek().pos)
            f1 = compile_state_formula(net, ast1, rest)
            f2 = compile_state_formula(net, ast2, rest)
            return Query("-->", f1, f2, stripped, name)
        if not p.done():
            raise E.ParseError(f"trailing input {p.peek().text!r}", rest, p.peek().pos)
        if shape is None:
            raise E.ParseError(
                "query must start with E<>, A[], E[], A<> or contain -->", rest, 0)
        f = compile_state_formula(net, ast1, rest)
        return Query(shape, f, None, stripped, name)
    except model.ModelError as exc:
        raise E.ParseError(str(exc), rest, 0) from exc


_NAME_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9.~\-]*)\s*:\s*(.*)$")


def parse_query_file(text: str, net: model.Network) -> list:
    """One query per non-comment line; optional `name:` prefix; whole-line
    `//` and `#` comments.  Returns a list of named Query objects."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("//") or line.startswith("#"):
            continue
        name = f"q{len(out) + 1}"
        m = _NAME_RE.match(line)
        if m and not any(line.startswith(s) for s in SHAPES):
            name, line = m.group(1), m.group(2)
        try:
            out.append(parse_query(line, net, name))
        except E.ParseError as exc:
            raise E.ParseError(f"line {lineno}: {exc.message}", raw, max(exc.pos, 0)) from exc
    return out


# ---------------------------------------------------------------------------
# Evaluation

class EvalContext:
    """Per-graph evaluation context; memoizes the `deadlock` predicate."""

    def __init__(self, net_or_compiled):
        self.cn = net_or_compiled.compiled() if isinstance(net_or_compiled, model.Network) \
            else net_or_compiled
        self._deadlock_memo: dict = {}

    def deadlock(self, L, V, C) -> bool:
        key = (L, V, C)
        got = self._deadlock_memo.get(key)
        if got is None:
            got = is_deadlock(self.cn, State(L, V, C))
            self._deadlock_memo[key] = got
        return got


def eval_state_formula(phi: StateFormula, state: State, ctx: EvalContext) -> bool:
    return phi.fn(state.locs, state.vars, state.clocks, ctx.deadlock)


class _Truth:
    """Lazy per-state truth table for one formula over a graph."""

    def __init__(self, graph: StateGraph, phi: StateFormula, ctx: EvalContext):
        self.graph = graph
        self.phi = phi
        self.ctx = ctx
        self.memo = [None] * graph.n_states

    def __call__(self, sid: int) -> bool:
        v = self.memo[sid]
        if v is None:
            s = self.graph.states[sid]
            v = bool(self.phi.fn(s.locs, s.vars, s.clocks, self.ctx.deadlock))
            self.memo[sid] = v
        return v


# ---------------------------------------------------------------------------
# Checking

def check(graph: StateGraph, q: Query) -> Verdict:
    """Decide `q` over the explored graph.  On a truncated graph, only an
    `E<>` witness already inside the explored fragment is a valid verdict;
    everything else raises TruncatedGraphError."""
    ctx = EvalContext(graph.compiled)
    if q.shape == "E<>":
        return _check_exists_eventually(graph, q, ctx)
    if graph.truncated:
        raise TruncatedGraphError(
            f"graph truncated at {graph.n_states} states; cannot decide {q.shape}")
    if q.shape == "A[]":
        return _check_always_globally(graph, q, ctx)
    if q.shape == "E[]":
        return _check_exists_globally(graph, q, ctx)
    if q.shape == "A<>":
        return _check_always_eventually(graph, q, ctx)
    if q.shape == "-->":
        return _check_leads_to(graph, q, ctx)
    raise CheckError(f"unknown query shape {q.shape!r}")


def _check_exists_eventually(graph, q, ctx) -> Verdict:
    phi = _Truth(graph, q.formula, ctx)
    path = shortest_path(graph, phi)
    if path is not None:
        return Verdict(True, q, _materialize(graph, path), None, graph.truncated)
    if graph.truncated:
        raise TruncatedGraphError(
            "graph truncated and no witness found inside the explored fragment")
    return Verdict(False, q)


def _check_always_globally(graph, q, ctx) -> Verdict:
    phi = _Truth(graph, q.formula, ctx)
    path = shortest_path(graph, lambda sid: not phi(sid))
    if path is None:
        return Verdict(True, q)
    return Verdict(False, q, _materialize(graph, path))


def _check_exists_globally(graph, q, ctx) -> Verdict:
    phi = _Truth(graph, q.formula, ctx)
    found = _maximal_phi_path(graph, phi)
    if found is None:
        return Verdict(False, q)
    path, cycle_index = found
    return Verdict(True, q, _materialize(graph, path), cycle_index)


def _check_always_eventually(graph, q, ctx) -> Verdict:
    phi = _Truth(graph, q.formula, ctx)
    found = _maximal_phi_path(graph, lambda sid: not phi(sid))
    if found is None:
        return Verdict(True, q)
    path, cycle_index = found
    return Verdict(False, q, _materialize(graph, path), cycle_index)


def _check_leads_to(graph, q, ctx) -> Verdict:
    phi = _Truth(graph, q.formula, ctx)
    psi = _Truth(graph, q.formula2, ctx)
    phi_states = [sid for sid in range(graph.n_states) if phi(sid)]
    if not phi_states:
        return Verdict(True, q)
    bad, seeds = _states_with_maximal_avoiding_path(graph, psi)
    offenders = [sid for sid in phi_states if sid in bad]
    if not offenders:
        return Verdict(True, q)
    # Counterexample: shortest path to an offending phi-state, then a
    # psi-avoiding continuation to a dead end or around a cycle.
    head = shortest_path(graph, lambda sid: sid in bad and phi(sid))
    start = head[-1]
    tail, cycle_index = _avoiding_continuation(graph, psi, start, seeds)
    full = head + tail[1:]
    ci = None
    if cycle_index is not None:
        offset = (len(head) - 1) // 2
        ci = offset + cycle_index
    return Verdict(False, q, _materialize(graph, full), ci)


# -- path machinery

def _materialize(graph, id_path: list) -> list:
    out = []
    for i, item in enumerate(id_path):
        out.append(graph.states[item] if i % 2 == 0 else item)
    return out


def _sub_adjacency(graph, pred):
    def adj(sid):
        return [(label, tid) for label, tid in graph.adjacency(sid) if pred(tid)]
    return adj


def _maximal_phi_path(graph, phi):
    """A maximal path that stays in the phi-region, as
    ([sid, label, sid, ...], cycle_index|None), or None.

    The path starts at the initial state (which must satisfy phi), and either
    ends in a state with no successors in the full graph, or closes a lasso
    whose final state repeats the state at position `cycle_index`.
    """
    init = graph.initial
    if not phi(init):
        return None
    adj = _sub_adjacency(graph, phi)
    # BFS for shortest stems within the region; collect the region.
    parent = {init: None}
    order = [init]
    depth = {init: 0}
    i = 0
    while i < len(order):
        sid = order[i]
        i += 1
        for label, tid in adj(sid):
            if tid not in parent:
                parent[tid] = (sid, label)
                depth[tid] = depth[sid] + 1
                order.append(tid)
    region = set(order)
    # Dead end in the FULL graph?
    for sid in order:  # BFS order => shortest stem first
        if not graph.adjacency(sid):
            return _unwind_parents(parent, sid), None
    # Cycle inside the region: peel states with no region-successor.
    out_deg = {sid: sum(1 for _l, t in adj(sid)) for sid in region}
    stack = [sid for sid in order if out_deg[sid] == 0]
    alive = set(region)
    rev: dict = {}
    for sid in region:
        for _label, tid in adj(sid):
            rev.setdefault(tid, []).append(sid)
    while stack:
        dead = stack.pop()
        if dead not in alive:
            continue
        alive.discard(dead)
        for prev in rev.get(dead, ()):
            if prev in alive:
                out_deg[prev] -= 1
                if out_deg[prev] == 0:
                    stack.append(prev)
    if not alive:
        return None
    # Every state in `alive` lies on or leads to a region-cycle.  Take the
    # shallowest (then first-discovered) such state and close a shortest
    # cycle through the region from it.
    entry = min(alive, key=lambda sid: (depth[sid], sid))
    stem = _unwind_parents(parent, entry)
    cyc = _shortest_cycle(graph, phi, alive, entry)
    path = stem + cyc[1:]
    cycle_index = None
    last = path[-1]
    for pos in range(0, len(path), 2):
        if path[pos] == last and pos < len(path) - 1:
            cycle_index = pos // 2
            break
    return path, cycle_index


def _shortest_cycle(graph, phi, alive, entry):
    """A region path entry -> ... -> c -> ... -> c with a shortest closing
    cycle.  Every `alive` state leads (within the live region) to a cycle;
    if `entry` is not itself on one, walk forward until a state that is."""
    prefix: list = []
    cur = entry
    while True:
        closed = _bfs_close_cycle(graph, phi, alive, cur)
        if closed is not None:
            return prefix + closed
        for label, tid in graph.adjacency(cur):
            if tid in alive and phi(tid):
                prefix += [cur, label]
                cur = tid
                break
        else:
            raise CheckError("internal: live region state with no live successor")


def _bfs_close_cycle(graph, phi, alive, start):
    """Shortest cycle start -> ... -> start inside the live region, or None
    when start is not on a cycle."""
    parent = {}
    frontier = [start]
    seen = {start}
    while frontier:
        nxt = []
        for sid in frontier:
            for label, tid in graph.adjacency(sid):
                if tid == start and phi(tid):
                    steps = []
                    cur = sid
                    while cur != start:
                        p, l = parent[cur]
                        steps.append((l, cur))
                        cur = p
                    steps.reverse()
                    out = [start]
                    for l, s in steps:
                        out += [l, s]
                    out += [label, start]
                    return out
                if tid in alive and phi(tid) and tid not in seen:
                    seen.add(tid)
                    parent[tid] = (sid, label)
                    nxt.append(tid)
        frontier = nxt
    return None


def _unwind_parents(parent, sid):
    path = [sid]
    while parent[sid] is not None:
        prev, label = parent[sid]
        path.append(label)
        path.append(prev)
        sid = prev
    path.reverse()
    return path


def _states_with_maximal_avoiding_path(graph, psi):
    """States having a maximal path that never satisfies psi (from the state
    onward, inclusive).  Returns (bad_set, seeds) where seeds are dead ends
    or states on not-psi cycles."""
    n = graph.n_states
    region = [sid for sid in range(n) if not psi(sid)]
    region_set = set(region)
    adj = _sub_adjacency(graph, lambda tid: tid in region_set)
    seeds = set()
    out_deg = {}
    rev: dict = {}
    for sid in region:
        if not graph.adjacency(sid):
            seeds.add(sid)
        deg = 0
        for _label, tid in adj(sid):
            deg += 1
            rev.setdefault(tid, []).append(sid)
        out_deg[sid] = deg
    # Peel to find region-cycles.
    alive = set(region)
    stack = [sid for sid in region if out_deg[sid] == 0]
    while stack:
        dead = stack.pop()
        if dead not in alive:
            continue
        alive.discard(dead)
        for prev in rev.get(dead, ()):
            if prev in alive:
                out_deg[prev] -= 1
                if out_deg[prev] == 0:
                    stack.append(prev)
    seeds |= alive
    # Backward closure of seeds within the region.
    bad = set(seeds)
    stack = list(seeds)
    while stack:
        sid = stack.pop()
        for prev in rev.get(sid, ()):
            if prev not in bad:
                bad.add(prev)
                stack.append(prev)
    return bad, seeds


def _avoiding_continuation(graph, psi, start, seeds):
    """From `start` (not psi), a psi-avoiding path to a seed, extended around
    a cycle when the seed is not a dead end.  Returns (id_path, cycle_index
    relative to the path's state positions)."""
    region = lambda tid: not psi(tid)
    parent = {start: None}
    frontier = [start]
    target = None
    if start in seeds:
        target = start
    while frontier and target is None:
        nxt = []
        for sid in frontier:
            for label, tid in graph.adjacency(sid):
                if not region(tid) or tid in parent:
                    continue
                parent[tid] = (sid, label)
                if tid in seeds:
                    target = tid
                    break
                nxt.append(tid)
            if target is not None:
                break
        frontier = nxt
    if target is None:
        raise CheckError("internal: bad state lost its seed")
    path = _unwind_parents(parent, target)
    if not graph.adjacency(target):
        return path, None
    # Seed on a cycle: close it. The cycle stays within not-psi states.
    alive = {sid for sid in seeds if graph.adjacency(sid)}
    phi_pred = lambda sid: region(sid)
    cyc = _shortest_cycle(graph, phi_pred, alive, target)
    full = path + cyc[1:]
    last = full[-1]
    cycle_index = None
    for pos in range(0, len(full), 2):
        if full[pos] == last and pos < len(full) - 1:
            cycle_index = pos // 2
            break
    return full, cycle_index


# ---------------------------------------------------------------------------
# Trace replay

def replay_trace(net, evidence: list) -> bool:
    """Check that an evidence trace replays through the successor function:
    every (label, next-state) step must be among successors(prev)."""
    if not evidence:
        return True
    for i in range(0, len(evidence) - 2, 2):
        prev, label, nxt = evidence[i], evidence[i + 1], evidence[i + 2]
        succs = successors(net, prev)
        if not any(l == label and s == nxt for l, s in succs):
            return False
    return True
