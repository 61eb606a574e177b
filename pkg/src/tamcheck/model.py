"""Data model for networks of timed automata.

A `Network` is a set of process instances (instantiated templates) together
with global constants, variables, channels and integer-range typedefs.  It is
built programmatically through `NetworkBuilder`; expressions inside guards,
updates, invariants and synchronisations use the C-like syntax from `expr`.

Construction is eager about structural mistakes (dangling locations,
duplicate names, undeclared channels), while `validate()` re-derives every
invariant on a finished network and reports diagnostics instead of raising,
so that hand-assembled or mutated networks can be inspected.

`Network.compiled()` lowers the whole model to flat slot vectors and Python
closures; that compiled form is what the state-space semantics executes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as E

DEFAULT_INT_LO = -32768
DEFAULT_INT_HI = 32767


class ModelError(Exception):
    pass


class EvalRangeError(Exception):
    """Out-of-range index or assignment during expression evaluation."""


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class IntType:
    lo: int = DEFAULT_INT_LO
    hi: int = DEFAULT_INT_HI

    def __post_init__(self):
        if self.lo > self.hi:
            raise ModelError(f"empty integer range [{self.lo},{self.hi}]")


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class ArrayType:
    elem: object
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ModelError(f"array size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class RecordType:
    fields: tuple  # of (name, type)


BOOL = BoolType()


def slots_of(t) -> int:
    if isinstance(t, (IntType, BoolType)):
        return 1
    if isinstance(t, ArrayType):
        return t.size * slots_of(t.elem)
    if isinstance(t, RecordType):
        return sum(slots_of(ft) for _, ft in t.fields)
    raise ModelError(f"unknown type {t!r}")


# ---------------------------------------------------------------------------
# Structural model

@dataclass
class Location:
    name: str
    committed: bool = False
    invariant: object = None  # expr AST or None
    invariant_text: str = ""


@dataclass
class Edge:
    src: str
    dst: str
    guard: object = None          # expr AST or None (true)
    sync: object = None           # E.SyncRef or None
    update: tuple = ()            # statement ASTs
    guard_text: str = ""
    sync_text: str = ""
    update_text: str = ""


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    kind: str  # 'binary' | 'broadcast'
    arity: int = 1

    def __post_init__(self):
        if self.kind not in ("binary", "broadcast"):
            raise ModelError(f"channel kind must be binary or broadcast, got {self.kind!r}")
        if self.arity < 1:
            raise ModelError(f"channel arity must be >= 1, got {self.arity}")


@dataclass
class GlobalVar:
    name: str
    type: object
    init: object  # python int/bool or nested lists matching the type shape


@dataclass
class Template:
    """A parameterised automaton.  Create through `NetworkBuilder.new_template`."""

    name: str
    parameters: tuple = ()  # of (name, IntType)
    locations: list = field(default_factory=list)
    initial: str = ""
    edges: list = field(default_factory=list)
    clocks: list = field(default_factory=list)
    locals: list = field(default_factory=list)      # of GlobalVar-shaped decls
    functions: dict = field(default_factory=dict)   # name -> E.FuncDef
    _builder: object = None

    def location_names(self):
        return [l.name for l in self.locations]

    def _loc(self, name: str) -> Location:
        for l in self.locations:
            if l.name == name:
                return l
        raise ModelError(f"template {self.name}: unknown location {name!r}")

    def add_location(self, name: str, *, initial: bool = False,
                     committed: bool = False, invariant: str | None = None) -> "Template":
        if any(l.name == name for l in self.locations):
            raise ModelError(f"template {self.name}: duplicate location {name!r}")
        if committed and invariant:
            raise ModelError(f"template {self.name}: committed location {name!r} "
                             "cannot carry a clock invariant")
        inv_ast = E.parse_expression(invariant) if invariant else None
        self.locations.append(Location(name, committed, inv_ast, invariant or ""))
        if initial:
            if self.initial:
                raise ModelError(f"template {self.name}: initial location already set to {self.initial!r}")
            self.initial = name
        return self

    def add_edge(self, src: str, dst: str, *, guard: str | None = None,
                 sync: str | None = None, update: str | None = None) -> "Template":
        names = set(self.location_names())
        if src not in names:
            raise ModelError(f"template {self.name}: edge source {src!r} does not exist")
        if dst not in names:
            raise ModelError(f"template {self.name}: edge target {dst!r} does not exist")
        guard_ast = E.parse_expression(guard) if guard else None
        sync_ref = E.parse_sync(sync) if sync else None
        update_ast = E.parse_update(update) if update else ()
        if sync_ref is not None and self._builder is not None:
            if sync_ref.channel not in self._builder.channels:
                raise ModelError(
                    f"template {self.name}: edge {src}->{dst} uses undeclared channel {sync_ref.channel!r}")
        self.edges.append(Edge(src, dst, guard_ast, sync_ref, update_ast,
                               guard or "", sync or "", update or ""))
        return self

    def add_clock(self, name: str) -> "Template":
        if name in self.clocks:
            raise ModelError(f"template {self.name}: duplicate clock {name!r}")
        self.clocks.append(name)
        return self

    def add_local(self, name: str, type: object, init: object = 0) -> "Template":
        if any(v.name == name for v in self.locals):
            raise ModelError(f"template {self.name}: duplicate local {name!r}")
        t = self._builder.resolve_type(type) if self._builder else type
        self.locals.append(GlobalVar(name, t, init))
        return self

    def add_function(self, text: str) -> "Template":
        f = E.parse_function(text)
        if f.name in self.functions:
            raise ModelError(f"template {self.name}: duplicate function {f.name!r}")
        self.functions[f.name] = f
        return self


@dataclass
class ProcessInstance:
    name: str
    family: str
    index: int | None
    template: Template
    params: dict


@dataclass(frozen=True)
class Diagnostic:
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


def instantiate(template: Template, actuals: dict | None, name: str) -> ProcessInstance:
    """Close a template over concrete parameter values.

    Raises ModelError on arity mismatch, out-of-range actuals or unknown
    parameter names.  Instantiation is deterministic: equal templates and
    actuals produce structurally identical processes.
    """
    actuals = dict(actuals or {})
    declared = {p: t for p, t in template.parameters}
    if set(actuals) != set(declared):
        missing = sorted(set(declared) - set(actuals))
        extra = sorted(set(actuals) - set(declared))
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise ModelError(f"instantiate {template.name}: parameter arity mismatch: {', '.join(parts)}")
    for p, v in actuals.items():
        t = declared[p]
        if not isinstance(v, int) or isinstance(v, bool):
            raise ModelError(f"instantiate {template.name}: parameter {p}={v!r} is not an integer")
        if not (t.lo <= v <= t.hi):
            raise ModelError(
                f"instantiate {template.name}: parameter {p}={v} outside range [{t.lo},{t.hi}]")
    family, index = name, None
    if name.endswith(")") and "(" in name:
        family = name[: name.index("(")]
        inner = name[name.index("(") + 1 : -1]
        if inner.lstrip("-").isdigit():
            index = int(inner)
    return ProcessInstance(name, family, index, template, actuals)


# ---------------------------------------------------------------------------
# Network and builder

@dataclass
class Network:
    constants: dict = field(default_factory=dict)
    typedefs: dict = field(default_factory=dict)      # name -> (lo, hi)
    channels: dict = field(default_factory=dict)      # name -> ChannelDecl
    globals: list = field(default_factory=list)       # GlobalVar
    global_clocks: list = field(default_factory=list)
    templates: dict = field(default_factory=dict)
    processes: list = field(default_factory=list)     # ProcessInstance

    _compiled: object = None

    def constant(self, name: str) -> int:
        return self.constants[name]

    def families(self) -> dict:
        fams = {}
        for i, p in enumerate(self.processes):
            fams.setdefault(p.family, []).append((p.index, i))
        out = {}
        for fam, members in fams.items():
            if all(ix is not None for ix, _ in members):
                members.sort(key=lambda m: m[0])
            out[fam] = [pi for _, pi in members]
        return out

    def compiled(self) -> "CompiledNetwork":
        if self._compiled is None:
            diags = validate(self)
            if diags:
                msgs = "; ".join(str(d) for d in diags[:8])
                raise ModelError(f"network failed validation ({len(diags)} diagnostics): {msgs}")
            self._compiled = _compile(self)
        return self._compiled


class NetworkBuilder:
    """Incremental, eagerly-checked network construction."""

    def __init__(self):
        self.net = Network()
        self.channels = self.net.channels

    # -- declarations

    def declare_constant(self, name: str, value) -> "NetworkBuilder":
        self._fresh(name)
        self.net.constants[name] = self._const_value(value)
        return self

    def declare_range_type(self, name: str, lo, hi) -> "NetworkBuilder":
        self._fresh(name)
        self.net.typedefs[name] = (self._const_value(lo), self._const_value(hi))
        return self

    def declare_channel(self, name: str, *, kind: str = "binary", arity=1) -> "NetworkBuilder":
        self._fresh(name)
        self.net.channels[name] = ChannelDecl(name, kind, self._const_value(arity))
        return self

    def declare_global(self, name: str, type: object, init: object = 0) -> "NetworkBuilder":
        self._fresh(name)
        self.net.globals.append(GlobalVar(name, self.resolve_type(type), init))
        return self

    def declare_global_clock(self, name: str) -> "NetworkBuilder":
        self._fresh(name)
        self.net.global_clocks.append(name)
        return self

    def new_template(self, name: str, parameters=()) -> Template:
        if name in self.net.templates:
            raise ModelError(f"duplicate template {name!r}")
        params = tuple((p, self._param_type(t)) for p, t in parameters)
        t = Template(name, params, _builder=self)
        self.net.templates[name] = t
        return t

    def add_process(self, template: str, actuals: dict | None = None,
                    name: str | None = None) -> "NetworkBuilder":
        if template not in self.net.templates:
            raise ModelError(f"unknown template {template!r}")
        t = self.net.templates[template]
        if name is None:
            if len(t.parameters) == 1 and actuals:
                name = f"{template}({actuals[t.parameters[0][0]]})"
            else:
                name = template
        if any(p.name == name for p in self.net.processes):
            raise ModelError(f"duplicate process name {name!r}")
        self.net.processes.append(instantiate(t, actuals, name))
        return self

    def build(self) -> Network:
        diags = validate(self.net)
        if diags:
            msgs = "\n  ".join(str(d) for d in diags)
            raise ModelError(f"network failed validation:\n  {msgs}")
        return self.net

    # -- helpers

    def _fresh(self, name: str):
        taken = (name in self.net.constants or name in self.net.typedefs
                 or name in self.net.channels or any(g.name == name for g in self.net.globals)
                 or name in self.net.global_clocks)
        if taken:
            raise ModelError(f"duplicate global identifier {name!r}")

    def _const_value(self, v) -> int:
        if isinstance(v, bool):
            return int(v)
        if isinstance(v, int):
            return v
        ast = E.parse_expression(str(v))
        return _fold_const(ast, self.net.constants)

    def _param_type(self, t) -> IntType:
        r = self.resolve_type(t)
        if isinstance(r, BoolType):
            return IntType(0, 1)
        if not isinstance(r, IntType):
            raise ModelError(f"process parameters must have integer-range type, got {t!r}")
        return r

    def resolve_type(self, t):
        if isinstance(t, (IntType, BoolType, ArrayType, RecordType)):
            return t
        if isinstance(t, str):
            s = t.strip()
            if s == "bool":
                return BOOL
            if s == "int":
                return IntType()
            if s in self.net.typedefs:
                lo, hi = self.net.typedefs[s]
                return IntType(lo, hi)
            if s.startswith("int[") and s.endswith("]"):
                inner = s[4:-1]
                parts = _split_top(inner)
                if len(parts) != 2:
                    raise ModelError(f"malformed range type {t!r}")
                return IntType(self._const_value(parts[0]), self._const_value(parts[1]))
        raise ModelError(f"unknown type {t!r}")

    def array(self, elem, size) -> ArrayType:
        return ArrayType(self.resolve_type(elem), self._const_value(size))

    def record(self, fields) -> RecordType:
        return RecordType(tuple((n, self.resolve_type(t)) for n, t in fields))


def _split_top(s: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _fold_const(ast, constants: dict) -> int:
    if isinstance(ast, E.Num):
        return ast.value
    if isinstance(ast, E.BoolLit):
        return int(ast.value)
    if isinstance(ast, E.Name):
        if ast.ident in constants:
            return constants[ast.ident]
        raise ModelError(f"unknown constant {ast.ident!r}")
    if isinstance(ast, E.Unary) and ast.op == "-":
        return -_fold_const(ast.operand, constants)
    if isinstance(ast, E.Bin):
        a = _fold_const(ast.left, constants)
        b = _fold_const(ast.right, constants)
        return _apply_int_op(ast.op, a, b)
    raise ModelError("expression is not constant")


def _apply_int_op(op: str, a: int, b: int):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return _tdiv(a, b)
    if op == "%":
        return _tmod(a, b)
    raise ModelError(f"operator {op!r} not allowed in constant expression")


def _tdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _tmod(a: int, b: int) -> int:
    return a - _tdiv(a, b) * b


def _ix(i, n: int, what: str) -> int:
    if 0 <= i < n:
        return i
    raise EvalRangeError(f"{what} index {i} out of range [0,{n})")


def _chk(v, lo: int, hi: int, what: str) -> int:
    v = int(v)
    if lo <= v <= hi:
        return v
    raise EvalRangeError(f"assignment {what} = {v} outside range [{lo},{hi}]")


def _b(v) -> int:
    return 1 if v else 0


# ---------------------------------------------------------------------------
# Validation

def validate(net: Network) -> list:
    """Re-derive every structural and resolution invariant; returns diagnostics."""
    diags: list = []

    seen_templates = set()
    for t in net.templates.values():
        seen_templates.add(t.name)
        where = f"template {t.name}"
        names = t.location_names()
        if len(set(names)) != len(names):
            diags.append(Diagnostic(where, "duplicate location names"))
        if not t.locations:
            diags.append(Diagnostic(where, "template has no locations"))
            continue
        if not t.initial:
            diags.append(Diagnostic(where, "no initial location"))
        elif t.initial not in names:
            diags.append(Diagnostic(where, f"initial location {t.initial!r} does not exist"))
        for l in t.locations:
            if l.committed and l.invariant is not None:
                diags.append(Diagnostic(f"{where} location {l.name}",
                                        "committed locations cannot carry a clock invariant"))
        for e in t.edges:
            ewhere = f"{where} edge {e.src}->{e.dst}"
            if e.src not in names or e.dst not in names:
                diags.append(Diagnostic(ewhere, "edge endpoint does not exist"))
            if e.sync is not None:
                ch = net.channels.get(e.sync.channel)
                if ch is None:
                    diags.append(Diagnostic(ewhere, f"unknown channel {e.sync.channel!r}"))
                elif e.sync.index is not None:
                    try:
                        v = _fold_const_with_params(e.sync.index, net.constants, t)
                    except ModelError:
                        v = None  # dynamic index, checked at evaluation time
                    if v is not None and not (0 <= v < ch.arity):
                        diags.append(Diagnostic(
                            ewhere, f"channel index {v} out of bounds for {ch.name}[{ch.arity}]"))
                elif ch.arity > 1:
                    diags.append(Diagnostic(ewhere, f"channel {ch.name} is an array and needs an index"))

    fam_names = set()
    for p in net.processes:
        where = f"process {p.name}"
        if p.name in fam_names:
            diags.append(Diagnostic(where, "duplicate process name"))
        fam_names.add(p.name)
        if p.template.name not in seen_templates:
            diags.append(Diagnostic(where, f"unknown template {p.template.name!r}"))
        declared = dict(p.template.parameters)
        for pname, v in p.params.items():
            t = declared.get(pname)
            if t is None:
                diags.append(Diagnostic(where, f"unknown parameter {pname!r}"))
            elif not (t.lo <= v <= t.hi):
                diags.append(Diagnostic(where, f"parameter {pname}={v} outside [{t.lo},{t.hi}]"))

    # Name resolution, expression well-formedness, clock-constraint shape and
    # initial values are checked by a dry-run compile.
    try:
        _compile(net, diag_sink=diags)
    except ModelError as exc:  # compile-stopper not already reported
        diags.append(Diagnostic("network", str(exc)))
    return diags


def _fold_const_with_params(ast, constants: dict, template: Template) -> int:
    env = dict(constants)
    # Parameters are not concrete at template level; folding fails for them,
    # which callers treat as "dynamic".
    return _fold_const(ast, env)


# ---------------------------------------------------------------------------
# Compilation to flat slots + Python closures

@dataclass
class CEdge:
    proc: int
    eid: int
    src: int
    dst: int
    guard: object    # callable(V, C) -> bool, or None
    sync: object     # (chan_id, direction, index) index: int | callable | None
    update: object   # callable(V, C) -> None, or None
    text: str


class CompiledNetwork:
    def __init__(self, net: Network):
        self.net = net
        self.n_procs = len(net.processes)
        self.proc_names = [p.name for p in net.processes]
        self.var_names: list = []
        self.var_ranges: list = []
        self.var_init: list = []
        self.clock_names: list = []
        self.clock_ceil: list = []
        self.loc_names: list = []       # per proc
        self.committed: list = []       # per proc: frozenset of loc ids
        self.invariants: list = []      # per proc: list per loc of callable(C)->bool | None
        self.edges_by_loc: list = []    # per proc: list per loc of [CEdge]
        self.initial_locs: tuple = ()
        self.channel_ids: dict = {}     # name -> id
        self.channel_list: list = []    # ChannelDecl by id
        self.receivers: list = []       # per chan id: [(proc, src_loc, CEdge)]
        self.broadcast: list = []       # per chan id: bool
        self.proc_fn_tables: list = []  # per proc: {fname: callable(V,C,*args)}
        self.fam_procs: dict = {}       # family -> [proc indices]
        self.loc_ids: list = []         # per proc: {name: id}
        self.var_slot_by_name: dict = {}
        self._layout: tuple = ()        # resolution tables, reused by queries


def _compile(net: Network, diag_sink: list | None = None) -> CompiledNetwork:
    c = _Compiler(net, diag_sink)
    return c.run()


class _Scope:
    """Per-process name resolution: params, locals, globals, functions."""

    def __init__(self, comp, proc_index: int | None, template: Template | None, params: dict):
        self.comp = comp
        self.proc_index = proc_index
        self.template = template
        self.params = params
        self.bound: dict = {}

    def lookup(self, name: str):
        if name in self.bound:
            return ("bound", self.bound[name])
        if self.template is not None:
            if name in self.params:
                return ("const", self.params[name])
            if name in self.template.functions:
                return ("func", name)
            local_key = (self.proc_index, name)
            if local_key in self.comp.local_layout:
                return ("var", self.comp.local_layout[local_key])
            clock_key = (self.proc_index, name)
            if clock_key in self.comp.local_clocks:
                return ("clock", self.comp.local_clocks[clock_key])
        if name in self.comp.net.constants:
            return ("const", self.comp.net.constants[name])
        if name in self.comp.global_layout:
            return ("var", self.comp.global_layout[name])
        if name in self.comp.global_clock_ids:
            return ("clock", self.comp.global_clock_ids[name])
        return None


@dataclass
class _LayoutNode:
    base: int
    type: object
    path: str


class _Compiler:
    def __init__(self, net: Network, diag_sink: list | None = None):
        self.net = net
        self.out = CompiledNetwork(net)
        self.diags = diag_sink
        self.global_layout: dict = {}
        self.local_layout: dict = {}
        self.global_clock_ids: dict = {}
        self.local_clocks: dict = {}
        self.ceil: dict = {}
        self.tmp_counter = 0

    # -- diagnostics

    def report(self, where: str, message: str):
        if self.diags is not None:
            self.diags.append(Diagnostic(where, message))
        else:
            raise ModelError(f"{where}: {message}")

    # -- layout

    def run(self) -> CompiledNetwork:
        out = self.out
        slot = 0
        for g in self.net.globals:
            self.global_layout[g.name] = _LayoutNode(slot, g.type, g.name)
            slot = self._emit_slots(g.name, g.type, g.init, slot)
        for k, name in enumerate(self.net.global_clocks):
            self.global_clock_ids[name] = k
        clock_id = len(self.net.global_clocks)
        out.clock_names = list(self.net.global_clocks)

        for pi, proc in enumerate(self.net.processes):
            t = proc.template
            for lv in t.locals:
                self.local_layout[(pi, lv.name)] = _LayoutNode(slot, lv.type, f"{proc.name}.{lv.name}")
                slot = self._emit_slots(f"{proc.name}.{lv.name}", lv.type, lv.init, slot)
            for cn in t.clocks:
                self.local_clocks[(pi, cn)] = clock_id
                out.clock_names.append(f"{proc.name}.{cn}")
                clock_id += 1

        for cid, (name, ch) in enumerate(self.net.channels.items()):
            out.channel_ids[name] = cid
            out.channel_list.append(ch)
            out.receivers.append([])
            out.broadcast.append(ch.kind == "broadcast")

        out.fam_procs = self.net.families()

        initial = []
        for pi, proc in enumerate(self.net.processes):
            t = proc.template
            loc_ids = {l.name: i for i, l in enumerate(t.locations)}
            out.loc_ids.append(loc_ids)
            out.loc_names.append([l.name for l in t.locations])
            out.committed.append(frozenset(i for i, l in enumerate(t.locations) if l.committed))
            initial.append(loc_ids.get(t.initial, 0))
        out.initial_locs = tuple(initial)

        # Compile per-process functions, invariants and edges.
        for pi, proc in enumerate(self.net.processes):
            self._compile_process(pi, proc)

        # Resolution-check templates that no process instantiates.
        used = {p.template.name for p in self.net.processes}
        for t in self.net.templates.values():
            if t.name not in used:
                self._dry_check_template(t)

        out.clock_ceil = [self.ceil.get(k, 0) for k in range(len(out.clock_names))]
        out.var_init = tuple(out.var_init)
        out._layout = (self.global_layout, self.local_layout,
                       self.global_clock_ids, self.local_clocks)
        return out

    def _emit_slots(self, path: str, t, init, slot: int) -> int:
        out = self.out
        if isinstance(t, (IntType, BoolType)):
            lo, hi = (0, 1) if isinstance(t, BoolType) else (t.lo, t.hi)
            if isinstance(init, bool):
                v = int(init)
            elif isinstance(init, int):
                v = init
            else:
                self.report(f"variable {path}", f"initial value {init!r} is not an integer")
                v = lo
            if not (lo <= v <= hi):
                self.report(f"variable {path}", f"initial value {v} outside range [{lo},{hi}]")
                v = min(max(v, lo), hi)
            out.var_names.append(path)
            out.var_ranges.append((lo, hi))
            out.var_init.append(v)
            out.var_slot_by_name[path] = slot
            return slot + 1
        if isinstance(t, ArrayType):
            if not isinstance(init, (list, tuple)):
                init = [init] * t.size
            if len(init) != t.size:
                self.report(f"variable {path}", f"initializer length {len(init)} != array size {t.size}")
                init = (list(init) + [0] * t.size)[: t.size]
            for i in range(t.size):
                slot = self._emit_slots(f"{path}[{i}]", t.elem, init[i], slot)
            return slot
        if isinstance(t, RecordType):
            if not isinstance(init, dict):
                init = {}
            for fname, ftype in t.fields:
                slot = self._emit_slots(f"{path}.{fname}", ftype, init.get(fname, 0), slot)
            return slot
        self.report(f"variable {path}", f"unknown type {t!r}")
        return slot

    # -- per-process compilation

    def _namespace(self) -> dict:
        return {"_ix": _ix, "_chk": _chk, "_b": _b, "_tdiv": _tdiv, "_tmod": _tmod}

    def _guarded(self, where: str, fn, *args):
        try:
            return fn(*args)
        except (ModelError, E.ParseError, EvalRangeError) as exc:
            self.report(where, str(exc))
            return None

    def _compile_process(self, pi: int, proc: ProcessInstance):
        out = self.out
        t = proc.template
        scope = _Scope(self, pi, t, proc.params)
        ns = self._namespace()

        order = self._function_order(t, f"process {proc.name}")
        fn_table = {}
        for fname in order:
            f = t.functions[fname]
            where = f"process {proc.name} function {fname}"
            src = self._guarded(where, self._gen_function, f, scope, where)
            if src is not None:
                fn = self._exec_fn(src, f"F_{fname}", ns, where)
                if fn is not None:
                    fn_table[fname] = fn
        out.proc_fn_tables.append(fn_table)

        invs = []
        for loc in t.locations:
            if loc.invariant is None:
                invs.append(None)
                continue
            where = f"process {proc.name} location {loc.name}"
            src = self._guarded(where, self._gen_invariant, loc.invariant, scope, where)
            invs.append(self._exec_fn(src, "inv", ns, where) if src else None)
        out.invariants.append(invs)

        by_loc = [[] for _ in t.locations]
        loc_ids = out.loc_ids[pi]
        for eid, e in enumerate(t.edges):
            where = f"process {proc.name} edge {e.src}->{e.dst}"
            if e.src not in loc_ids or e.dst not in loc_ids:
                continue  # reported by structural validation
            guard_fn = None
            if e.guard is not None:
                src = self._guarded(where, self._gen_guard, e.guard, scope, where)
                guard_fn = self._exec_fn(src, "g", ns, where) if src else None
                if guard_fn is None:
                    continue
            sync = None
            if e.sync is not None:
                ch = self.net.channels.get(e.sync.channel)
                if ch is None:
                    continue  # reported by structural validation
                cid = out.channel_ids[e.sync.channel]
                if e.sync.index is None:
                    if ch.arity > 1:
                        continue  # reported by structural validation
                    index: object = 0
                else:
                    gen = self._guarded(where, self._expr, e.sync.index, scope, where, False)
                    if gen is None:
                        continue
                    src_code, static = gen
                    if static is not None:
                        if not (0 <= static < ch.arity):
                            self.report(where, f"channel index {static} out of bounds for "
                                               f"{ch.name}[{ch.arity}]")
                            continue
                        index = static
                    else:
                        fsrc = (f"def ixf(V, C):\n"
                                f"    return _ix({src_code}, {ch.arity}, {ch.name!r})\n")
                        index = self._exec_fn(fsrc, "ixf", ns, where)
                        if index is None:
                            continue
                sync = (cid, e.sync.direction, index)
            update_fn = None
            if e.update:
                src = self._guarded(where, self._gen_update, e.update, scope, where)
                update_fn = self._exec_fn(src, "u", ns, where) if src else None
                if update_fn is None and src is None:
                    continue
            text = f"{proc.name}: {e.src} -> {e.dst}"
            if e.sync_text:
                text += f" {e.sync_text}"
            ce = CEdge(pi, eid, loc_ids[e.src], loc_ids[e.dst], guard_fn, sync, update_fn, text)
            by_loc[ce.src].append(ce)
            if sync is not None and sync[1] == "receive":
                out.receivers[sync[0]].append((pi, ce.src, ce))
        out.edges_by_loc.append(by_loc)

    def _dry_check_template(self, t: Template):
        """Compile a never-instantiated template against placeholder
        parameters so resolution problems still surface as diagnostics."""
        params = {p: tt.lo for p, tt in t.parameters}
        key = ("dry", t.name)
        for lv in t.locals:
            self.local_layout[(key, lv.name)] = _LayoutNode(0, lv.type, f"{t.name}.{lv.name}")
        for i, cname in enumerate(t.clocks):
            self.local_clocks[(key, cname)] = 1_000_000 + i  # never materialized
        scope = _Scope(self, key, t, params)
        ns = self._namespace()
        for fname in self._function_order(t, f"template {t.name}"):
            f = t.functions[fname]
            where = f"template {t.name} function {fname}"
            src = self._guarded(where, self._gen_function, f, scope, where)
            if src:
                self._exec_fn(src, f"F_{fname}", ns, where)
        for loc in t.locations:
            if loc.invariant is not None:
                where = f"template {t.name} location {loc.name}"
                self._guarded(where, self._gen_invariant, loc.invariant, scope, where)
        names = set(t.location_names())
        for e in t.edges:
            where = f"template {t.name} edge {e.src}->{e.dst}"
            if e.src not in names or e.dst not in names:
                continue
            if e.guard is not None:
                self._guarded(where, self._gen_guard, e.guard, scope, where)
            if e.sync is not None and e.sync.index is not None \
                    and e.sync.channel in self.net.channels:
                self._guarded(where, self._expr, e.sync.index, scope, where, False)
            if e.update:
                self._guarded(where, self._gen_update, e.update, scope, where)

    def _exec_fn(self, src: str, name: str, ns: dict, where: str):
        try:
            exec(src, ns)
            return ns[name]
        except SyntaxError as exc:
            self.report(where, f"compilation failed: {exc}\n{src}")
            return None

    def _function_order(self, t: Template, where: str) -> list:
        # Call-dependency order; recursion is rejected.
        deps = {}
        for fname, f in t.functions.items():
            calls = set()
            for node in E.walk(f):
                if isinstance(node, E.Postfix) and node.ops and node.ops[0][0] == "call":
                    if node.base.ident in t.functions:
                        calls.add(node.base.ident)
            deps[fname] = calls
        order, mark = [], {}

        def visit(fn, stack):
            if mark.get(fn) == 2:
                return
            if mark.get(fn) == 1:
                self.report(where, f"recursive function {fn!r} is not supported")
                return
            mark[fn] = 1
            for d in deps[fn]:
                visit(d, stack)
            mark[fn] = 2
            order.append(fn)

        for fn in t.functions:
            visit(fn, [])
        return order

    # -- code generation

    def _tmp(self) -> str:
        self.tmp_counter += 1
        return f"_q{self.tmp_counter}"

    def _expr(self, node, scope: _Scope, where: str, clocks_ok: bool = True):
        """Generate (python_source, static_value|None); returns None on error."""
        try:
            src, static, clock = self._gen(node, scope, where, clocks_ok)
            if clock is not None:
                self.report(where, "clocks may only be compared against integer constants")
                return None
            return src, static
        except ModelError as exc:
            self.report(where, str(exc))
            return None

    def _gen(self, node, scope: _Scope, where: str, clocks_ok: bool = True):
        """Returns (src, static_value, clock_index)."""
        if isinstance(node, E.Num):
            return repr(node.value), node.value, None
        if isinstance(node, E.BoolLit):
            return ("True" if node.value else "False"), int(node.value), None
        if isinstance(node, E.DeadlockAtom):
            raise ModelError("'deadlock' is only allowed in queries")
        if isinstance(node, E.Quant):
            raise ModelError("quantifiers are only allowed in queries")
        if isinstance(node, E.Name):
            return self._gen_name_read(node, scope, where, clocks_ok)
        if isinstance(node, E.Postfix):
            return self._gen_postfix_read(node, scope, where)
        if isinstance(node, E.Unary):
            src, static, clock = self._gen(node.operand, scope, where, clocks_ok)
            if clock is not None:
                raise ModelError("clocks may only be compared against integer constants")
            if node.op == "-":
                return (f"(-{src})", None if static is None else -static, None)
            return (f"(not {src})", None if static is None else int(not static), None)
        if isinstance(node, E.Bin):
            return self._gen_bin(node, scope, where, clocks_ok)
        raise ModelError(f"unsupported expression node {type(node).__name__}")

    def _gen_name_read(self, node: E.Name, scope: _Scope, where: str, clocks_ok: bool):
        hit = scope.lookup(node.ident)
        if hit is None:
            raise ModelError(f"unresolved identifier {node.ident!r}")
        kind, payload = hit
        if kind == "const":
            return repr(payload), payload, None
        if kind == "bound":
            return payload, None, None
        if kind == "clock":
            if not clocks_ok:
                raise ModelError(f"clock {node.ident!r} not allowed here")
            return f"C[{payload}]", None, payload
        if kind == "var":
            ln: _LayoutNode = payload
            if not isinstance(ln.type, (IntType, BoolType)):
                raise ModelError(f"{node.ident!r} is not a scalar; index it or select a field")
            return f"V[{ln.base}]", None, None
        if kind == "func":
            raise ModelError(f"function {node.ident!r} must be called")
        raise ModelError(f"cannot read {node.ident!r}")

    def _nav(self, node: E.Postfix, scope: _Scope, where: str):
        """Navigate array/record path; returns (offset_src, static_offset|None, scalar_node)."""
        hit = scope.lookup(node.base.ident)
        if hit is None:
            raise ModelError(f"unresolved identifier {node.base.ident!r}")
        kind, payload = hit
        if kind == "func":
            return None  # caller handles calls
        if kind != "var":
            raise ModelError(f"{node.base.ident!r} cannot be indexed or selected")
        ln: _LayoutNode = payload
        cur_t = ln.type
        parts_static = ln.base
        parts_src: list = []
        path = ln.path
        for op, payload2 in node.ops:
            if op == "call":
                raise ModelError(f"{path!r} is not callable")
            if op == "index":
                if not isinstance(cur_t, ArrayType):
                    raise ModelError(f"{path!r} is not an array")
                stride = slots_of(cur_t.elem)
                isrc, istatic, iclock = self._gen(payload2, scope, where, clocks_ok=False)
                if iclock is not None:
                    raise ModelError("clocks cannot be used as indices")
                if istatic is not None:
                    _ix(istatic, cur_t.size, path)  # compile-time bounds check
                    parts_static += istatic * stride
                    path = f"{path}[{istatic}]"
                else:
                    parts_src.append(f"_ix({isrc}, {cur_t.size}, {path!r}) * {stride}")
                    path = f"{path}[·]"
                cur_t = cur_t.elem
            else:  # attr
                if not isinstance(cur_t, RecordType):
                    raise ModelError(f"{path!r} has no fields")
                off = 0
                ftype = None
                for fname, ft in cur_t.fields:
                    if fname == payload2:
                        ftype = ft
                        break
                    off += slots_of(ft)
                if ftype is None:
                    raise ModelError(f"{path!r} has no field {payload2!r}")
                parts_static += off
                path = f"{path}.{payload2}"
                cur_t = ftype
        if not isinstance(cur_t, (IntType, BoolType)):
            raise ModelError(f"{path!r} is not a scalar")
        if parts_src:
            offset = " + ".join([str(parts_static)] + parts_src)
            return offset, None, (cur_t, path)
        return str(parts_static), parts_static, (cur_t, path)

    def _gen_postfix_read(self, node: E.Postfix, scope: _Scope, where: str):
        hit = scope.lookup(node.base.ident)
        if hit is not None and hit[0] == "func":
            if not node.ops or node.ops[0][0] != "call" or len(node.ops) > 1:
                raise ModelError(f"malformed call of function {node.base.ident!r}")
            f = scope.template.functions[node.base.ident]
            args = node.ops[0][1]
            if len(args) != len(f.params):
                raise ModelError(f"function {node.base.ident!r} expects {len(f.params)} args, got {len(args)}")
            arg_srcs = []
            for a in args:
                src, _static, clock = self._gen(a, scope, where, clocks_ok=False)
                if clock is not None:
                    raise ModelError("clocks cannot be passed to functions")
                arg_srcs.append(src)
            call = f"F_{node.base.ident}(V, C" + "".join(f", {s}" for s in arg_srcs) + ")"
            return call, None, None
        nav = self._nav(node, scope, where)
        offset_src, _static_off, (_t, _path) = nav
        return f"V[{offset_src}]", None, None

    def _gen_bin(self, node: E.Bin, scope: _Scope, where: str, clocks_ok: bool):
        op = node.op
        if op in ("and", "or", "imply"):
            lsrc, lstatic, lclock = self._gen(node.left, scope, where, clocks_ok)
            rsrc, rstatic, rclock = self._gen(node.right, scope, where, clocks_ok)
            if lclock is not None or rclock is not None:
                raise ModelError("clocks may only be compared against integer constants")
            if op == "and":
                src = f"({lsrc} and {rsrc})"
            elif op == "or":
                src = f"({lsrc} or {rsrc})"
            else:
                src = f"((not {lsrc}) or {rsrc})"
            static = None
            if lstatic is not None and rstatic is not None:
                a, b = bool(lstatic), bool(rstatic)
                static = int({"and": a and b, "or": a or b, "imply": (not a) or b}[op])
            return src, static, None
        if op in ("==", "!=", "<", "<=", ">", ">="):
            lsrc, lstatic, lclock = self._gen(node.left, scope, where, clocks_ok)
            rsrc, rstatic, rclock = self._gen(node.right, scope, where, clocks_ok)
            if lclock is not None and rclock is not None:
                raise ModelError("clock-to-clock comparisons are not supported")
            if lclock is not None or rclock is not None:
                if not clocks_ok:
                    raise ModelError("clocks are not allowed in this context")
                const = rstatic if lclock is not None else lstatic
                if const is None:
                    raise ModelError("clocks may only be compared against integer constants")
                k = lclock if lclock is not None else rclock
                self.ceil[k] = max(self.ceil.get(k, 0), abs(const))
                return f"({lsrc} {op} {rsrc})", None, None
            src = f"({lsrc} {op} {rsrc})"
            static = None
            if lstatic is not None and rstatic is not None:
                static = int(eval(f"{lstatic} {op} {rstatic}"))
            return src, static, None
        # arithmetic
        lsrc, lstatic, lclock = self._gen(node.left, scope, where, clocks_ok)
        rsrc, rstatic, rclock = self._gen(node.right, scope, where, clocks_ok)
        if lclock is not None or rclock is not None:
            raise ModelError("clock arithmetic is not supported")
        if op == "/":
            src = f"_tdiv({lsrc}, {rsrc})"
        elif op == "%":
            src = f"_tmod({lsrc}, {rsrc})"
        else:
            src = f"({lsrc} {op} {rsrc})"
        static = None
        if lstatic is not None and rstatic is not None:
            static = _apply_int_op(op, lstatic, rstatic)
        return src, static, None

    def _gen_guard(self, ast, scope: _Scope, where: str) -> str:
        gen = self._gen(ast, scope, where, clocks_ok=True)
        src, _static, clock = gen
        if clock is not None:
            raise ModelError("a bare clock is not a boolean guard")
        self._check_guard_purity(ast, scope, where)
        return f"def g(V, C):\n    return bool({src})\n"

    def _check_guard_purity(self, ast, scope: _Scope, where: str):
        if scope.template is None:
            return
        for node in E.walk(ast):
            if isinstance(node, E.Postfix) and node.base.ident in scope.template.functions:
                f = scope.template.functions[node.base.ident]
                if not _is_pure(f, scope.template):
                    self.report(where, f"guard calls impure function {node.base.ident!r}")

    def _gen_invariant(self, ast, scope: _Scope, where: str) -> str:
        conjuncts = _flatten_and(ast)
        srcs = []
        for c in conjuncts:
            if not isinstance(c, E.Bin) or c.op not in ("<", "<="):
                self.report(where, "invariants must be conjunctions of clock < or <= constant")
                continue
            lsrc, lstatic, lclock = self._gen(c.left, scope, where, clocks_ok=True)
            rsrc, rstatic, rclock = self._gen(c.right, scope, where, clocks_ok=True)
            if lclock is None or rstatic is None:
                self.report(where, "invariants must compare a clock against an integer constant")
                continue
            self.ceil[lclock] = max(self.ceil.get(lclock, 0), abs(rstatic))
            srcs.append(f"({lsrc} {c.op} {rsrc})")
        body = " and ".join(srcs) if srcs else "True"
        return f"def inv(C):\n    return {body}\n"

    def _gen_update(self, stmts, scope: _Scope, where: str) -> str:
        lines = ["def u(V, C):"]
        body = self._gen_stmts(stmts, scope, where, indent=1, in_function=False)
        lines.extend(body or ["    pass"])
        return "\n".join(lines) + "\n"

    def _gen_function(self, f: E.FuncDef, scope: _Scope, where: str) -> str:
        old_bound = dict(scope.bound)
        param_names = []
        for pname, _ptype in f.params:
            py = self._tmp()
            scope.bound[pname] = py
            param_names.append(py)
        header = f"def F_{f.name}(V, C" + "".join(f", {p}" for p in param_names) + "):"
        lines = [header]
        body = self._gen_stmts(f.body, scope, where, indent=1, in_function=True)
        lines.extend(body or ["    pass"])
        if f.ret == "bool":
            lines.append("    return False")
        elif f.ret != "void":
            lines.append("    return 0")
        scope.bound = old_bound
        return "\n".join(lines) + "\n"

    def _gen_stmts(self, stmts, scope: _Scope, where: str, indent: int, in_function: bool) -> list:
        pad = "    " * indent
        lines: list = []
        for s in stmts:
            if isinstance(s, E.SAssign):
                lines.extend(self._gen_assign(s, scope, where, pad))
            elif isinstance(s, E.SCall):
                call_src, _static, _clock = self._gen(s.call, scope, where, clocks_ok=False)
                lines.append(f"{pad}{call_src}")
            elif isinstance(s, E.SIf):
                csrc, _cs, cclock = self._gen(s.cond, scope, where, clocks_ok=False)
                if cclock is not None:
                    self.report(where, "clocks are not allowed in statement conditions")
                    continue
                lines.append(f"{pad}if {csrc}:")
                then = self._gen_stmts(s.then, scope, where, indent + 1, in_function)
                lines.extend(then or [f"{pad}    pass"])
                if s.orelse:
                    lines.append(f"{pad}else:")
                    lines.extend(self._gen_stmts(s.orelse, scope, where, indent + 1, in_function))
            elif isinstance(s, E.SFor):
                lo, hi = self._range_of(s.typename, where)
                py = self._tmp()
                old = scope.bound.get(s.var)
                scope.bound[s.var] = py
                lines.append(f"{pad}for {py} in range({lo}, {hi + 1}):")
                body = self._gen_stmts(s.body, scope, where, indent + 1, in_function)
                lines.extend(body or [f"{pad}    pass"])
                if old is None:
                    del scope.bound[s.var]
                else:
                    scope.bound[s.var] = old
            elif isinstance(s, E.SReturn):
                if not in_function:
                    self.report(where, "'return' is only allowed inside functions")
                    continue
                if s.value is None:
                    lines.append(f"{pad}return None")
                else:
                    vsrc, _vs, vclock = self._gen(s.value, scope, where, clocks_ok=False)
                    if vclock is not None:
                        self.report(where, "clocks cannot be returned")
                        continue
                    lines.append(f"{pad}return {vsrc}")
            else:
                self.report(where, f"unsupported statement {type(s).__name__}")
        return lines

    def _gen_assign(self, s: E.SAssign, scope: _Scope, where: str, pad: str) -> list:
        target = s.target
        if isinstance(target, E.Name):
            hit = scope.lookup(target.ident)
            if hit is None:
                raise ModelError(f"unresolved identifier {target.ident!r}")
            kind, payload = hit
            if kind == "clock":
                vsrc, vstatic, _vc = self._gen(s.value, scope, where, clocks_ok=False)
                if vstatic != 0:
                    self.report(where, f"clock {target.ident!r} may only be reset to 0")
                return [f"{pad}C[{payload}] = 0"]
            if kind == "var":
                ln: _LayoutNode = payload
                if not isinstance(ln.type, (IntType, BoolType)):
                    raise ModelError(f"cannot assign whole aggregate {target.ident!r}")
                return [self._scalar_assign(ln.base, ln.type, ln.path, s.value, scope, where, pad)]
            raise ModelError(f"cannot assign to {target.ident!r}")
        if isinstance(target, E.Postfix):
            nav = self._nav(target, scope, where)
            if nav is None:
                raise ModelError("cannot assign to a function call")
            offset_src, _static, (t, path) = nav
            return [self._scalar_assign(offset_src, t, path, s.value, scope, where, pad)]
        raise ModelError("malformed assignment target")

    def _scalar_assign(self, offset, t, path: str, value, scope: _Scope, where: str, pad: str) -> str:
        vsrc, _vstatic, vclock = self._gen(value, scope, where, clocks_ok=False)
        if vclock is not None:
            raise ModelError("clocks cannot be assigned to variables")
        if isinstance(t, BoolType):
            return f"{pad}V[{offset}] = _b({vsrc})"
        return f"{pad}V[{offset}] = _chk({vsrc}, {t.lo}, {t.hi}, {path!r})"

    def _range_of(self, typename: str, where: str):
        if typename in self.net.typedefs:
            return self.net.typedefs[typename]
        raise ModelError(f"unknown range type {typename!r}")


def _flatten_and(ast) -> list:
    if isinstance(ast, E.Bin) and ast.op == "and":
        return _flatten_and(ast.left) + _flatten_and(ast.right)
    if isinstance(ast, E.BoolLit) and ast.value:
        return []
    return [ast]


def _is_pure(f: E.FuncDef, template: Template) -> bool:
    for node in E.walk(f):
        if isinstance(node, E.SAssign):
            return False
        if isinstance(node, E.SCall):
            callee = template.functions.get(node.call.base.ident)
            if callee is not None and not _is_pure(callee, template):
                return False
    return True
