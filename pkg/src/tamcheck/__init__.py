"""tamcheck: explicit-state model checking for networks of timed automata.

The engine models Uppaal-style networks (templates, binary and broadcast
channels, committed locations, shared variables, bounded-integer state) under
integer-time semantics with clock-ceiling abstraction, explores the reachable
state space exhaustively, and decides a subset of TCTL (`E<>`, `A[]`, `E[]`,
`A<>`, `-->`) with witness and counterexample traces.

The `traffic` subpackage builds a decentralized self-adaptive traffic
monitoring system on top of the engine and ships its standard property suite.
"""

from .model import (
    ArrayType, BoolType, ChannelDecl, Diagnostic, EvalRangeError, IntType,
    ModelError, Network, NetworkBuilder, RecordType, Template, instantiate,
    validate,
)
from .semantics import (
    State, TransitionLabel, initial_state, is_deadlock, successors,
)
from .explore import DEFAULT_STATE_LIMIT, StateGraph, dump_graph, explore
from .query import (
    CheckError, Query, TruncatedGraphError, Verdict, check, eval_state_formula,
    parse_query, parse_query_file, replay_trace,
)

__version__ = "0.1.0"
