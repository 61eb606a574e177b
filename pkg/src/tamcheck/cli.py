"""Command line frontend.

    tamcheck verify   --preset paper-R --queries standard
    tamcheck simulate --preset quiet --seed 1 --steps 50
    tamcheck bench    --preset paper-R --cameras 2..6 --queries I1,I2 --reps 3

Exit codes: 0 all queries satisfied, 1 some query violated, 2 input error,
3 state-limit truncation.
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
import sys
import time
from dataclasses import dataclass, field

from . import expr as E
from .explore import DEFAULT_STATE_LIMIT, explore
from .query import TruncatedGraphError, check, parse_query_file, replay_trace
from .semantics import initial_state, render_label, render_state, successors
from .traffic import (
    ConfigError, TrafficConfig, build_model, check_property, load_scenario_file,
    preset_config, scenario_presets, standard_properties,
)

EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_TRUNCATED = 0, 1, 2, 3


@dataclass
class QueryResult:
    name: str
    verdict: str              # 'satisfied' | 'violated' | 'undecided'
    check_ms: float
    states: int
    evidence: list | None = None
    cycle_index: int | None = None


@dataclass
class RunReport:
    config: dict
    explore_ms: float
    states: int
    transitions: int
    truncated: bool
    results: list = field(default_factory=list)

    @property
    def any_violated(self) -> bool:
        return any(r.verdict == "violated" for r in self.results)


class InputError(Exception):
    pass


def _int_range(text: str) -> tuple:
    if ".." in text:
        a, _, b = text.partition("..")
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(text)
    if lo > hi:
        raise InputError(f"camera range {text!r} must be ascending")
    return lo, hi


def _load_config(args, n_cameras: int | None = None) -> TrafficConfig:
    overrides = {}
    if getattr(args, "recover_time", None):
        overrides["recover_time"] = args.recover_time
    if args.preset and args.scenario:
        raise InputError("--preset and --scenario are mutually exclusive")
    if args.preset:
        return preset_config(args.preset, n_cameras=n_cameras or args.n_cameras,
                             **overrides)
    if args.scenario:
        cfg = load_scenario_file(args.scenario)
        if n_cameras is not None:
            from dataclasses import replace
            cfg = replace(cfg, n_cameras=n_cameras).validated()
        return cfg
    raise InputError("one of --preset or --scenario is required")


def _explore(net, args):
    t0 = time.perf_counter()
    graph = explore(net, limit=args.state_limit, threads=args.threads)
    return graph, (time.perf_counter() - t0) * 1000.0


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    try:
        cfg = _load_config(args)
        net = build_model(cfg)
    except (ConfigError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    graph, explore_ms = _explore(net, args)
    report = RunReport(
        config={"preset": args.preset, "scenario": args.scenario,
                "n_cameras": cfg.n_cameras, "state_limit": args.state_limit,
                "threads": args.threads},
        explore_ms=explore_ms, states=graph.n_states,
        transitions=graph.n_transitions, truncated=graph.truncated)

    if args.queries == "standard":
        props = standard_properties(cfg, net)
        for prop in props:
            t0 = time.perf_counter()
            try:
                pv = check_property(graph, prop)
                verdict = "satisfied" if pv.satisfied else "violated"
                ev = pv.failed.evidence if pv.failed else None
                ci = pv.failed.cycle_index if pv.failed else None
            except TruncatedGraphError:
                verdict, ev, ci = "undecided", None, None
            ms = (time.perf_counter() - t0) * 1000.0
            report.results.append(QueryResult(prop.name, verdict, ms,
                                              graph.n_states, ev, ci))
    else:
        try:
            with open(args.queries, "r", encoding="utf-8") as fh:
                queries = parse_query_file(fh.read(), net)
        except (OSError, E.ParseError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        for q in queries:
            t0 = time.perf_counter()
            try:
                v = check(graph, q)
                verdict = "satisfied" if v.satisfied else "violated"
                ev, ci = v.evidence if not v.satisfied else None, v.cycle_index
                if args.trace and v.evidence is not None:
                    ev = v.evidence
            except TruncatedGraphError:
                verdict, ev, ci = "undecided", None, None
            ms = (time.perf_counter() - t0) * 1000.0
            report.results.append(QueryResult(q.name, verdict, ms,
                                              graph.n_states, ev, ci))

    _render_report(report, net, args)
    if graph.truncated:
        return EXIT_TRUNCATED
    return EXIT_VIOLATED if report.any_violated else EXIT_OK


def _render_report(report: RunReport, net, args) -> None:
    cn = net.compiled()
    if args.format == "records":
        head = {"type": "run", **report.config, "explore_ms": round(report.explore_ms, 2),
                "states": report.states, "transitions": report.transitions,
                "truncated": report.truncated}
        print(json.dumps(head))
        for r in report.results:
            rec = {"type": "query", "name": r.name, "verdict": r.verdict,
                   "check_ms": round(r.check_ms, 2), "states": r.states}
            if args.trace and r.evidence is not None:
                rec["trace"] = _trace_lines(cn, r.evidence, r.cycle_index)
            print(json.dumps(rec))
        return
    if args.format == "csv":
        print("name,verdict,check_ms,states,truncated")
        for r in report.results:
            print(f"{r.name},{r.verdict},{r.check_ms:.2f},{r.states},{report.truncated}")
        return
    print(f"explored {report.states} states / {report.transitions} transitions "
          f"in {report.explore_ms:.0f} ms"
          + (" [TRUNCATED]" if report.truncated else ""))
    width = max((len(r.name) for r in report.results), default=4)
    for r in report.results:
        print(f"  {r.name:<{width}}  {r.verdict.upper():<10} {r.check_ms:8.1f} ms")
    if args.trace:
        for r in report.results:
            if r.evidence is not None:
                print(f"\n-- trace for {r.name} --")
                for line in _trace_lines(cn, r.evidence, r.cycle_index):
                    print(f"  {line}")


def _trace_lines(cn, evidence: list, cycle_index: int | None) -> list:
    lines = [f"state 0: {render_state(cn, evidence[0])}"]
    for i in range(1, len(evidence), 2):
        label, state = evidence[i], evidence[i + 1]
        lines.append(f"  via {render_label(cn, label)}")
        lines.append(f"state {(i + 1) // 2}: "
                     f"{render_state(cn, state, diff_from=evidence[i - 1])}")
    if cycle_index is not None:
        lines.append(f"(cycle: last state repeats state {cycle_index})")
    return lines


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args)
        net = build_model(cfg)
    except (ConfigError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cn = net.compiled()
    rng = random.Random(args.seed)
    state = initial_state(net)
    print(f"step 0: {render_state(cn, state)}")
    for step in range(1, args.steps + 1):
        succs = successors(cn, state)
        if not succs:
            print(f"step {step}: deadlock, no successors")
            break
        label, nxt = succs[rng.randrange(len(succs))]
        print(f"step {step}: {render_label(cn, label)}")
        delta = render_state(cn, nxt, diff_from=state)
        print(f"        {delta}")
        state = nxt
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

def cmd_bench(args) -> int:
    try:
        lo, hi = _int_range(args.cameras)
        names = [] if args.queries in ("", None) else [
            q.strip() for q in args.queries.split(",") if q.strip()]
        if args.queries == "standard":
            names = ["I1", "I2", "F1", "F2", "F3", "R1", "R2", "R3", "R4"]
    except (ValueError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    rows = []
    print("n_cameras,query,median_check_ms,median_explore_ms,states,status")
    for n in range(lo, hi + 1):
        try:
            cfg = _load_config(args, n_cameras=n)
            net = build_model(cfg)
        except (ConfigError, InputError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        explore_times, check_times, states, status = [], {}, 0, "ok"
        props = None
        graph = None
        for _rep in range(args.reps):
            graph, ms = _explore(net, args)
            explore_times.append(ms)
            states = graph.n_states
            if graph.truncated:
                status = "truncated"
            if props is None:
                props = {p.name: p for p in standard_properties(cfg, net)}
            for name in names:
                prop = props.get(name)
                if prop is None:
                    print(f"error: unknown standard query {name!r}", file=sys.stderr)
                    return EXIT_INPUT
                t0 = time.perf_counter()
                try:
                    check_property(graph, prop)
                except TruncatedGraphError:
                    status = "truncated"
                check_times.setdefault(name, []).append(
                    (time.perf_counter() - t0) * 1000.0)
        med_explore = statistics.median(explore_times)
        for name in names:
            med_check = statistics.median(check_times[name])
            row = (n, name, med_check, med_explore, states, status)
            rows.append(row)
            print(f"{n},{name},{med_check:.2f},{med_explore:.2f},{states},{status}")
    args.bench_rows = rows
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tamcheck",
                                description="Model check the traffic monitoring network")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cameras_default=6):
        sp.add_argument("--preset", choices=sorted(scenario_presets()),
                        help="built-in scenario")
        sp.add_argument("--scenario", help="scenario file (key=value text)")
        sp.add_argument("--n-cameras", type=int, default=cameras_default)
        sp.add_argument("--recover-time", type=int, default=None,
                        help="override the recovery delay constant")
        sp.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
        sp.add_argument("--threads", type=int, default=1)

    v = sub.add_parser("verify", help="explore once and check queries")
    common(v)
    v.add_argument("--queries", default="standard",
                   help="'standard' or a query file path")
    v.add_argument("--trace", action="store_true", help="print evidence traces")
    v.add_argument("--format", choices=("human", "records", "csv"), default="human")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("simulate", help="seeded random walk")
    common(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=50, help="maximum steps")
    s.set_defaults(fn=cmd_simulate)

    b = sub.add_parser("bench", help="scaling benchmark over camera counts")
    common(b)
    b.add_argument("--cameras", default="2..6", help="camera range A..B")
    b.add_argument("--queries", default="I1,I2",
                   help="comma-separated standard property names")
    b.add_argument("--reps", type=int, default=3)
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (E.ParseError, ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
