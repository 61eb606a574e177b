"""The standard nine-property suite for the traffic monitoring network.

Each inevitability property of the form `A<> ... P imply Q` ships in two
readings: the literal text (which holds as soon as some state satisfies the
implication, typically the initial state) and the stronger leads-to reading
`P --> Q` ("whenever P holds, Q eventually follows"), instantiated per
quantifier binding.  A property's verdict is the conjunction of all its
readings; the first failing reading supplies the evidence trace.

Robustness property indices are parameterized by the configured failing
camera: with camera `c` failing, the detecting survivors are `c+1` and
`c+2` (its slaves in the merged organization).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..explore import StateGraph
from ..model import Network
from ..query import Query, Verdict, check, parse_query
from .config import TrafficConfig


@dataclass
class NamedProperty:
    name: str
    description: str
    literal: Query | None
    leads_to: list = field(default_factory=list)

    def queries(self) -> list:
        out = []
        if self.literal is not None:
            out.append(self.literal)
        out.extend(self.leads_to)
        return out


@dataclass
class PropertyVerdict:
    prop: NamedProperty
    satisfied: bool
    failed: Verdict | None = None    # verdict of the first failing reading
    sub_verdicts: list = field(default_factory=list)


def standard_properties(config: TrafficConfig, net: Network) -> list:
    """I1, I2, F1..F3, R1..R4 compiled against `net` (which must have been
    built from `config`)."""
    cfg = config.validated()
    n = cfg.n_cameras
    scen = cfg.scenario.clipped(n)
    c = scen.stop[0] if scen.stop else 2 % n
    c1, c2 = (c + 1) % n, (c + 2) % n
    # The failing camera's slaves are the consecutive jammed ids after it;
    # robustness consequents degrade gracefully when the block is shorter
    # than the published three-camera organization.
    jam = set(scen.jam)
    survivors = []
    k = c
    while (k + 1) % n in jam and len(survivors) < 2:
        k = (k + 1) % n
        survivors.append(k)
    if c not in jam:
        survivors = []

    props: list = []

    def lit(name, desc, text):
        props.append(NamedProperty(name, desc, parse_query(text, net, name)))
        return props[-1]

    def add_lt(prop, text, tag):
        prop.leads_to.append(parse_query(text, net, f"{prop.name}~lt[{tag}]"))

    lit("I1", "not all cameras can be slave at the same time",
        "A[] not forall (i : cam_id) Camera(i).Slave")
    lit("I2", "the system is deadlock free",
        "A[] not deadlock")

    f1 = lit("F1", "congested camera merges with a downstream master-with-slaves",
             "A<> forall (n : cam_id) "
             "OrganizationController(n).CongestionDetected && Camera(n+1).MasterWithSlaves "
             "imply Camera(n).MasterWithSlaves && camera[n].slaves[n+1]")
    f2 = lit("F2", "congested camera joins the organization its downstream slave is in",
             "A<> forall (n : cam_id) forall (x : cam_id) "
             "OrganizationController(n).CongestionDetected && Camera(n+1).Slave "
             "&& camera[x].slaves[n+1] "
             "imply Camera(x).MasterWithSlaves && camera[x].slaves[n]")
    f3 = lit("F3", "two congested single masters merge",
             "A<> forall (n : cam_id) "
             "OrganizationController(n).CongestionDetected && Camera(n+1).Master "
             "&& OrganizationController(n+1).CongestionDetected "
             "imply Camera(n).MasterWithSlaves && camera[n].slaves[n+1] "
             "|| Camera(n+1).MasterWithSlaves && camera[n+1].slaves[n]")
    # Leads-to readings, instantiated where the printed n+1 indices are
    # well-formed (the ring boundary instance is vacuous: its antecedent
    # location test is false for an out-of-range process index).
    for i in range(n - 1):
        add_lt(f1,
               f"OrganizationController({i}).CongestionDetected "
               f"&& Camera({i + 1}).MasterWithSlaves "
               f"--> Camera({i}).MasterWithSlaves && camera[{i}].slaves[{i + 1}]",
               f"n={i}")
        add_lt(f3,
               f"OrganizationController({i}).CongestionDetected && Camera({i + 1}).Master "
               f"&& OrganizationController({i + 1}).CongestionDetected "
               f"--> Camera({i}).MasterWithSlaves && camera[{i}].slaves[{i + 1}] "
               f"|| Camera({i + 1}).MasterWithSlaves && camera[{i + 1}].slaves[{i}]",
               f"n={i}")
        for x in range(n):
            add_lt(f2,
                   f"OrganizationController({i}).CongestionDetected "
                   f"&& Camera({i + 1}).Slave && camera[{x}].slaves[{i + 1}] "
                   f"--> Camera({x}).MasterWithSlaves && camera[{x}].slaves[{i}]",
                   f"n={i},x={x}")

    if len(survivors) == 2:
        detect = (f"SelfHealingController({survivors[0]}).FailureDetected "
                  f"&& SelfHealingController({survivors[1]}).FailureDetected")
    elif len(survivors) == 1:
        detect = f"SelfHealingController({survivors[0]}).FailureDetected"
    else:
        # No organization to lose: the ring neighbours are the detectors.
        detect = (f"SelfHealingController({(c - 1) % n}).FailureDetected "
                  f"&& SelfHealingController({(c + 1) % n}).FailureDetected")
    r1 = lit("R1", "dependents of a failed camera detect the failure",
             f"A<> SelfHealingController({c}).Failed imply {detect}")
    add_lt(r1, f"SelfHealingController({c}).Failed --> {detect}", "")

    # R2 is printed as a leads-to already; its literal and leads-to reading
    # coincide.
    if len(survivors) == 2:
        s1, s2 = survivors
        r2_text = (
            f"OrganizationController({c}).Failed && "
            f"((OrganizationController({s1}).Master && OrganizationController({s2}).Slave) || "
            f"(OrganizationController({s2}).Master && OrganizationController({s1}).Slave)) "
            f"--> OrganizationController({c}).Failed && "
            f"((OrganizationController({s1}).MasterWithSlaves && camera[{s1}].slaves[{s2}]) || "
            f"(OrganizationController({s2}).MasterWithSlaves && camera[{s2}].slaves[{s1}]))")
        r3_consequent = (
            f"((Camera({s1}).MasterWithSlaves && camera[{s1}].slaves[{s2}]) || "
            f"(Camera({s2}).MasterWithSlaves && camera[{s2}].slaves[{s1}]))")
    elif len(survivors) == 1:
        s1 = survivors[0]
        r2_text = (
            f"OrganizationController({c}).Failed && OrganizationController({s1}).Slave "
            f"--> OrganizationController({c}).Failed && "
            f"(OrganizationController({s1}).Master || "
            f"OrganizationController({s1}).MasterWithSlaves)")
        r3_consequent = (f"(Camera({s1}).Master || Camera({s1}).MasterWithSlaves)")
    else:
        r2_text = (f"OrganizationController({c}).Failed --> {detect}")
        r3_consequent = detect
    props.append(NamedProperty(
        "R2", "surviving slaves re-form an organization after the master fails",
        parse_query(r2_text, net, "R2")))

    r3 = lit("R3", "survivors keep monitoring the jam as a correct organization",
             f"A<> Camera({c}).Failed imply {r3_consequent}")
    add_lt(r3, f"Camera({c}).Failed --> {r3_consequent}", "")

    r4 = lit("R4", "left-neighbour links are spliced past a failed camera",
             "A<> forall (n : cam_id) forall (x : cam_id) "
             "(Camera(n).Failed && Camera(x).getLeftNeighbour() == n "
             "imply SelfHealingController(x).FailureDetected "
             "&& Camera(x).getLeftNeighbour() == n - 1)")
    for i in range(n):
        for x in range(n):
            add_lt(r4,
                   f"Camera({i}).Failed && Camera({x}).getLeftNeighbour() == {i} "
                   f"--> SelfHealingController({x}).FailureDetected "
                   f"&& Camera({x}).getLeftNeighbour() == {i} - 1",
                   f"n={i},x={x}")
    return props


def check_property(graph: StateGraph, prop: NamedProperty) -> PropertyVerdict:
    subs = []
    failed = None
    for q in prop.queries():
        v = check(graph, q)
        subs.append(v)
        if not v.satisfied and failed is None:
            failed = v
    return PropertyVerdict(prop, failed is None, failed, subs)


def check_all(graph: StateGraph, props: list) -> list:
    return [check_property(graph, p) for p in props]
