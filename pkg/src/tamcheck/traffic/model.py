"""The decentralized traffic monitoring network.

Per camera id the network runs five processes: Camera (role automaton),
TrafficMonitor (car counting), OrganizationController (merge/split
protocol), SelfHealingController (ping-echo failure detection and repair)
and PulseGenerator (ping responder).  The environment adds one
ReleaseTraffic process, a fleet of Car processes and one scenario driver
that injects congestion and silent camera failures.

Protocol conventions that keep the composition deadlock-free and the
adaptation outcomes inevitable on every interleaving:

* Every multi-step protocol exchange runs through committed locations, so a
  chain started by one synchronisation completes before unrelated processes
  may act; transient chains therefore serialize.
* `CongestionDetected` is a zero-time location (clock invariant `z <= 0`):
  a congested controller decides immediately, and when its downstream
  neighbour is itself deciding (`cong_pending`), it waits within the same
  instant, which resolves chained congestion right-to-left.
* Merges are driven by the upstream (requesting) controller: a congested
  single master asks its downstream neighbour; if that neighbour is a
  jammed single master the requester becomes master-with-slaves, if it is a
  master-with-slaves the requester takes the whole organization over, and
  if it is a slave the requester joins that organization's master.  The
  upstream-most congested camera thus masters the merged organization.
* Failure detection is per-dependency ping-echo over broadcast channels
  (pings are lost on dead receivers rather than blocking).  A slave whose
  master died promotes itself back to single master; promoted survivors
  then re-merge through the ordinary congestion path, which realizes master
  election: a promoted camera with a viable downstream neighbour re-enters
  congestion handling via a dedicated re-candidacy edge.
"""

from __future__ import annotations

from ..model import Network, NetworkBuilder
from .config import TrafficConfig

# Role codes mirrored in the shared `role[]` array (controller locations are
# authoritative; the array lets guards and functions read remote roles).
R_MASTER, R_MWS, R_SLAVE, R_FAILED = 0, 1, 2, 3

OC_TRANSITIONAL = (
    "CongestionDetected", "TurningMasterWithSlaves", "OrgOfferMaster",
    "TurningSlave", "TurningMaster", "JoinOrg", "LeavingOrg", "LeavingOrg2",
    "CheckEmpty",
)

# Downstream neighbour viability: a congested single master may act exactly
# when its request would be answered immediately and consistently.  Promoted
# orphans (electing) only accept requests from fellow orphans until their
# re-merge completes, so outside jams cannot steal an election survivor.
_VIABLE = ("alive[rightN[id]] && ("
           "(role[rightN[id]] == R_MWS && (electing[id] || !electing[rightN[id]]))"
           " || (role[rightN[id]] == R_MASTER && jammed[rightN[id]]"
           "     && !cong_pending[rightN[id]]"
           "     && (electing[id] || !electing[rightN[id]]))"
           " || (role[rightN[id]] == R_SLAVE && alive[camera[rightN[id]].m_cam]))")

# A neighbour worth waiting out a same-instant jam evaporation for: either
# already mergeable, or a jammed master still deciding (resolves within the
# instant).
_PROMISING = ("alive[rightN[id]] && ("
              "(role[rightN[id]] == R_MWS && (electing[id] || !electing[rightN[id]]))"
              " || (role[rightN[id]] == R_MASTER && jammed[rightN[id]]"
              "     && (cong_pending[rightN[id]] || electing[id] || !electing[rightN[id]]))"
              " || (role[rightN[id]] == R_SLAVE && alive[camera[rightN[id]].m_cam]))")


def build_model(config: TrafficConfig, *, disable_master_election: bool = False,
                disable_merge: bool = False) -> Network:
    """Construct the full network for `config`.

    The two keyword flags build deliberately broken variants for
    mutation-sensitivity testing: `disable_master_election` removes the
    re-candidacy edge by which a promoted orphan stands for mastership
    again; `disable_merge` makes congested controllers park instead of
    merging organizations.
    """
    cfg = config.validated()
    n = cfg.n_cameras
    n_cars = cfg.cars
    scen = cfg.scenario.clipped(n)

    nb = NetworkBuilder()
    nb.declare_constant("N", n)
    nb.declare_constant("CAPACITY", cfg.capacity)
    nb.declare_constant("CAR_GAP", cfg.car_gap)
    nb.declare_constant("CAM_TIME", cfg.cam_time)
    nb.declare_constant("WAIT_TIME", cfg.wait_time)
    nb.declare_constant("ALIVE_TIME", cfg.alive_time)
    nb.declare_constant("RECOVER_TIME", cfg.recover_time)
    nb.declare_constant("N_CARS", n_cars)
    nb.declare_constant("R_MASTER", R_MASTER)
    nb.declare_constant("R_MWS", R_MWS)
    nb.declare_constant("R_SLAVE", R_SLAVE)
    nb.declare_constant("R_FAILED", R_FAILED)
    nb.declare_range_type("cam_id", 0, n - 1)
    nb.declare_range_type("hop", 1, n - 1)

    # Channels.  Car and count signals are binary; protocol signals are
    # broadcast so senders never block on failed receivers.
    nb.declare_channel("startCar", kind="binary")
    nb.declare_channel("camEnter", kind="binary", arity=n)
    nb.declare_channel("camLeave", kind="binary", arity=n)
    nb.declare_channel("no_cong", kind="binary", arity=n)
    nb.declare_channel("congestion", kind="broadcast", arity=n)
    nb.declare_channel("request_org", kind="broadcast", arity=n)
    nb.declare_channel("master", kind="broadcast", arity=n)
    nb.declare_channel("masterWithSlaves", kind="broadcast", arity=n)
    nb.declare_channel("slave", kind="broadcast", arity=n)
    nb.declare_channel("slave_left", kind="broadcast", arity=n)
    nb.declare_channel("slave_died", kind="broadcast", arity=n)
    nb.declare_channel("master_failed", kind="broadcast", arity=n)
    nb.declare_channel("stopCam", kind="broadcast", arity=n)
    nb.declare_channel("startCam", kind="broadcast", arity=n)
    nb.declare_channel("isAlive", kind="broadcast", arity=n)
    nb.declare_channel("echo", kind="broadcast", arity=n)

    # Shared state.
    cam_rec = nb.record([("m_cam", "cam_id"), ("slaves", nb.array("bool", n))])
    nb.declare_global("camera", nb.array(cam_rec, n),
                      init=[{"m_cam": i, "slaves": [False] * n} for i in range(n)])
    nb.declare_global("role", nb.array("int[0,3]", n), init=[R_MASTER] * n)
    nb.declare_global("jammed", nb.array("bool", n), init=[False] * n)
    nb.declare_global("scen_jam", nb.array("bool", n), init=scen.jam_vector(n))
    nb.declare_global("alive", nb.array("bool", n), init=[True] * n)
    nb.declare_global("leftN", nb.array("cam_id", n), init=[(i - 1) % n for i in range(n)])
    nb.declare_global("rightN", nb.array("cam_id", n), init=[(i + 1) % n for i in range(n)])
    nb.declare_global("cong_pending", nb.array("bool", n), init=[False] * n)
    nb.declare_global("electing", nb.array("bool", n), init=[False] * n)
    nb.declare_global("req_from", nb.array("cam_id", n), init=[0] * n)
    nb.declare_global("det", nb.array(nb.array("bool", n), n),
                      init=[[False] * n for _ in range(n)])
    nb.declare_global("dead_of", nb.array("cam_id", n), init=[0] * n)
    nb.declare_global("cam_count", nb.array(f"int[0,{n_cars}]", n), init=[0] * n)
    nb.declare_global("cars_inside", f"int[0,{n_cars}]", init=0)
    nb.declare_global("cars_waiting", f"int[0,{n_cars}]", init=n_cars)
    nb.declare_global("cars_gone", f"int[0,{n_cars}]", init=0)
    nb.declare_range_type("car_nr", 0, n_cars - 1)

    _release_traffic(nb)
    _car(nb, n, n_cars)
    _camera(nb)
    _traffic_monitor(nb)
    _organization_controller(nb, disable_master_election, disable_merge)
    _pulse_generator(nb)
    _self_healing_controller(nb, n)
    _driver(nb, n, scen)

    for i in range(n):
        nb.add_process("Camera", {"id": i})
    for i in range(n):
        nb.add_process("TrafficMonitor", {"id": i})
    for i in range(n):
        nb.add_process("OrganizationController", {"id": i})
    for i in range(n):
        nb.add_process("SelfHealingController", {"id": i})
    for i in range(n):
        nb.add_process("PulseGenerator", {"id": i})
    nb.add_process("ReleaseTraffic")
    for k in range(n_cars):
        nb.add_process("Car", {"nr": k})
    nb.add_process("ScenarioDriver")
    return nb.build()


def _release_traffic(nb: NetworkBuilder) -> None:
    # Feeds waiting cars onto the road once the release clock passes CAR_GAP.
    # The window is bounded so a release is eventually forced; a missed
    # window (no car waiting) restarts the clock, and the process parks once
    # the whole fleet has passed through.
    t = nb.new_template("ReleaseTraffic")
    t.add_clock("x")
    t.add_location("Gap", initial=True, invariant="x <= CAR_GAP + 2")
    t.add_location("Done")
    t.add_edge("Gap", "Gap", guard="x > CAR_GAP && cars_waiting > 0",
               sync="startCar!", update="x = 0")
    t.add_edge("Gap", "Gap",
               guard="x >= CAR_GAP + 2 && cars_waiting == 0 && cars_gone < N_CARS",
               update="x = 0")
    t.add_edge("Gap", "Done", guard="cars_gone >= N_CARS")


def _car(nb: NetworkBuilder, n: int, n_cars: int) -> None:
    # One pass over the road: released once, traverses every viewing range in
    # ascending order at CAM_TIME per range, then leaves the monitored area.
    # Cars are interchangeable, so they take the release signal in fixed
    # index order; this prunes permutation-only interleavings.
    t = nb.new_template("Car", parameters=[("nr", "car_nr")])
    t.add_clock("y")
    t.add_location("startCar", initial=True)  # waiting for release
    t.add_location("PreEnter", committed=True)
    for r in range(n):
        t.add_location(f"InRange{r}", invariant="y <= CAM_TIME")
        t.add_location(f"Leaving{r}", committed=True)
    t.add_location("Gone")
    t.add_edge("startCar", "PreEnter", sync="startCar?",
               guard="N_CARS - cars_waiting == nr",
               update="cars_waiting = cars_waiting - 1")
    t.add_edge("PreEnter", "InRange0", sync="camEnter[0]!",
               update="y = 0, cars_inside = cars_inside + 1")
    for r in range(n):
        t.add_edge(f"InRange{r}", f"Leaving{r}", guard="y >= CAM_TIME",
                   sync=f"camLeave[{r}]!", update="cars_inside = cars_inside - 1")
        if r + 1 < n:
            t.add_edge(f"Leaving{r}", f"InRange{r + 1}", sync=f"camEnter[{r + 1}]!",
                       update="y = 0, cars_inside = cars_inside + 1")
    t.add_edge(f"Leaving{n - 1}", "Gone", update="cars_gone = cars_gone + 1")


def _camera(nb: NetworkBuilder) -> None:
    # Pure role mirror: follows the signals of its organization controller.
    t = nb.new_template("Camera", parameters=[("id", "cam_id")])
    t.add_function("int getLeftNeighbour() { return leftN[id]; }")
    t.add_function("int getRightNeighbour() { return rightN[id]; }")
    t.add_location("Master", initial=True)
    t.add_location("MasterWithSlaves")
    t.add_location("Slave")
    t.add_location("Failed")
    for loc in ("Master", "MasterWithSlaves", "Slave"):
        t.add_edge(loc, "Master", sync="master[id]?")
        t.add_edge(loc, "MasterWithSlaves", sync="masterWithSlaves[id]?")
        t.add_edge(loc, "Slave", sync="slave[id]?")
        t.add_edge(loc, "Failed", sync="stopCam[id]?")
    t.add_edge("Failed", "Master", sync="startCam[id]?")


def _traffic_monitor(nb: NetworkBuilder) -> None:
    # Counts cars via camEnter/camLeave and reports congestion threshold
    # crossings to its organization controller.  A failed monitor keeps
    # counting silently (cars do not vanish when a camera dies) but stops
    # signalling; on recovery it re-announces the current condition.
    t = nb.new_template("TrafficMonitor", parameters=[("id", "cam_id")])
    t.add_location("Counting", initial=True)
    t.add_location("BumpIn", committed=True)
    t.add_location("BumpOut", committed=True)
    t.add_location("FailedCounting")
    t.add_location("ReSync", committed=True)

    t.add_edge("Counting", "BumpIn", sync="camEnter[id]?",
               update="cam_count[id] = cam_count[id] + 1")
    t.add_edge("BumpIn", "Counting",
               guard="cam_count[id] > CAPACITY && !jammed[id]",
               sync="congestion[id]!", update="jammed[id] = true")
    t.add_edge("BumpIn", "Counting",
               guard="!(cam_count[id] > CAPACITY && !jammed[id])")
    t.add_edge("Counting", "BumpOut", sync="camLeave[id]?",
               update="cam_count[id] = cam_count[id] - 1")
    t.add_edge("BumpOut", "Counting",
               guard="cam_count[id] <= CAPACITY && jammed[id] && !scen_jam[id]",
               sync="no_cong[id]!", update="jammed[id] = false")
    t.add_edge("BumpOut", "Counting",
               guard="!(cam_count[id] <= CAPACITY && jammed[id] && !scen_jam[id])")

    t.add_edge("FailedCounting", "FailedCounting", sync="camEnter[id]?",
               update="cam_count[id] = cam_count[id] + 1")
    t.add_edge("FailedCounting", "FailedCounting", sync="camLeave[id]?",
               update="cam_count[id] = cam_count[id] - 1")
    for loc in ("Counting", "BumpIn", "BumpOut"):
        t.add_edge(loc, "FailedCounting", sync="stopCam[id]?")
    t.add_edge("FailedCounting", "ReSync", sync="startCam[id]?")
    t.add_edge("ReSync", "Counting",
               guard="cam_count[id] > CAPACITY && !jammed[id]",
               sync="congestion[id]!", update="jammed[id] = true")
    t.add_edge("ReSync", "Counting",
               guard="cam_count[id] <= CAPACITY && jammed[id] && !scen_jam[id]",
               sync="no_cong[id]!", update="jammed[id] = false")
    t.add_edge("ReSync", "Counting",
               guard="!(cam_count[id] > CAPACITY && !jammed[id]) && "
                     "!(cam_count[id] <= CAPACITY && jammed[id] && !scen_jam[id])")


def _organization_controller(nb: NetworkBuilder, disable_master_election: bool,
                             disable_merge: bool) -> None:
    t = nb.new_template("OrganizationController", parameters=[("id", "cam_id")])
    t.add_clock("z")
    t.add_local("om", "cam_id", init=0)  # previous master while leaving an org
    t.add_function(
        "bool hasSlaves() { for (j : cam_id) { if (camera[id].slaves[j]) return true; } "
        "return false; }")

    t.add_location("Master", initial=True)
    t.add_location("CongestionDetected", invariant="z <= 0")
    t.add_location("CongestedAlone")
    t.add_location("TurningMasterWithSlaves", committed=True)
    t.add_location("OrgOfferMaster", committed=True)
    t.add_location("TurningSlave", committed=True)
    t.add_location("TurningMaster", committed=True)
    t.add_location("JoinOrg", committed=True)
    t.add_location("LeavingOrg", committed=True)
    t.add_location("LeavingOrg2", committed=True)
    t.add_location("CheckEmpty", committed=True)
    t.add_location("Slave")
    t.add_location("MasterWithSlaves")
    t.add_location("Failed")

    enter_cd = "z = 0, cong_pending[id] = true"

    # Congestion intake.
    t.add_edge("Master", "CongestionDetected", sync="congestion[id]?", update=enter_cd)
    t.add_edge("CongestedAlone", "CongestionDetected", sync="congestion[id]?",
               update=enter_cd)
    if not disable_master_election:
        # Re-candidacy: a (promoted or recovered) jammed single master whose
        # downstream neighbour became viable stands for mastership again.
        # The broadcast-receive variant makes election completion inevitable:
        # a downstream orphan's promotion signal drags this camera into
        # congestion handling in the same transition.
        t.add_edge("Master", "CongestionDetected",
                   guard="jammed[id] && " + _VIABLE, update=enter_cd)
        t.add_edge("Master", "CongestionDetected", sync="master[rightN[id]]?",
                   guard="jammed[id] && " + _VIABLE, update=enter_cd)
    t.add_edge("CongestedAlone", "CongestionDetected",
               guard="jammed[id] && " + _VIABLE, update=enter_cd)
    t.add_edge("CongestedAlone", "Master", guard="!jammed[id]")

    # Decision edges out of CongestionDetected.  Guards are exhaustive
    # except when the downstream neighbour is itself deciding
    # (cong_pending), which resolves within the same time instant.
    # A clearing of this camera's own jam mid-decision cancels the decision
    # only when the neighbour is not worth merging with anyway.
    t.add_edge("CongestionDetected", "CongestionDetected", sync="no_cong[id]?",
               guard=_PROMISING, update="z = 0")
    t.add_edge("CongestionDetected", "Master", sync="no_cong[id]?",
               guard="!(" + _PROMISING + ")", update="cong_pending[id] = false")
    t.add_edge("CongestionDetected", "CongestedAlone",
               guard="!alive[rightN[id]]", update="cong_pending[id] = false")
    t.add_edge("CongestionDetected", "CongestedAlone",
               guard="alive[rightN[id]] && role[rightN[id]] == R_MASTER && !jammed[rightN[id]]",
               update="cong_pending[id] = false")
    t.add_edge("CongestionDetected", "CongestedAlone",
               guard="alive[rightN[id]] && role[rightN[id]] == R_MASTER && "
                     "jammed[rightN[id]] && !cong_pending[rightN[id]] && "
                     "!electing[id] && electing[rightN[id]]",
               update="cong_pending[id] = false")
    t.add_edge("CongestionDetected", "CongestedAlone",
               guard="alive[rightN[id]] && role[rightN[id]] == R_SLAVE && "
                     "!alive[camera[rightN[id]].m_cam]",
               update="cong_pending[id] = false")
    if disable_merge:
        t.add_edge("CongestionDetected", "CongestedAlone",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MWS && "
                         "(electing[id] || !electing[rightN[id]])",
                   update="cong_pending[id] = false")
        t.add_edge("CongestionDetected", "CongestedAlone",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MWS && "
                         "!electing[id] && electing[rightN[id]]",
                   update="cong_pending[id] = false")
        t.add_edge("CongestionDetected", "CongestedAlone",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MASTER && "
                         "jammed[rightN[id]] && !cong_pending[rightN[id]] && "
                         "(electing[id] || !electing[rightN[id]])",
                   update="cong_pending[id] = false")
        t.add_edge("CongestionDetected", "CongestedAlone",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_SLAVE && "
                         "alive[camera[rightN[id]].m_cam]",
                   update="cong_pending[id] = false")
    else:
        # Takeover of a downstream master-with-slaves organization.
        t.add_edge("CongestionDetected", "TurningMasterWithSlaves",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MWS && "
                         "(electing[id] || !electing[rightN[id]])",
                   sync="request_org[rightN[id]]!",
                   update="req_from[rightN[id]] = id, cong_pending[id] = false")
        t.add_edge("CongestionDetected", "CongestedAlone",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MWS && "
                         "!electing[id] && electing[rightN[id]]",
                   update="cong_pending[id] = false")
        # Pairwise merge with a jammed downstream single master.
        t.add_edge("CongestionDetected", "TurningMasterWithSlaves",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_MASTER && "
                         "jammed[rightN[id]] && !cong_pending[rightN[id]] && "
                         "(electing[id] || !electing[rightN[id]])",
                   sync="request_org[rightN[id]]!",
                   update="req_from[rightN[id]] = id, cong_pending[id] = false")
        # Downstream neighbour is a slave: join its master's organization.
        t.add_edge("CongestionDetected", "JoinOrg",
                   guard="alive[rightN[id]] && role[rightN[id]] == R_SLAVE && "
                         "alive[camera[rightN[id]].m_cam]",
                   update="camera[camera[rightN[id]].m_cam].slaves[id] = true, "
                          "camera[id].m_cam = camera[rightN[id]].m_cam, "
                          "role[id] = R_SLAVE, cong_pending[id] = false")
    t.add_edge("JoinOrg", "Slave", sync="slave[id]!")
    t.add_edge("TurningMasterWithSlaves", "MasterWithSlaves", sync="masterWithSlaves[id]?")

    # Handling an organization request (this controller is the downstream
    # neighbour).  The requester always becomes the merged master.
    f3_updates = ("camera[req_from[id]].slaves[id] = true, "
                  "camera[id].m_cam = req_from[id], "
                  "role[req_from[id]] = R_MWS, role[id] = R_SLAVE")
    takeover_updates = (
        "for (j : cam_id) { if (camera[id].slaves[j]) { "
        "camera[req_from[id]].slaves[j] = true; camera[j].m_cam = req_from[id]; "
        "camera[id].slaves[j] = false; } } " + f3_updates)
    t.add_edge("Master", "OrgOfferMaster", sync="request_org[id]?", update=f3_updates)
    t.add_edge("CongestedAlone", "OrgOfferMaster", sync="request_org[id]?",
               update=f3_updates)
    t.add_edge("MasterWithSlaves", "OrgOfferMaster", sync="request_org[id]?",
               update=takeover_updates)
    t.add_edge("OrgOfferMaster", "TurningSlave", sync="masterWithSlaves[req_from[id]]!")
    t.add_edge("TurningSlave", "Slave", sync="slave[id]!")

    # Congestion clearing.
    t.add_edge("Master", "Master", sync="no_cong[id]?")
    t.add_edge("CongestedAlone", "Master", sync="no_cong[id]?")
    t.add_edge("MasterWithSlaves", "MasterWithSlaves", sync="no_cong[id]?")
    t.add_edge("Slave", "LeavingOrg", sync="no_cong[id]?",
               update="om = camera[id].m_cam, camera[om].slaves[id] = false, "
                      "camera[id].m_cam = id, role[id] = R_MASTER")
    t.add_edge("LeavingOrg", "LeavingOrg2", sync="master[id]!")
    t.add_edge("LeavingOrg2", "Master", sync="slave_left[om]!")

    # Duplicate congestion signals while already organized are absorbed.
    t.add_edge("Slave", "Slave", sync="congestion[id]?")
    t.add_edge("MasterWithSlaves", "MasterWithSlaves", sync="congestion[id]?")

    # Slave bookkeeping driven by the self-healing subsystem.
    t.add_edge("MasterWithSlaves", "CheckEmpty", sync="slave_left[id]?")
    t.add_edge("MasterWithSlaves", "CheckEmpty", sync="slave_died[id]?",
               update="camera[id].slaves[dead_of[id]] = false")
    t.add_edge("CheckEmpty", "MasterWithSlaves", guard="hasSlaves()")
    t.add_edge("CheckEmpty", "TurningMaster", guard="!hasSlaves()",
               update="role[id] = R_MASTER")
    # Master election, step one: an orphaned slave promotes itself.  When the
    # downstream neighbour is already a viable merge partner the promotion
    # lands straight in congestion handling, completing the election without
    # waiting for an unforced step.
    t.add_edge("Slave", "TurningMaster", sync="master_failed[id]?",
               update="for (j : cam_id) camera[camera[id].m_cam].slaves[j] = false, "
                      "camera[id].m_cam = id, role[id] = R_MASTER, electing[id] = true")
    if disable_master_election:
        t.add_edge("TurningMaster", "Master", sync="master[id]!")
    else:
        t.add_edge("TurningMaster", "Master", sync="master[id]!",
                   guard="!(jammed[id] && " + _VIABLE + ")")
        t.add_edge("TurningMaster", "CongestionDetected", sync="master[id]!",
                   guard="jammed[id] && " + _VIABLE, update=enter_cd)

    # Silent failure and recovery.
    for loc in ("Master", "CongestionDetected", "CongestedAlone", "Slave",
                "MasterWithSlaves"):
        t.add_edge(loc, "Failed", sync="stopCam[id]?",
                   update="cong_pending[id] = false, electing[id] = false")
    t.add_edge("Failed", "Master", sync="startCam[id]?")


def _pulse_generator(nb: NetworkBuilder) -> None:
    t = nb.new_template("PulseGenerator", parameters=[("id", "cam_id")])
    t.add_location("Alive", initial=True)
    t.add_location("Respond", committed=True)
    t.add_location("Failed")
    t.add_edge("Alive", "Respond", sync="isAlive[id]?")
    t.add_edge("Respond", "Alive", sync="echo[id]!")
    t.add_edge("Alive", "Failed", sync="stopCam[id]?")
    t.add_edge("Respond", "Failed", sync="stopCam[id]?")
    t.add_edge("Failed", "Alive", sync="startCam[id]?")


def _self_healing_controller(nb: NetworkBuilder, n: int) -> None:
    # Pings every dependency (master, slaves, ring neighbours) once per
    # round; a missing echo within ALIVE_TIME is a detected failure.  The
    # controller then repairs: splice neighbour links past the dead camera,
    # drop it from the own slave set, or promote itself if its master died;
    # it parks in FailureDetected until the failed camera recovers.  Round
    # starts are staggered by camera id so simultaneous rounds only overlap
    # for ids that coincide modulo WAIT_TIME.
    t = nb.new_template("SelfHealingController", parameters=[("id", "cam_id")])
    t.add_clock("w")
    t.add_local("k", f"int[0,{n}]", init=0)
    t.add_function(
        "bool isDep(int t) { if (t == id) return false; "
        "if (leftN[id] == t || rightN[id] == t) return true; "
        "if (role[id] == R_SLAVE && camera[id].m_cam == t) return true; "
        "if (role[id] == R_MWS && camera[id].slaves[t]) return true; "
        "return false; }")
    t.add_function(
        "bool anyDet() { for (j : cam_id) { if (det[id][j]) return true; } return false; }")

    t.add_location("Offset", initial=True, invariant="w <= id")
    t.add_location("Idle", invariant="w <= WAIT_TIME")
    t.add_location("Scan", committed=True)
    t.add_location("Await", invariant="w <= ALIVE_TIME")
    t.add_location("Detect", committed=True)
    t.add_location("DetectB", committed=True)
    t.add_location("ClearCheck", committed=True)
    t.add_location("FailureDetected")
    t.add_location("Failed")

    t.add_edge("Offset", "Idle", guard="w >= id", update="w = 0")
    t.add_edge("Idle", "Scan", guard="w >= WAIT_TIME", update="k = 0")
    t.add_edge("Scan", "Scan", guard="k < N && !isDep(k)", update="k = k + 1")
    t.add_edge("Scan", "Await", guard="k < N && isDep(k)", sync="isAlive[k]!",
               update="w = 0")
    t.add_edge("Scan", "Idle", guard="k >= N", update="w = 0")
    t.add_edge("Await", "Scan", sync="echo[k]?", update="k = k + 1")
    t.add_edge("Await", "Detect", guard="w >= ALIVE_TIME",
               update="det[id][k] = true, dead_of[id] = k, "
                      "if (leftN[id] == k) leftN[id] = leftN[k]; "
                      "if (rightN[id] == k) rightN[id] = rightN[k];")
    # Repair: dead slave -> drop it; dead master -> promote self.
    t.add_edge("Detect", "DetectB",
               guard="role[id] == R_MWS && camera[id].slaves[k]",
               sync="slave_died[id]!")
    t.add_edge("Detect", "DetectB",
               guard="!(role[id] == R_MWS && camera[id].slaves[k])")
    t.add_edge("DetectB", "FailureDetected",
               guard="role[id] == R_SLAVE && camera[id].m_cam == k",
               sync="master_failed[id]!")
    t.add_edge("DetectB", "FailureDetected",
               guard="!(role[id] == R_SLAVE && camera[id].m_cam == k)")
    for j in range(n):
        t.add_edge("FailureDetected", "ClearCheck", guard=f"det[id][{j}]",
                   sync=f"startCam[{j}]?", update=f"det[id][{j}] = false")
    t.add_edge("ClearCheck", "FailureDetected", guard="anyDet()")
    t.add_edge("ClearCheck", "Idle", guard="!anyDet()", update="w = 0, k = 0")

    for loc in ("Offset", "Idle", "Await", "FailureDetected"):
        t.add_edge(loc, "Failed", sync="stopCam[id]?")
    t.add_edge("Failed", "Idle", sync="startCam[id]?", update="w = 0, k = 0")


def _driver(nb: NetworkBuilder, n: int, scen) -> None:
    """Scenario driver: one committed burst injecting the configured jams in
    descending camera order, then the silent failures (each gated on the
    failing camera having established its organization where one can form),
    then recovery after RECOVER_TIME."""
    t = nb.new_template("ScenarioDriver")
    jams = sorted(scen.jam, reverse=True)
    stops = sorted(scen.stop)
    starts = sorted(scen.start)
    jam_set = set(scen.jam)

    if starts:
        t.add_clock("x")

    chain = []
    for d in jams:
        chain.append((f"Jam{d}", True))
    for c in stops:
        chain.append((f"WaitStop{c}", False))
        chain.append((f"Stop{c}", True))
    if starts:
        chain.append(("WaitRecover", False))
        for c in starts:
            chain.append((f"Start{c}", True))
    chain.append(("Done", False))

    for i, (name, committed) in enumerate(chain):
        t.add_location(name, initial=(i == 0), committed=committed)

    def add_step(src, dst, guard=None, sync=None, update=None):
        if dst == "WaitRecover":  # driver clock measures the recovery delay
            update = f"{update}, x = 0" if update else "x = 0"
        t.add_edge(src, dst, guard=guard, sync=sync, update=update)

    def nxt(i):
        return chain[i + 1][0]

    pos = 0
    for d in jams:
        add_step(f"Jam{d}", nxt(pos), guard=f"!jammed[{d}]",
                 sync=f"congestion[{d}]!", update=f"jammed[{d}] = true")
        add_step(f"Jam{d}", nxt(pos), guard=f"jammed[{d}]")
        pos += 1
    if stops:
        t.add_function(
            "bool anyPending() { for (j : cam_id) { if (cong_pending[j]) return true; } "
            "return false; }")
    for c in stops:
        # A failure is injected only after congestion is established and no
        # organization negotiation is in flight: when the camera heads a
        # jammed block it must have become the merged organization's master
        # first.
        heads_block = (c in jam_set and (c + 1) % n in jam_set
                       and (c - 1) % n not in jam_set)
        guard = "!anyPending()"
        if heads_block:
            guard = f"role[{c}] == R_MWS && " + guard
        add_step(f"WaitStop{c}", f"Stop{c}", guard=guard)
        pos += 1
        add_step(f"Stop{c}", nxt(pos), sync=f"stopCam[{c}]!",
                 update=f"alive[{c}] = false, role[{c}] = R_FAILED")
        pos += 1
    if starts:
        t.add_function(
            "int nearestLeft(cam_id i) { for (s : hop) { "
            "if (alive[(i + N - s) % N]) return (i + N - s) % N; } return i; }")
        t.add_function(
            "int nearestRight(cam_id i) { for (s : hop) { "
            "if (alive[(i + s) % N]) return (i + s) % N; } return i; }")
        add_step("WaitRecover", f"Start{starts[0]}", guard="x > RECOVER_TIME")
        pos += 1
        for c in starts:
            add_step(f"Start{c}", nxt(pos), sync=f"startCam[{c}]!",
                     update=f"alive[{c}] = true, role[{c}] = R_MASTER, "
                            f"camera[{c}].m_cam = {c}, "
                            "for (j : cam_id) electing[j] = false, "
                            f"for (j : cam_id) camera[{c}].slaves[j] = false, "
                            "for (i : cam_id) { leftN[i] = nearestLeft(i); "
                            "rightN[i] = nearestRight(i); }")
            pos += 1
