"""Traffic network construction, presets, properties, zones and invariants."""

import pytest

from tamcheck import explore, initial_state, instantiate
from tamcheck.query import check, parse_query
from tamcheck.traffic import (
    ConfigError, Scenario, TrafficConfig, Zone, ZoneClassifier, build_model,
    check_all, classify_zone, parse_scenario_text, preset_config,
    scenario_presets, standard_properties,
)
from tamcheck.traffic.model import R_FAILED, R_SLAVE


def test_process_inventory_at_six_cameras():
    # five processes per camera plus release traffic, the car fleet and the
    # scenario driver
    cfg = preset_config("quiet")
    net = build_model(cfg)
    camera_side = [p for p in net.processes
                   if p.family in ("Camera", "TrafficMonitor", "OrganizationController",
                                   "SelfHealingController", "PulseGenerator")]
    assert len(camera_side) == 30
    assert len(net.processes) == 30 + 1 + cfg.cars + 1


def test_neighbor_ring_wraps():
    cfg = preset_config("quiet")
    net = build_model(cfg)
    cn = net.compiled()
    s0 = initial_state(net)
    assert s0.vars[cn.var_slot_by_name["leftN[0]"]] == 5
    assert s0.vars[cn.var_slot_by_name["rightN[5]"]] == 0


def test_single_camera_config_rejected():
    with pytest.raises(ConfigError):
        TrafficConfig(n_cameras=1).validated()


def test_config_constraints():
    with pytest.raises(ConfigError):
        TrafficConfig(capacity=4, n_cars=4).validated()  # capacity < cars
    with pytest.raises(ConfigError):
        TrafficConfig(wait_time=5, alive_time=9).validated()
    assert TrafficConfig().cars == 4  # 2 * capacity


def test_instantiate_camera_template():
    cfg = preset_config("quiet")
    net = build_model(cfg)
    p = instantiate(net.templates["Camera"], {"id": 0}, "Camera(0)")
    assert p.template.initial == "Master"
    assert p.params["id"] == 0
    car = instantiate(net.templates["Car"], {"nr": 0}, "Car(0)")
    assert car.template.initial == "startCar"


def test_constants_housed_in_network():
    cfg = preset_config("quiet")
    net = build_model(cfg)
    for name, value in (("N", 6), ("CAM_TIME", 10), ("RECOVER_TIME", 500),
                        ("CAPACITY", 2), ("CAR_GAP", 3), ("WAIT_TIME", 5),
                        ("ALIVE_TIME", 15)):
        assert net.constant(name) == value


# -- presets and scenario files

def test_preset_vectors():
    presets = scenario_presets()
    fig7 = presets["fig7"]
    assert fig7.jam_vector(6) == [False, True, True, True, False, False]
    assert fig7.stop_vector(6) == [False, True, False, False, False, False]
    paper_r = presets["paper-R"]
    assert paper_r.jam_vector(6) == [False, False, True, True, True, False]
    assert paper_r.stop_vector(6) == [False, False, True, False, False, False]
    assert paper_r.start == ()
    quiet = presets["quiet"]
    assert quiet.jam == () and quiet.stop == () and quiet.start == ()


def test_scenario_clipping():
    s = Scenario(jam=(2, 3, 4), stop=(2,))
    c = s.clipped(3)
    assert c.jam == (2,) and c.stop == (2,)


def test_scenario_file_roundtrip():
    text = """
    # comment
    n_cameras=4
    jam=1,2
    stop=1
    start=
    capacity=2
    alive_time=15
    """
    cfg = parse_scenario_text(text)
    assert cfg.n_cameras == 4
    assert cfg.scenario.jam == (1, 2)
    assert cfg.scenario.stop == (1,)
    assert cfg.scenario.start == ()


def test_scenario_file_errors():
    with pytest.raises(ConfigError):
        parse_scenario_text("bogus line")
    with pytest.raises(ConfigError):
        parse_scenario_text("n_cameras=abc")
    with pytest.raises(ConfigError):
        parse_scenario_text("mystery=1")


# -- property texts

def test_property_texts_match_published_forms():
    cfg = preset_config("paper-R")
    net = build_model(cfg)
    props = {p.name: p for p in standard_properties(cfg, net)}
    assert props["I1"].literal.text == "A[] not forall (i : cam_id) Camera(i).Slave"
    assert props["I2"].literal.text == "A[] not deadlock"
    assert props["R2"].literal.shape == "-->"
    assert "Camera(x).getLeftNeighbour() == n - 1" in props["R4"].literal.text
    assert props["R1"].literal.text.startswith("A<> SelfHealingController(2).Failed")
    # leads-to readings accompany the A<> ... imply ... forms
    for name in ("F1", "F2", "F3", "R1", "R3", "R4"):
        assert props[name].leads_to, name
    for name in ("I1", "I2", "R2"):
        assert not props[name].leads_to, name


# -- behaviour

def test_quiet_every_camera_remains_master():
    cfg = preset_config("quiet", n_cameras=4)
    net = build_model(cfg)
    g = explore(net)
    v = check(g, parse_query("A[] forall (i : cam_id) Camera(i).Master", net))
    assert v.satisfied


def test_no_lost_cars_invariant():
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    g = explore(net)
    n = cfg.n_cameras
    total = " + ".join(f"cam_count[{i}]" for i in range(n))
    v = check(g, parse_query(f"A[] {total} == cars_inside", net))
    assert v.satisfied


def test_merge_determinism_three_camera_subcase():
    # Jam phase only: the upstream-most jammed single master ends up
    # mastering the merged organization on every run.
    cfg = TrafficConfig(n_cameras=3, scenario=Scenario(jam=(1, 2))).validated()
    net = build_model(cfg)
    g = explore(net)
    v = check(g, parse_query(
        "A<> Camera(1).MasterWithSlaves && camera[1].slaves[2]", net))
    assert v.satisfied
    v2 = check(g, parse_query("A[] not Camera(2).MasterWithSlaves", net))
    assert v2.satisfied


def test_role_exclusivity_is_structural():
    cfg = preset_config("quiet")
    net = build_model(cfg)
    assert net.templates["Camera"].location_names() == [
        "Master", "MasterWithSlaves", "Slave", "Failed"]


def test_slave_consistency_in_normal_zone():
    # In settled states every recorded slave link is real: the recording
    # camera is master-with-slaves and the recorded camera a slave (or has
    # failed).  Mid-adaptation and undetected-failure windows are exactly
    # the non-Normal zones.
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    cn = net.compiled()
    g = explore(net)
    zc = ZoneClassifier(net)
    n = cfg.n_cameras
    cam_procs = cn.fam_procs["Camera"]
    loc_ids = cn.loc_ids[cam_procs[0]]
    mws, slave, failed = loc_ids["MasterWithSlaves"], loc_ids["Slave"], loc_ids["Failed"]
    slots = {(i, j): cn.var_slot_by_name[f"camera[{i}].slaves[{j}]"]
             for i in range(n) for j in range(n)}
    checked = 0
    for s in g.states:
        if zc.classify(s) != Zone.NORMAL:
            continue
        for i in range(n):
            for j in range(n):
                if s.vars[slots[(i, j)]]:
                    assert s.locs[cam_procs[i]] == mws, (i, j)
                    assert s.locs[cam_procs[j]] in (slave, failed), (i, j)
                    checked += 1
    assert checked > 0


def test_slaves_never_self():
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    cn = net.compiled()
    g = explore(net)
    slots = [cn.var_slot_by_name[f"camera[{i}].slaves[{i}]"] for i in range(4)]
    assert all(not s.vars[k] for s in g.states for k in slots)


# -- zones

def test_zone_initial_state_normal():
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    assert classify_zone(net, initial_state(net)) == Zone.NORMAL


def test_zone_classification_over_failure_scenario():
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    cn = net.compiled()
    g = explore(net)
    zc = ZoneClassifier(net)
    alive2 = cn.var_slot_by_name["alive[2]"]
    det32 = cn.var_slot_by_name["det[3][2]"]
    oc_procs = cn.fam_procs["OrganizationController"]
    turning_master = cn.loc_ids[oc_procs[0]]["TurningMaster"]
    saw_undesired = saw_adaptive = False
    for s in g.states:
        if not s.vars[alive2] and not s.vars[det32]:
            # failed but not yet detected by its slave
            z = zc.classify(s)
            if z == Zone.UNDESIRED:
                saw_undesired = True
        if any(s.locs[p] == turning_master for p in oc_procs):
            assert zc.classify(s) == Zone.ADAPTIVE
            saw_adaptive = True
    assert saw_undesired and saw_adaptive


def test_zone_invalid_for_all_slave_state():
    cfg = preset_config("quiet", n_cameras=2)
    net = build_model(cfg)
    cn = net.compiled()
    s0 = initial_state(net)
    slave = cn.loc_ids[cn.fam_procs["Camera"][0]]["Slave"]
    locs = list(s0.locs)
    for p in cn.fam_procs["Camera"]:
        locs[p] = slave
    bad = s0._replace(locs=tuple(locs))
    assert classify_zone(net, bad) == Zone.INVALID


def test_zone_total_over_reachable_states():
    cfg = preset_config("quiet", n_cameras=2)
    net = build_model(cfg)
    g = explore(net)
    zc = ZoneClassifier(net)
    zones = {zc.classify(s) for s in g.states}
    assert zones <= {Zone.NORMAL, Zone.UNDESIRED, Zone.ADAPTIVE, Zone.INVALID}
    assert Zone.NORMAL in zones


# -- fig7 scenario

def test_fig7_scenario_explores_and_holds_invariants():
    cfg = preset_config("fig7", n_cameras=3, recover_time=25)
    net = build_model(cfg)
    g = explore(net)
    assert not g.truncated
    assert check(g, parse_query("A[] not deadlock", net)).satisfied
    # the failed camera recovers on some run
    v = check(g, parse_query(
        "E<> Camera(1).Failed && alive[1] == 0", net))
    assert v.satisfied
    v2 = check(g, parse_query("E<> alive[1] == 1 && det[2][1] == 0 && "
                              "SelfHealingController(2).Idle && cars_gone == N_CARS", net))
    assert v2.satisfied


def test_standard_properties_small_network():
    cfg = preset_config("paper-R", n_cameras=4)
    net = build_model(cfg)
    g = explore(net)
    results = check_all(g, standard_properties(cfg, net))
    assert all(pv.satisfied for pv in results), \
        [pv.prop.name for pv in results if not pv.satisfied]
