import copy

import pytest

import tamcheck.expr as E
from tamcheck.model import (
    ArrayType, BoolType, Diagnostic, IntType, ModelError, NetworkBuilder,
    RecordType, Template, instantiate, validate,
)


def small_builder():
    nb = NetworkBuilder()
    nb.declare_constant("N", 6)
    nb.declare_range_type("cam_id", 0, "N-1")
    nb.declare_channel("camEnter", kind="binary", arity="N")
    nb.declare_channel("go", kind="broadcast")
    return nb


# -- builder API

def test_builder_two_locations_one_edge():
    nb = small_builder()
    t = nb.new_template("Toy")
    t.add_location("A", initial=True)
    t.add_location("B")
    t.add_edge("A", "B")
    assert len(t.locations) == 2
    assert len(t.edges) == 1


def test_declare_channel_array_arity():
    nb = small_builder()
    assert nb.net.channels["camEnter"].arity == 6
    assert nb.net.channels["camEnter"].kind == "binary"


def test_add_edge_dangling_target_fails():
    nb = small_builder()
    t = nb.new_template("Toy")
    t.add_location("A", initial=True)
    with pytest.raises(ModelError):
        t.add_edge("A", "Nowhere")


def test_add_edge_undeclared_channel_fails():
    nb = small_builder()
    t = nb.new_template("Toy")
    t.add_location("A", initial=True)
    t.add_location("B")
    with pytest.raises(ModelError):
        t.add_edge("A", "B", sync="foo!")


def test_duplicate_identifiers_rejected():
    nb = small_builder()
    with pytest.raises(ModelError):
        nb.declare_constant("N", 7)
    t = nb.new_template("Toy")
    t.add_location("A", initial=True)
    with pytest.raises(ModelError):
        t.add_location("A")
    with pytest.raises(ModelError):
        t.add_location("B", initial=True)  # second initial


# -- instantiate

def camera_like_template(nb):
    t = nb.new_template("Camera", parameters=[("id", "cam_id")])
    t.add_location("Master", initial=True)
    t.add_location("Slave")
    t.add_edge("Master", "Slave", sync="go?")
    return t


def test_instantiate_binds_parameters():
    nb = small_builder()
    t = camera_like_template(nb)
    p = instantiate(t, {"id": 0}, "Camera(0)")
    assert p.name == "Camera(0)"
    assert p.family == "Camera"
    assert p.index == 0
    assert p.params == {"id": 0}
    assert p.template.initial == "Master"


def test_instantiate_parameterless():
    nb = small_builder()
    t = nb.new_template("Car")
    t.add_location("startCar", initial=True)
    p = instantiate(t, None, "Car(3)")
    assert p.template.initial == "startCar"
    assert p.index == 3


def test_instantiate_out_of_range_actual():
    nb = small_builder()
    t = camera_like_template(nb)
    with pytest.raises(ModelError) as err:
        instantiate(t, {"id": 7}, "Camera(7)")
    assert "outside range" in str(err.value)


def test_instantiate_arity_mismatch():
    nb = small_builder()
    t = camera_like_template(nb)
    with pytest.raises(ModelError):
        instantiate(t, {}, "Camera(0)")
    with pytest.raises(ModelError):
        instantiate(t, {"id": 0, "extra": 1}, "Camera(0)")


def test_instantiation_deterministic():
    nb = small_builder()
    t = camera_like_template(nb)
    a = instantiate(t, {"id": 2}, "Camera(2)")
    b = instantiate(t, {"id": 2}, "Camera(2)")
    assert a == b


# -- validate

def built_network():
    nb = small_builder()
    t = camera_like_template(nb)
    nb.declare_global("camera", nb.array(nb.record(
        [("m_cam", "cam_id"), ("slaves", nb.array("bool", "N"))]), "N"),
        init=[{"m_cam": i, "slaves": [False] * 6} for i in range(6)])
    for i in range(6):
        nb.add_process("Camera", {"id": i})
    return nb.build()


def test_builder_network_validates_clean():
    net = built_network()
    assert validate(net) == []


def test_validate_unknown_channel_diagnostic():
    net = built_network()
    bad = copy.deepcopy(net)
    t = bad.templates["Camera"]
    t.edges.append(type(t.edges[0])("Master", "Slave", None,
                                    E.parse_sync("foo!"), (), "", "foo!", ""))
    diags = validate(bad)
    assert any("unknown channel" in d.message for d in diags)


def test_validate_channel_index_out_of_bounds():
    net = built_network()
    bad = copy.deepcopy(net)
    t = bad.templates["Camera"]
    t.edges.append(type(t.edges[0])("Master", "Slave", None,
                                    E.parse_sync("camEnter[N]!"), (), "", "camEnter[N]!", ""))
    diags = validate(bad)
    assert any("out of bounds" in d.message for d in diags)


def test_builder_rejects_committed_with_invariant():
    nb = small_builder()
    t = nb.new_template("Bad")
    t.add_clock("x")
    with pytest.raises(ModelError):
        t.add_location("A", initial=True, committed=True, invariant="x <= 2")


def test_validate_committed_with_invariant_diagnostic():
    from tamcheck.model import Location
    nb = small_builder()
    t = nb.new_template("Bad")
    t.add_clock("x")
    t.add_location("A", initial=True)
    t.locations.append(Location("C", True, E.parse_expression("x <= 2"), "x <= 2"))
    diags = validate(nb.net)
    assert any("committed" in d.message for d in diags)


def test_validate_unresolved_identifier():
    nb = small_builder()
    t = nb.new_template("Bad")
    t.add_location("A", initial=True)
    t.add_location("B")
    t.add_edge("A", "B", guard="mystery > 1")
    diags = validate(nb.net)
    assert any("unresolved identifier" in d.message for d in diags)


def test_constants_retrievable():
    net = built_network()
    assert net.constant("N") == 6
    assert net.typedefs["cam_id"] == (0, 5)


def test_guard_calling_impure_function_rejected():
    nb = small_builder()
    nb.declare_global("flag", "bool", init=0)
    t = nb.new_template("Bad")
    t.add_function("void poke() { flag = true; }")
    t.add_function("bool check() { poke(); return flag; }")
    t.add_location("A", initial=True)
    t.add_location("B")
    t.add_edge("A", "B", guard="check()")
    diags = validate(nb.net)
    assert any("impure" in d.message for d in diags)


def test_clock_arithmetic_rejected():
    nb = small_builder()
    t = nb.new_template("Bad")
    t.add_clock("x")
    t.add_location("A", initial=True)
    t.add_location("B")
    t.add_edge("A", "B", guard="x + 1 > 2")
    diags = validate(nb.net)
    assert any("clock" in d.message.lower() for d in diags)


def test_types():
    assert IntType(0, 5).hi == 5
    with pytest.raises(ModelError):
        IntType(3, 1)
    with pytest.raises(ModelError):
        ArrayType(BoolType(), 0)
