import pytest

import tamcheck.expr as E


def test_tokenize_operators():
    toks = [t.text for t in E.tokenize("a --> b && c <= -3")]
    assert toks == ["a", "-->", "b", "&&", "c", "<=", "-", "3", ""]


def test_precedence_and_over_or():
    ast = E.parse_expression("a && b || c && d")
    assert isinstance(ast, E.Bin) and ast.op == "or"
    assert ast.left.op == "and" and ast.right.op == "and"


def test_imply_right_associative_and_loosest():
    ast = E.parse_expression("a imply b imply c")
    assert ast.op == "imply"
    assert isinstance(ast.right, E.Bin) and ast.right.op == "imply"
    ast2 = E.parse_expression("a && b imply c")
    assert ast2.op == "imply" and ast2.left.op == "and"


def test_quantifier_scope_extends_right():
    # The quantifier body spans the whole implication, otherwise the bound
    # variable would be unresolved in the consequent.
    ast = E.parse_expression("forall (n : cam_id) p(n) imply q(n)")
    assert isinstance(ast, E.Quant)
    assert ast.body.op == "imply"


def test_not_binds_tighter_than_and():
    ast = E.parse_expression("!a && b")
    assert ast.op == "and"
    assert isinstance(ast.left, E.Unary) and ast.left.op == "not"


def test_postfix_chain():
    ast = E.parse_expression("camera[n].slaves[n+1]")
    assert isinstance(ast, E.Postfix)
    kinds = [op for op, _ in ast.ops]
    assert kinds == ["index", "attr", "index"]


def test_call_chain():
    ast = E.parse_expression("Camera(x).getLeftNeighbour() == n - 1")
    assert ast.op == "=="
    left = ast.left
    assert [op for op, _ in left.ops] == ["call", "attr", "call"]


def test_comparison_non_associative():
    with pytest.raises(E.ParseError):
        E.parse_expression("a < b < c")


def test_update_statement_list():
    stmts = E.parse_update("x = 0, count = count + 1; done = true")
    assert len(stmts) == 3
    assert all(isinstance(s, E.SAssign) for s in stmts)


def test_update_with_for_and_if():
    stmts = E.parse_update(
        "for (j : cam_id) { if (camera[id].slaves[j]) camera[id].slaves[j] = false; } k = 0")
    assert isinstance(stmts[0], E.SFor)
    assert isinstance(stmts[0].body[0], E.SIf)
    assert isinstance(stmts[1], E.SAssign)


def test_function_parse():
    f = E.parse_function(
        "bool isDep(int t) { if (t == id) return false; return leftN[id] == t; }")
    assert f.name == "isDep"
    assert f.ret == "bool"
    assert f.params == (("t", "int"),)
    assert isinstance(f.body[0], E.SIf)


def test_sync_forms():
    s = E.parse_sync("camEnter[id]!")
    assert (s.channel, s.direction) == ("camEnter", "send")
    assert s.index is not None
    s2 = E.parse_sync("startCar?")
    assert (s2.channel, s2.direction, s2.index) == ("startCar", "receive", None)


def test_parse_error_position():
    with pytest.raises(E.ParseError) as err:
        E.parse_expression("a && ")
    assert "line 1" in str(err.value)


def test_comments_ignored():
    ast = E.parse_expression("a // trailing comment\n && b")
    assert ast.op == "and"
