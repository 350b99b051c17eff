"""Query parsing, GYO join trees, free-connex test, fractional covers and decompositions."""
import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pramdb.errors import DecompositionFault, ParameterFault, QuerySyntaxFault, UnsafeQueryFault
from pramdb.query import (HEAD_ATOM, agm_bound, augmented_tree, check_free_connex, complete_ghd,
                          fractional_cover, ghd_from_json, gyo, gyo_join_tree, is_acyclic, load_ghd, make_cover,
                          parse_plan, parse_query, parse_rule, verify_cover, verify_ghd, within_agm)

TRIANGLE = "Q(a,b,c) :- R(a,b), S(b,c), T(a,c)."
PATH = "Q(x,z) :- E(x,y), F(y,z)."


def test_parse_rule_basic_and_aliases():
    q = parse_rule("Q(x) :- E(x,y), E(y,z).  % two hops")
    assert q.head == ("x",)
    assert [(a.relation, a.alias, a.vars) for a in q.atoms] == [("E", "E_1", ("x", "y")), ("E", "E_2", ("y", "z"))]
    assert q.variables == ("x", "y", "z") and not q.is_join_query
    assert str(parse_rule(TRIANGLE)) == "Q(a, b, c) :- R(a, b), S(b, c), T(a, c)."


def test_boolean_and_nullary_atoms():
    q = parse_rule("Q() :- R(x), S().")
    assert q.head == () and q.atoms[1].vars == ()


@pytest.mark.parametrize("text, fault", [
    ("Q(x) :- R(x,x).", QuerySyntaxFault),
    ("Q(x,x) :- R(x).", QuerySyntaxFault),
    ("Q(y) :- R(x).", UnsafeQueryFault),
    ("Q(x) R(x).", QuerySyntaxFault),
    ("Q(x) :- R(x", QuerySyntaxFault),
    ("Q(x) :- R(1).", QuerySyntaxFault),
    ("", QuerySyntaxFault),
    ("Q(x) :- R(x). extra", QuerySyntaxFault),
])
def test_rule_errors(text, fault):
    with pytest.raises(fault):
        parse_query(text)


def test_parse_plan_forms():
    p = parse_plan("(project (sjoin R (select S B 'k')) A) % comment")
    assert p.op == "project" and p.args == ("A",)
    sel = p.children[0].children[1]
    assert sel.args == ("B", ("const", "k"))
    assert parse_plan('(select R A "x")').args == ("A", ("const", "x"))
    assert parse_plan("(select R A 7)").args == ("A", ("const", 7))
    assert parse_plan("(rename R A Z)").args == ("A", "Z")
    assert parse_plan("(union R (diff S T))").relations() == {"R", "S", "T"}
    assert str(parse_plan("(sjoin R S)")) == "(sjoin R S)"


@pytest.mark.parametrize("text", ["(join R S)", "(product R S)", "(sjoin R)", "(select R A)", "(rename R 1 B)",
                                  "(frob R)", "(sjoin R S", "R S", "(project R 3)", "()"])
def test_plan_errors(text):
    with pytest.raises(QuerySyntaxFault):
        parse_plan(text)


def test_gyo_on_known_shapes():
    assert is_acyclic(parse_rule(PATH))
    assert not is_acyclic(parse_rule(TRIANGLE))
    t = gyo_join_tree(parse_rule("Q(x,y) :- R(x,y), S(y,z), T(y,w)."))
    assert t.is_valid() and sorted(t.nodes) == ["R", "S", "T"]
    assert gyo({}) is None


def test_free_connex():
    assert check_free_connex(parse_rule("Q(x,y) :- E(x,y), F(y,z)."))
    assert not check_free_connex(parse_rule(PATH))
    assert check_free_connex(parse_rule("Q() :- E(x,y), F(y,z)."))
    t = augmented_tree(parse_rule("Q(x,y) :- E(x,y), F(y,z)."))
    assert HEAD_ATOM in t.nodes


@given(st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=3, unique=True), min_size=1, max_size=6))
def test_gyo_trees_are_connected(edges):
    named = {f"R{i}": tuple(e) for i, e in enumerate(edges)}
    t = gyo(named)
    if t is not None:
        assert t.is_valid()
        assert set(t.nodes) == set(named)
        assert t.bottom_up()[-1] == t.root


def test_fractional_cover_of_triangle_is_half_each():
    cov = fractional_cover(parse_rule(TRIANGLE))
    assert cov.weights == (Fraction(1, 2),) * 3 and cov.value == Fraction(3, 2)


def test_fractional_cover_of_path_and_star():
    cov = fractional_cover(parse_rule(PATH))
    assert cov.weights == (1, 1)
    star = fractional_cover(parse_rule("Q(x,y,z,w) :- R(x,y), S(x,z), T(x,w)."))
    assert star.value == 3


@given(st.lists(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=3, unique=True), min_size=1, max_size=6))
def test_lp_cover_always_verifies(edges):
    body = ", ".join(f"R{i}({','.join(e)})" for i, e in enumerate(edges))
    q = parse_rule(f"Q() :- {body}.")
    cov = fractional_cover(q)
    assert verify_cover(q, cov.weights)
    assert cov.value <= len(q.variables)


def test_agm_bound_exact():
    q = parse_rule(TRIANGLE)
    cov = make_cover(q, ["1/2", "1/2", "1/2"])
    assert agm_bound(q, {"R": 64, "S": 64, "T": 64}, cov) == 512
    assert agm_bound(q, {"R": 2, "S": 2, "T": 2}, cov) == 3
    assert agm_bound(q, {"R": 0, "S": 5, "T": 5}, cov) == 0
    assert within_agm(768, q, {"R": 64, "S": 64, "T": 64}, cov, Fraction(1, 2))
    assert not within_agm(769, q, {"R": 64, "S": 64, "T": 64}, cov, Fraction(1, 2))
    with pytest.raises(ParameterFault):
        make_cover(q, [1, 0, 0])


def _tri_ghd():
    return {"root": "n1", "nodes": [{"id": "n1", "chi": ["a", "b", "c"], "mu": ["R", "S"]}], "edges": []}


def test_ghd_load_verify_complete(tmp_path):
    q = parse_rule(TRIANGLE)
    g = ghd_from_json(_tri_ghd())
    verify_ghd(q, g)
    assert g.width == 2
    full = complete_ghd(q, g)
    assert full.completed == ["T__leaf"] and full.parent["T__leaf"] == "n1"
    (tmp_path / "g.json").write_text(json.dumps(full.to_json()))
    again = load_ghd(tmp_path / "g.json")
    assert again.mu == full.mu and again.parent == full.parent


def test_ghd_free_connex_flag():
    g = ghd_from_json({"root": "1", "nodes": [{"id": "1", "chi": ["x", "y"], "mu": ["E"]},
                                              {"id": "2", "chi": ["y", "z"], "mu": ["F"]}], "edges": [["1", "2"]]})
    assert g.free_connex(["x", "y"]) and not g.free_connex(["x", "z"])


@pytest.mark.parametrize("data", [
    {"nodes": []},
    {"nodes": [{"id": "1", "chi": ["a"]}]},
    {"root": "9", "nodes": [{"id": "1", "chi": ["a"], "mu": ["R"]}]},
    {"nodes": [{"id": "1", "chi": [], "mu": []}, {"id": "2", "chi": [], "mu": []}], "edges": []},
    {"nodes": [{"id": "1", "chi": [], "mu": []}, {"id": "1", "chi": [], "mu": []}]},
    {"nodes": [{"id": "1", "chi": [], "mu": []}, {"id": "2", "chi": [], "mu": []}], "edges": [["1", "3"]]},
])
def test_malformed_ghd(data):
    with pytest.raises(DecompositionFault):
        ghd_from_json(data)


@pytest.mark.parametrize("nodes, edges", [
    ([{"id": "1", "chi": ["a", "b"], "mu": ["R"]}], []),  # c in no bag
    ([{"id": "1", "chi": ["a", "b", "c"], "mu": ["R"]}], []),  # chi not covered by mu
    ([{"id": "1", "chi": ["a", "b"], "mu": ["R"]}, {"id": "2", "chi": ["b", "c"], "mu": ["S"]},
      {"id": "3", "chi": ["a", "c"], "mu": ["T"]}], [["1", "2"], ["2", "3"]]),  # a disconnected
    ([{"id": "1", "chi": ["a", "b", "c", "d"], "mu": ["R", "S"]}], []),  # unknown variable
    ([{"id": "1", "chi": ["a", "b", "c"], "mu": ["R", "Nope"]}], []),
])
def test_invalid_ghd_conditions(nodes, edges):
    q = parse_rule(TRIANGLE)
    with pytest.raises(DecompositionFault):
        verify_ghd(q, ghd_from_json({"root": "1", "nodes": nodes, "edges": edges}))
