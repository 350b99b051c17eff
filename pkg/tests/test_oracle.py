"""The sequential reference implementation itself."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pramdb import oracle as O
from pramdb.errors import OracleCapFault, ParameterFault
from pramdb.query import parse_query

R = O.PlainRelation.of(("A", "B"), [(1, 2), (2, 3), (3, 3)])
S = O.PlainRelation.of(("B", "C"), [(3, 9), (4, 4)])


def test_algebra_on_small_relations():
    assert O.semijoin(R, S).sorted_rows() == [(2, 3), (3, 3)]
    assert O.join(R, S).sorted_rows() == [(2, 3, 9), (3, 3, 9)]
    assert O.join(R, S).attrs == ("A", "B", "C")
    T = O.PlainRelation.of(("B", "A"), [(2, 1)])
    assert O.difference(R, T).sorted_rows() == [(2, 3), (3, 3)]
    assert O.union(R, T).sorted_rows() == [(1, 2), (2, 3), (3, 3)]
    assert O.select(R, "A", "B", True).sorted_rows() == [(3, 3)]
    assert O.select(R, "B", 3, False).sorted_rows() == [(2, 3), (3, 3)]
    assert O.rename(R, "A", "Z").attrs == ("Z", "B")
    assert R.project(("B",)).sorted_rows() == [(2,), (3,)]
    assert O.oracle_join_size(R, S) == 2


def test_same_as_ignores_column_order():
    assert R.same_as(R.reorder(("B", "A")))
    assert not R.same_as(S)
    with pytest.raises(ParameterFault):
        R.reorder(("A",))
    with pytest.raises(ParameterFault):
        O.PlainRelation.of(("A",), [(1, 2)])


def test_cq_and_plan_evaluation():
    db = {"R": R, "S": S}
    q = parse_query("Q(a,c) :- R(a,b), S(b,c).")
    assert O.oracle_eval(q, db).sorted_rows() == [(2, 9), (3, 9)]
    p = parse_query("(project (sjoin R S) A)")
    assert O.oracle_eval(p, db).sorted_rows() == [(2,), (3,)]
    with pytest.raises(ParameterFault):
        O.oracle_eval(parse_query("Q(x) :- Z(x)."), db)
    with pytest.raises(ParameterFault):
        O.oracle_eval(parse_query("Q(x) :- R(x)."), db)


def test_caps():
    big = O.PlainRelation.of(("A",), [(i,) for i in range(5)])
    with pytest.raises(OracleCapFault):
        O.oracle_eval(parse_query("(sjoin R R)"), {"R": big}, cap=4)
    wide = O.PlainRelation.of(tuple("ABCDE"), [(1, 2, 3, 4, 5)])
    with pytest.raises(OracleCapFault):
        O.oracle_eval(parse_query("(sjoin R R)"), {"R": wide})


def test_reduce_fixpoint():
    db = {"R": R, "S": S}
    red = O.oracle_reduce(parse_query("Q(a,c) :- R(a,b), S(b,c)."), db)
    assert red["R"].sorted_rows() == [(2, 3), (3, 3)] and red["S"].sorted_rows() == [(3, 9)]


@given(st.lists(st.integers(0, 100), max_size=30))
def test_scan_and_sort(xs):
    scan = O.oracle_exact_scan(xs)
    assert len(scan) == len(xs) and (not xs or scan[-1] == sum(xs))
    assert O.oracle_sort(xs) == sorted(xs)


@given(st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4))), st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4))))
def test_join_projects_onto_semijoin(a, b):
    r = O.PlainRelation.of(("A", "B"), a)
    s = O.PlainRelation.of(("B", "C"), b)
    assert O.join(r, s).project(("A", "B")).tuples == O.semijoin(r, s).tuples
