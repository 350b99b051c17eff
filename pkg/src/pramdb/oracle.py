"""Sequential ground truth: set-based relational algebra and query evaluation.

Nothing here touches the machine model; every function is plain Python over
sets of tuples.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

from .errors import OracleCapFault, ParameterFault
from .query.syntax import ConjunctiveQuery, SemijoinPlan

DEFAULT_CAP = 200
DEFAULT_ARITY = 4


@dataclass(frozen=True)
class PlainRelation:
    """Schema plus a duplicate-free set of tuples."""

    attrs: tuple
    tuples: frozenset

    @classmethod
    def of(cls, attrs: Sequence[str], rows: Iterable[Sequence]) -> "PlainRelation":
        attrs = tuple(attrs)
        rows = frozenset(tuple(r) for r in rows)
        if any(len(r) != len(attrs) for r in rows):
            raise ParameterFault("row arity does not match the schema")
        return cls(attrs, rows)

    def __len__(self) -> int:
        return len(self.tuples)

    def sorted_rows(self) -> list:
        return sorted(self.tuples, key=lambda r: tuple((type(v).__name__, v) for v in r))

    def reorder(self, attrs: Sequence[str]) -> "PlainRelation":
        attrs = tuple(attrs)
        if set(attrs) != set(self.attrs) or len(attrs) != len(self.attrs):
            raise ParameterFault(f"{attrs} is not a permutation of {self.attrs}")
        idx = [self.attrs.index(a) for a in attrs]
        return PlainRelation(attrs, frozenset(tuple(r[i] for i in idx) for r in self.tuples))

    def project(self, attrs: Sequence[str]) -> "PlainRelation":
        attrs = tuple(attrs)
        idx = [self.attrs.index(a) for a in attrs]
        return PlainRelation(attrs, frozenset(tuple(r[i] for i in idx) for r in self.tuples))

    def same_as(self, other: "PlainRelation") -> bool:
        """Set equality up to column order."""
        if set(self.attrs) != set(other.attrs):
            return False
        return self.tuples == other.reorder(self.attrs).tuples


def _check_cap(name: str, rel: PlainRelation, cap: int, max_arity: int) -> None:
    if len(rel) > cap:
        raise OracleCapFault(f"{name}: {len(rel)} tuples exceed the oracle cap {cap}")
    if len(rel.attrs) > max_arity:
        raise OracleCapFault(f"{name}: arity {len(rel.attrs)} exceeds the oracle cap {max_arity}")


def plain_database(schemas: dict, data: dict) -> dict:
    return {name: PlainRelation.of(schemas[name], data[name]) for name in schemas}


# ----------------------------------------------------- relational algebra


def semijoin(R: PlainRelation, S: PlainRelation) -> PlainRelation:
    X = [a for a in R.attrs if a in S.attrs]
    keys = {tuple(s[S.attrs.index(a)] for a in X) for s in S.tuples}
    return PlainRelation(R.attrs, frozenset(r for r in R.tuples if tuple(r[R.attrs.index(a)] for a in X) in keys))


def join(R: PlainRelation, S: PlainRelation) -> PlainRelation:
    X = [a for a in R.attrs if a in S.attrs]
    extra = [a for a in S.attrs if a not in X]
    out = set()
    for r in R.tuples:
        for s in S.tuples:
            if all(r[R.attrs.index(a)] == s[S.attrs.index(a)] for a in X):
                out.add(tuple(r) + tuple(s[S.attrs.index(a)] for a in extra))
    return PlainRelation(R.attrs + tuple(extra), frozenset(out))


def difference(R: PlainRelation, S: PlainRelation) -> PlainRelation:
    return PlainRelation(R.attrs, R.tuples - S.reorder(R.attrs).tuples)


def union(R: PlainRelation, S: PlainRelation) -> PlainRelation:
    return PlainRelation(R.attrs, R.tuples | S.reorder(R.attrs).tuples)


def select(R: PlainRelation, attr: str, other, is_attr: bool) -> PlainRelation:
    i = R.attrs.index(attr)
    if is_attr:
        k = R.attrs.index(other)
        return PlainRelation(R.attrs, frozenset(r for r in R.tuples if r[i] == r[k]))
    return PlainRelation(R.attrs, frozenset(r for r in R.tuples if r[i] == other))


def rename(R: PlainRelation, old: str, new: str) -> PlainRelation:
    return PlainRelation(tuple(new if a == old else a for a in R.attrs), R.tuples)


# -------------------------------------------------------------- evaluation


def oracle_eval(q, db: dict, cap: int = DEFAULT_CAP, max_arity: int = DEFAULT_ARITY) -> PlainRelation:
    """Exact q(D) for a conjunctive query (backtracking over valuations) or a
    semijoin plan (set algebra).  ``db`` maps relation names to PlainRelations."""
    for name, rel in db.items():
        _check_cap(name, rel, cap, max_arity)
    if isinstance(q, SemijoinPlan):
        return _eval_plan(q, db)
    if isinstance(q, ConjunctiveQuery):
        return _eval_cq(q, db)
    raise ParameterFault(f"cannot evaluate {type(q).__name__}")


def _eval_cq(q: ConjunctiveQuery, db: dict) -> PlainRelation:
    atoms = list(q.atoms)
    for a in atoms:
        if a.relation not in db:
            raise ParameterFault(f"unknown relation {a.relation!r}")
        if len(db[a.relation].attrs) != len(a.vars):
            raise ParameterFault(f"arity mismatch for {a}")
    out = set()

    def extend(k: int, val: dict) -> None:
        if k == len(atoms):
            out.add(tuple(val[v] for v in q.head))
            return
        a = atoms[k]
        for row in db[a.relation].tuples:
            new = dict(val)
            ok = True
            for v, x in zip(a.vars, row):
                if v in new and new[v] != x:
                    ok = False
                    break
                new[v] = x
            if ok:
                extend(k + 1, new)

    extend(0, {})
    return PlainRelation(tuple(q.head), frozenset(out))


def _eval_plan(node: SemijoinPlan, db: dict) -> PlainRelation:
    if node.op == "rel":
        name = node.args[0]
        if name not in db:
            raise ParameterFault(f"unknown relation {name!r}")
        return db[name]
    kids = [_eval_plan(c, db) for c in node.children]
    if node.op == "sjoin":
        return semijoin(*kids)
    if node.op == "diff":
        return difference(*kids)
    if node.op == "union":
        return union(*kids)
    if node.op == "select":
        attr, other = node.args
        if isinstance(other, tuple):
            return select(kids[0], attr, other[1], False)
        return select(kids[0], attr, other, True)
    if node.op == "project":
        return kids[0].project(node.args)
    if node.op == "rename":
        return rename(kids[0], *node.args)
    raise ParameterFault(f"unknown plan operator {node.op!r}")


# --------------------------------------------------------- other oracles


def oracle_exact_scan(A: Sequence[int]) -> list:
    """Exact inclusive prefix sums."""
    return list(accumulate(int(a) for a in A))


def oracle_sort(A: Sequence) -> list:
    return sorted(A)


def oracle_reduce(q: ConjunctiveQuery, db: dict) -> dict:
    """Pairwise semijoins between atoms sharing variables, iterated to a fixpoint.

    Returns {alias: PlainRelation over the atom's variables}."""
    S = {a.alias: PlainRelation(tuple(a.vars), db[a.relation].tuples) for a in q.atoms}
    changed = True
    while changed:
        changed = False
        for a in q.atoms:
            for b in q.atoms:
                if a.alias == b.alias:
                    continue
                new = semijoin(S[a.alias], S[b.alias])
                if len(new) != len(S[a.alias]):
                    S[a.alias] = new
                    changed = True
    return S


def oracle_join_size(R: PlainRelation, S: PlainRelation) -> int:
    return len(join(R, S))
