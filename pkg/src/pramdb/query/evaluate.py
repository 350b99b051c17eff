"""Evaluators for semijoin plans, acyclic, free-connex and GHD-based queries."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..array_ops import compact_rel, full_links, project_view
from ..dbops import Variant, difference, join, projection, selection, semijoin, union
from ..errors import ParameterFault, PreconditionFault, SettingFault, SizeAssertionFault
from ..relstore import (Database, Dictionary, RelationArray, Setting, build_dictionary_aordered,
                        build_dictionary_general, translate)
from .ghd import GHD, complete_ghd, verify_ghd
from .jointree import (HEAD_ATOM, JoinTree, augmented_tree, check_free_connex, full_reduction, gyo_join_tree,
                       join_tree_from_parent)
from .syntax import Atom, ConjunctiveQuery, SemijoinPlan


# ------------------------------------------------------------ bookkeeping


@dataclass(frozen=True)
class SizeCheck:
    check: str
    observed: int
    bound: int
    ok: bool


@dataclass
class EvalStats:
    """Size-discipline checks and intermediate sizes of one evaluation."""

    checks: list = field(default_factory=list)
    sizes: dict = field(default_factory=dict)  # label -> (cells, tuples)
    meta: dict = field(default_factory=dict)

    def note(self, label: str, rel: RelationArray) -> None:
        self.sizes[label] = (rel.length, rel.proper_count())

    def check(self, name: str, observed: int, bound: int) -> None:
        ok = int(observed) <= int(bound)
        self.checks.append(SizeCheck(name, int(observed), int(bound), ok))
        if not ok:
            raise SizeAssertionFault(name, int(observed), int(bound))

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _stats(stats):
    return stats if stats is not None else EvalStats()


# ----------------------------------------------------------- input arrays


def atom_array(db: Database, atom: Atom) -> RelationArray:
    """The relation of ``atom`` with its attributes renamed to the atom's variables."""
    rel = db[atom.relation]
    if rel.arity != len(atom.vars):
        raise ParameterFault(f"atom {atom} has {len(atom.vars)} variables, {atom.relation} has arity {rel.arity}")
    ren = dict(zip(rel.attrs, atom.vars))
    ob = None if rel.ordered_by is None else tuple(ren[a] for a in rel.ordered_by)
    return rel.derive(attrs=atom.vars, ordered_by=ob, name=atom.alias)


def atom_arrays(q: ConjunctiveQuery, db: Database) -> dict:
    return {a.alias: atom_array(db, a) for a in q.atoms}


def _require_dictionary(db: Database, what: str) -> None:
    if db.setting is not Setting.DICTIONARY:
        raise SettingFault(f"{what} needs the dictionary setting (translate the database first)")


def to_dictionary(db: Database, eps=0.5) -> tuple[Database, Dictionary | None]:
    """Dictionary-setting copy of a token database (identity for dictionary input)."""
    if db.setting is Setting.DICTIONARY:
        return db, None
    if db.setting is Setting.ORDERED:
        d = build_dictionary_aordered(db.m, db, eps=eps)
    else:
        d = build_dictionary_general(db.m, db)
    return translate(db.m, db, d), d


def _boolean(S: RelationArray, name: str) -> RelationArray:
    """Nullary relation: {()} when S has a proper tuple, else empty.  Every
    inhabited cell writes 1 into the single cell (Common write)."""
    m = S.m
    out = RelationArray.empty(m, (), 1, S.domain, name=name)
    sp = np.flatnonzero(S.inhabited)
    with m.round(S.length) as r:
        r.write(out.inhabited_arr, np.zeros(sp.size, dtype=np.int64), 1, sp)
    return out


def _reorder(S: RelationArray, head: tuple, name: str) -> RelationArray:
    if tuple(S.attrs) == tuple(head):
        return S
    return project_view(S, head, name=name)


# ---------------------------------------------------------- acyclic queries


def reduce_database(q: ConjunctiveQuery, db: Database, eps=0.5, tree: JoinTree | None = None) -> dict:
    """Full reduction (bottom-up then top-down semijoins) of the atom arrays."""
    _require_dictionary(db, "full reduction")
    tree = tree or gyo_join_tree(q)
    if tree is None:
        raise PreconditionFault("query is cyclic")
    with db.m.phase("full_reduction"):
        return full_reduction(q, tree, atom_arrays(q, db), Variant.DICTIONARY_HASH, eps)


def eval_acyclic(q: ConjunctiveQuery, db: Database, lam=0.5, eps=0.5, tree: JoinTree | None = None,
                 stats: EvalStats | None = None) -> RelationArray:
    """Full reduction, then bottom-up S_v := pi_{free u attr(S_v)}(S_v join S_w)."""
    _require_dictionary(db, "eval_acyclic")
    return _acyclic(q, atom_arrays(q, db), db.in_size(), lam, eps, tree, _stats(stats))


def _acyclic(q: ConjunctiveQuery, arrays: dict, in_size: int, lam, eps, tree, stats: EvalStats) -> RelationArray:
    m = next(iter(arrays.values())).m
    tree = tree or gyo_join_tree(q)
    if tree is None:
        raise PreconditionFault("eval_acyclic needs an acyclic query")
    free = set(q.head)
    with m.phase("eval_acyclic"):
        with m.phase("full_reduction"):
            S = full_reduction(q, tree, arrays, Variant.DICTIONARY_HASH, eps)
        for v, rel in S.items():
            stats.note(f"reduced:{v}", rel)
        steps = []
        with m.phase("bottom_up"):
            for v in tree.bottom_up():
                for w in tree.children(v):
                    J = join(S[v], S[w], Variant.DICTIONARY_HASH, lam, eps)
                    X = tuple(S[v].attrs) + tuple(a for a in J.attrs if a in free and a not in S[v].attrs)
                    P = J if X == tuple(J.attrs) else projection(J, X, Variant.DICTIONARY_HASH, lam, eps)
                    S[v] = compact_rel(P, lam, eps, name=f"S[{v}]")
                    steps.append((f"S[{v}]<-{w}", S[v].proper_count()))
                    stats.note(f"S[{v}]<-{w}", S[v])
        root = S[tree.root]
        with m.phase("output"):
            if not q.head:
                out = _boolean(root, q.head_name)
            else:
                P = root if tuple(root.attrs) == tuple(q.head) and set(root.attrs) == free else \
                    projection(root, q.head, Variant.DICTIONARY_HASH, lam, eps)
                out = compact_rel(P, lam, eps, name=q.head_name)
    OUT = out.proper_count()
    stats.meta["OUT"] = OUT
    stats.meta["IN"] = in_size
    stats.meta["join_tree"] = {k: v for k, v in tree.parent.items()}
    for label, size in steps:
        stats.check(f"acyclic:{label}<=IN*OUT", size, in_size * OUT)
    stats.check("acyclic:output_cells<=(1+lambda)OUT", out.length, _one_plus(lam, OUT) if q.head else 1)
    return out


def _one_plus(lam, n: int) -> int:
    from fractions import Fraction

    return int((1 + Fraction(lam)) * n) if n else 0


# ------------------------------------------------------ free-connex queries


def eval_free_connex(q: ConjunctiveQuery, db: Database, lam=0.5, eps=0.5,
                     stats: EvalStats | None = None) -> RelationArray:
    """Full reduction, then the join of pi_X(S_A) over the head atom's neighbours."""
    _require_dictionary(db, "eval_free_connex")
    return _free_connex(q, atom_arrays(q, db), lam, eps, None, _stats(stats))


def _free_connex(q: ConjunctiveQuery, arrays: dict, lam, eps, tree, stats: EvalStats) -> RelationArray:
    m = next(iter(arrays.values())).m
    tree = tree or gyo_join_tree(q)
    aug = augmented_tree(q)
    if tree is None or aug is None:
        raise PreconditionFault("eval_free_connex needs a free-connex acyclic query")
    free = set(q.head)
    with m.phase("eval_free_connex"):
        with m.phase("full_reduction"):
            S = full_reduction(q, tree, arrays, Variant.DICTIONARY_HASH, eps)
        if not q.head:
            with m.phase("output"):
                out = _boolean(S[tree.root], q.head_name)
            stats.meta["OUT"] = out.proper_count()
            return out
        nbrs = set(aug.neighbours(HEAD_ATOM))
        order = [a.alias for a in q.atoms if a.alias in nbrs]
        parts = []
        used = []
        with m.phase("projections"):
            for alias in order:
                X = tuple(v for v in S[alias].attrs if v in free)
                if not X:
                    continue
                P = S[alias] if X == tuple(S[alias].attrs) else \
                    projection(S[alias], X, Variant.DICTIONARY_HASH, lam, eps)
                parts.append(P)
                used.append(alias)
        inter = []
        with m.phase("joins"):
            cur = parts[0]
            inter.append((f"pi[{used[0]}]", cur.proper_count()))
            for alias, P in zip(used[1:], parts[1:]):
                inter.append((f"pi[{alias}]", P.proper_count()))
                cur = join(cur, P, Variant.DICTIONARY_HASH, lam, eps)
                inter.append((f"join+{alias}", cur.proper_count()))
                stats.note(f"join+{alias}", cur)
        with m.phase("output"):
            if len(parts) == 1:
                cur = compact_rel(cur, lam, eps, name=q.head_name)
            out = _reorder(cur, tuple(q.head), q.head_name)
    OUT = out.proper_count()
    stats.meta["OUT"] = OUT
    stats.meta["join_order"] = used
    for label, size in inter:
        stats.check(f"free_connex:{label}<=OUT", size, OUT)
    stats.check("free_connex:output_cells<=(1+lambda)OUT", out.length, _one_plus(lam, OUT))
    return out


# ------------------------------------------------------------ GHD queries


def eval_ghd(q: ConjunctiveQuery, ghd: GHD, db: Database, lam=0.5, eps=0.5,
             stats: EvalStats | None = None) -> RelationArray:
    """Materialise one relation per bag (joins of mu, projection to chi), then
    evaluate the acyclic query over the bags."""
    _require_dictionary(db, "eval_ghd")
    stats = _stats(stats)
    verify_ghd(q, ghd)
    g = complete_ghd(q, ghd)
    arrays = atom_arrays(q, db)
    m = db.m
    IN = db.in_size()
    width = g.width
    bound = IN ** width
    bags = {}
    atoms = []
    parent = {}
    with m.phase("eval_ghd"):
        with m.phase("bags"):
            for v in g.nodes:
                name = f"G_{v}"
                cur = arrays[g.mu[v][0]]
                for alias in g.mu[v][1:]:
                    cur = join(cur, arrays[alias], Variant.DICTIONARY_HASH, lam, eps)
                    stats.check(f"ghd:bag[{v}]+{alias}<=IN^{width}", cur.proper_count(), bound)
                chi = tuple(g.chi[v])
                if not chi:
                    B = _boolean(cur, name)
                else:
                    P = cur if chi == tuple(cur.attrs) else projection(cur, chi, Variant.DICTIONARY_HASH, lam, eps)
                    B = compact_rel(P, lam, eps, name=name)
                stats.check(f"ghd:bag[{v}]<=IN^{width}", B.proper_count(), bound)
                stats.note(name, B)
                bags[name] = B.derive(name=name)
                atoms.append(Atom(name, name, chi))
                parent[name] = None if g.parent[v] is None else f"G_{g.parent[v]}"
        q2 = ConjunctiveQuery(q.head_name, q.head, tuple(atoms))
        stats.meta["ghd_width"] = width
        stats.meta["ghd_completed"] = list(g.completed)
        stats.meta["ghd_free_connex"] = g.free_connex(q.head)
        if check_free_connex(q2):
            stats.meta["ghd_route"] = "free_connex"
            out = _free_connex(q2, bags, lam, eps, None, stats)
        else:
            stats.meta["ghd_route"] = "acyclic"
            tree = join_tree_from_parent(q2, parent)
            out = _acyclic(q2, bags, sum(b.proper_count() for b in bags.values()), lam, eps, tree, stats)
    return out


def single_bag_ghd(q: ConjunctiveQuery) -> GHD:
    """The width-m decomposition with one bag holding every atom."""
    return GHD("all", {"all": None}, {"all": tuple(q.variables)}, {"all": tuple(a.alias for a in q.atoms)})


# ------------------------------------------------------ semijoin algebra


def eval_semijoin_plan(plan: SemijoinPlan, db: Database, eps=0.5, variant="DictionaryHash", lam=0.5,
                       stats: EvalStats | None = None) -> RelationArray:
    """Evaluate a join-free plan bottom-up with one operator variant."""
    variant = Variant.parse(variant)
    if variant is Variant.DICTIONARY_HASH:
        _require_dictionary(db, "variant DictionaryHash")
    proj_variant = {Variant.DICTIONARY_HASH: Variant.DICTIONARY_HASH, Variant.NAIVE: Variant.NAIVE}.get(
        variant, Variant.ORDERED_INTO_SELF)
    stats = _stats(stats)
    with db.m.phase("eval_semijoin_plan"):
        out = _plan(plan, db, eps, variant, proj_variant, lam)
    stats.meta["variant"] = variant.value
    return out


def _plan(node: SemijoinPlan, db: Database, eps, variant: Variant, proj_variant: Variant, lam) -> RelationArray:
    op = node.op
    if op == "rel":
        return db[node.args[0]]
    kids = [_plan(c, db, eps, variant, proj_variant, lam) for c in node.children]
    if op in ("sjoin", "diff") and variant is Variant.ORDERED_INTO_OTHER:
        S = kids[1]
        if S.ordered_by is not None and not S.fully_linked:
            full_links(S, eps)
    if op == "sjoin":
        return semijoin(kids[0], kids[1], variant, eps)
    if op == "diff":
        return difference(kids[0], kids[1], variant, eps)
    if op == "union":
        return union(kids[0], kids[1], variant, eps)
    if op == "select":
        attr, other = node.args
        if isinstance(other, tuple):
            c = other[1]
            if db.setting is Setting.DICTIONARY and not isinstance(c, int):
                raise ParameterFault(f"constant {c!r} is not a natural; the dictionary setting stores keys")
            return selection(kids[0], attr, c, is_attr=False)
        return selection(kids[0], attr, other, is_attr=True)
    if op == "project":
        return projection(kids[0], node.args, proj_variant, lam, eps)
    if op == "rename":
        old, new = node.args
        A = kids[0]
        if old not in A.attrs:
            raise ParameterFault(f"rename: unknown attribute {old!r}")
        if new in A.attrs and new != old:
            raise ParameterFault(f"rename: attribute {new!r} already present")
        ren = {a: (new if a == old else a) for a in A.attrs}
        ob = None if A.ordered_by is None else tuple(ren[a] for a in A.ordered_by)
        return A.derive(attrs=tuple(ren[a] for a in A.attrs), ordered_by=ob)
    raise ParameterFault(f"unknown plan operator {op!r}")


# ---------------------------------------------------------------- dispatch


def choose_method(q) -> str:
    if isinstance(q, SemijoinPlan):
        return "plan"
    if gyo_join_tree(q) is not None:
        return "free_connex" if check_free_connex(q) else "acyclic"
    return "wcoj" if q.is_join_query else "ghd"


def evaluate(q, db: Database, method: str = "auto", lam=0.5, eps=0.5, ghd: GHD | None = None,
             attr_order=None, variant="DictionaryHash", stats: EvalStats | None = None) -> RelationArray:
    """Run one evaluator; ``auto`` picks free-connex, acyclic, GHD (given or single
    bag) or wcoj from the query shape."""
    from .wcoj import wcoj

    stats = _stats(stats)
    if method == "auto":
        method = "ghd" if ghd is not None and isinstance(q, ConjunctiveQuery) else choose_method(q)
    stats.meta["method"] = method
    if method == "plan":
        if not isinstance(q, SemijoinPlan):
            raise ParameterFault("method 'plan' needs a semijoin plan")
        return eval_semijoin_plan(q, db, eps, variant, lam, stats)
    if not isinstance(q, ConjunctiveQuery):
        raise ParameterFault(f"method {method!r} needs a conjunctive query")
    if method == "acyclic":
        return eval_acyclic(q, db, lam, eps, stats=stats)
    if method == "free_connex":
        return eval_free_connex(q, db, lam, eps, stats=stats)
    if method == "ghd":
        return eval_ghd(q, ghd if ghd is not None else single_bag_ghd(q), db, lam, eps, stats=stats)
    if method == "wcoj":
        return wcoj(q, db, attr_order, lam, eps, stats=stats)
    raise ParameterFault(f"unknown method {method!r}")
