"""Join trees by GYO ear removal, free-connex test, full reduction."""
from __future__ import annotations

from dataclasses import dataclass

from ..dbops import Variant, semijoin
from .syntax import Atom, ConjunctiveQuery

HEAD_ATOM = "__head__"


@dataclass
class JoinTree:
    """Rooted tree over atom aliases."""

    root: str
    parent: dict  # alias -> parent alias (root -> None)
    vars: dict  # alias -> tuple of variables

    @property
    def nodes(self) -> list:
        return list(self.parent)

    def children(self, v: str) -> list:
        return sorted(c for c, p in self.parent.items() if p == v)

    def neighbours(self, v: str) -> list:
        out = self.children(v)
        if self.parent.get(v) is not None:
            out = [self.parent[v]] + out
        return out

    def top_down(self) -> list:
        order = [self.root]
        k = 0
        while k < len(order):
            order.extend(self.children(order[k]))
            k += 1
        return order

    def bottom_up(self) -> list:
        return list(reversed(self.top_down()))

    def is_valid(self) -> bool:
        """Connectedness: the nodes holding any variable form a subtree."""
        allv = set(v for vs in self.vars.values() for v in vs)
        for x in allv:
            holders = {a for a, vs in self.vars.items() if x in vs}
            # a set of tree nodes is connected iff exactly one of them has its
            # parent outside the set
            tops = [a for a in holders if self.parent[a] not in holders]
            if len(tops) != 1:
                return False
        return True


def gyo(named_vars: dict) -> JoinTree | None:
    """GYO reduction over {name: vars}; ears and witnesses are picked in
    lexicographic name order.  Returns None for cyclic hypergraphs."""
    if not named_vars:
        return None
    live = sorted(named_vars)
    parent: dict = {}
    while len(live) > 1:
        found = None
        for e in live:
            others = set()
            for f in live:
                if f != e:
                    others |= set(named_vars[f])
            shared = set(named_vars[e]) & others
            for f in live:
                if f != e and shared <= set(named_vars[f]):
                    found = (e, f)
                    break
            if found:
                break
        if found is None:
            return None
        e, f = found
        parent[e] = f
        live.remove(e)
    parent[live[0]] = None
    tree = JoinTree(live[0], parent, {k: tuple(v) for k, v in named_vars.items()})
    assert tree.is_valid()
    return tree


def gyo_join_tree(q: ConjunctiveQuery) -> JoinTree | None:
    return gyo({a.alias: a.vars for a in q.atoms})


def is_acyclic(q: ConjunctiveQuery) -> bool:
    return gyo_join_tree(q) is not None


def augmented_tree(q: ConjunctiveQuery) -> JoinTree | None:
    """Join tree of q plus a head atom over the free variables."""
    named = {a.alias: a.vars for a in q.atoms}
    named[HEAD_ATOM] = tuple(q.head)
    return gyo(named)


def check_free_connex(q: ConjunctiveQuery) -> bool:
    return is_acyclic(q) and augmented_tree(q) is not None


def full_reduction(q: ConjunctiveQuery, tree: JoinTree, arrays: dict, variant=Variant.DICTIONARY_HASH,
                   eps=0.5, prepare=None) -> dict:
    """Bottom-up then top-down semijoin passes over the join tree.

    ``arrays`` maps atom alias -> relation array with variables as attributes.
    ``prepare(array, X)`` may reorder/link an array before an ordered semijoin.
    """
    S = dict(arrays)

    def sj(a, b):
        if prepare is not None:
            a, b = prepare(a, b)
        return semijoin(a, b, variant, eps)

    for v in tree.bottom_up():
        for w in tree.children(v):
            S[v] = sj(S[v], S[w])
    for v in tree.top_down():
        for w in tree.children(v):
            S[w] = sj(S[w], S[v])
    return S


def atoms_by_alias(q: ConjunctiveQuery) -> dict:
    return {a.alias: a for a in q.atoms}


def join_tree_from_parent(q: ConjunctiveQuery, parent: dict) -> JoinTree:
    root = [k for k, p in parent.items() if p is None]
    if len(root) != 1:
        raise ValueError("a join tree needs exactly one root")
    return JoinTree(root[0], dict(parent), {a.alias: a.vars for a in q.atoms})


__all__ = ["Atom", "JoinTree", "gyo", "gyo_join_tree", "is_acyclic", "augmented_tree", "check_free_connex",
           "full_reduction", "HEAD_ATOM"]
