"""Generalised hypertree decompositions: loading, verification, completion."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DecompositionFault
from .syntax import ConjunctiveQuery


@dataclass
class GHD:
    """Rooted tree with bags chi (variables) and mu (atom aliases)."""

    root: str
    parent: dict  # node id -> parent id (root -> None)
    chi: dict  # node id -> tuple of variables
    mu: dict  # node id -> tuple of atom aliases
    completed: list = field(default_factory=list)  # node ids added by completion

    @property
    def nodes(self) -> list:
        return list(self.parent)

    @property
    def width(self) -> int:
        return max((len(v) for v in self.mu.values()), default=0)

    def children(self, v: str) -> list:
        return sorted(c for c, p in self.parent.items() if p == v)

    def neighbours(self, v: str) -> list:
        out = self.children(v)
        if self.parent[v] is not None:
            out.insert(0, self.parent[v])
        return out

    def connected(self, nodes: set) -> bool:
        """A node set of a rooted tree is connected iff exactly one member has
        its parent outside the set."""
        return len([v for v in nodes if self.parent[v] not in nodes]) == 1

    def free_connex(self, free) -> bool:
        """Some connected node set U has the union of chi over U equal to free.

        Only nodes with chi inside free can belong to U, and enlarging U inside
        one connected component of those nodes keeps the union inside free, so
        it suffices to test the components."""
        free = set(free)
        if not free:
            return True
        cand = {v for v in self.nodes if set(self.chi[v]) <= free}
        seen: set = set()
        for start in sorted(cand):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for w in self.neighbours(v):
                    if w in cand and w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            union = set().union(*(set(self.chi[v]) for v in comp))
            if union == free:
                return True
        return False

    def to_json(self) -> dict:
        nodes = [{"id": v, "chi": list(self.chi[v]), "mu": list(self.mu[v])} for v in self.nodes]
        edges = [[p, c] for c, p in self.parent.items() if p is not None]
        return {"nodes": nodes, "edges": edges, "root": self.root}


def ghd_from_json(data: dict) -> GHD:
    """Build a GHD from {nodes: [{id, chi, mu}], edges: [[id, id]], root}."""
    try:
        nodes = data["nodes"]
        edges = data.get("edges", [])
        root = str(data.get("root", nodes[0]["id"] if nodes else ""))
        chi = {}
        mu = {}
        for n in nodes:
            nid = str(n["id"])
            if nid in chi:
                raise DecompositionFault(f"duplicate node id {nid!r}")
            chi[nid] = tuple(str(x) for x in n["chi"])
            mu[nid] = tuple(str(x) for x in n["mu"])
    except (KeyError, TypeError, IndexError) as exc:
        raise DecompositionFault(f"malformed decomposition: {exc}") from None
    if not chi:
        raise DecompositionFault("decomposition has no nodes")
    if root not in chi:
        raise DecompositionFault(f"root {root!r} is not a node")
    adj: dict = {v: [] for v in chi}
    for e in edges:
        if len(e) != 2:
            raise DecompositionFault(f"edge {e} does not have two endpoints")
        a, b = str(e[0]), str(e[1])
        if a not in chi or b not in chi:
            raise DecompositionFault(f"edge {e} mentions an unknown node")
        adj[a].append(b)
        adj[b].append(a)
    if len(edges) != len(chi) - 1:
        raise DecompositionFault("decomposition graph is not a tree (wrong edge count)")
    parent = {root: None}
    stack = [root]
    while stack:
        v = stack.pop()
        for w in sorted(adj[v]):
            if w in parent:
                continue
            parent[w] = v
            stack.append(w)
    if len(parent) != len(chi):
        raise DecompositionFault("decomposition graph is not connected")
    # keep the node order of the file
    parent = {v: parent[v] for v in chi}
    return GHD(root, parent, chi, mu)


def load_ghd(path) -> GHD:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DecompositionFault(f"{p}: {exc}") from None
    return ghd_from_json(data)


def _resolve_atoms(q: ConjunctiveQuery, ghd: GHD) -> None:
    """Accept relation names for atoms that are not aliased."""
    aliases = {a.alias for a in q.atoms}
    by_rel: dict = {}
    for a in q.atoms:
        by_rel.setdefault(a.relation, []).append(a.alias)
    for v, atoms in ghd.mu.items():
        out = []
        for name in atoms:
            if name in aliases:
                out.append(name)
            elif len(by_rel.get(name, [])) == 1:
                out.append(by_rel[name][0])
            else:
                raise DecompositionFault(f"node {v}: {name!r} does not name a unique body atom")
        ghd.mu[v] = tuple(out)


def verify_ghd(q: ConjunctiveQuery, ghd: GHD) -> None:
    """Raise DecompositionFault unless (T, chi, mu) is a GHD of q."""
    _resolve_atoms(q, ghd)
    variables = set(q.variables)
    for v in ghd.nodes:
        extra = set(ghd.chi[v]) - variables
        if extra:
            raise DecompositionFault(f"node {v}: chi mentions unknown variables {sorted(extra)}")
    # (1) every variable in some bag
    for x in q.variables:
        if not any(x in ghd.chi[v] for v in ghd.nodes):
            raise DecompositionFault(f"condition (1): variable {x} is in no bag")
    # (2) every atom inside some bag
    for a in q.atoms:
        if not any(set(a.vars) <= set(ghd.chi[v]) for v in ghd.nodes):
            raise DecompositionFault(f"condition (2): atom {a} is in no bag")
    # (3) connectedness
    for x in q.variables:
        holders = {v for v in ghd.nodes if x in ghd.chi[v]}
        if not ghd.connected(holders):
            raise DecompositionFault(f"condition (3): bags holding {x} are not connected")
    # chi covered by mu
    for v in ghd.nodes:
        covered = set()
        for alias in ghd.mu[v]:
            covered |= set(q.atom(alias).vars)
        if not set(ghd.chi[v]) <= covered:
            raise DecompositionFault(f"node {v}: chi {list(ghd.chi[v])} is not covered by mu {list(ghd.mu[v])}")
        if not ghd.mu[v] and ghd.chi[v]:
            raise DecompositionFault(f"node {v}: empty mu")


def complete_ghd(q: ConjunctiveQuery, ghd: GHD) -> GHD:
    """Every atom in some mu: an uncovered atom gets a new leaf below the first
    node whose bag contains its variables (width does not grow)."""
    out = GHD(ghd.root, dict(ghd.parent), dict(ghd.chi), dict(ghd.mu), list(ghd.completed))
    used = set(a for atoms in out.mu.values() for a in atoms)
    for a in q.atoms:
        if a.alias in used:
            continue
        host = next(v for v in ghd.nodes if set(a.vars) <= set(ghd.chi[v]))
        nid = f"{a.alias}__leaf"
        while nid in out.parent:
            nid += "_"
        out.parent[nid] = host
        out.chi[nid] = tuple(a.vars)
        out.mu[nid] = (a.alias,)
        out.completed.append(nid)
    return out


def trivial_ghd(q: ConjunctiveQuery, tree) -> GHD:
    """Width-1 decomposition from a join tree: chi = vars, mu = the atom itself."""
    return GHD(tree.root, dict(tree.parent), {a: tuple(v) for a, v in tree.vars.items()},
               {a: (a,) for a in tree.parent})
