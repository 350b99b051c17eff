"""Seeded instance generators shared by the benchmark command and the tests."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass


@dataclass
class Instance:
    """Host-side database plus the query or plan to run on it."""

    family: str
    n: int
    schemas: dict
    data: dict
    query: str

    @property
    def in_size(self) -> int:
        return sum(len(rows) for rows in self.data.values())


def _distinct(rng: random.Random, k: int, arity: int, dom: int) -> list:
    k = min(k, dom ** arity)
    rows: set = set()
    while len(rows) < k:
        rows.add(tuple(rng.randint(1, dom) for _ in range(arity)))
    return sorted(rows)


def random_relation(rng: random.Random, k: int, arity: int, dom: int) -> list:
    return _distinct(rng, k, arity, dom)


def uniform(n: int, seed: int = 0) -> Instance:
    """R(A,B), S(B,C) with n tuples each over a domain of size n; plan R semijoin S."""
    rng = random.Random(seed * 1_000_003 + n)
    dom = max(2, n)
    schemas = {"R": ("A", "B"), "S": ("B", "C")}
    data = {"R": _distinct(rng, n, 2, dom), "S": _distinct(rng, n, 2, dom)}
    return Instance("uniform", n, schemas, data, "(sjoin R S)")


def skewed_join(n: int, seed: int = 0) -> Instance:
    """R(A,B), S(B,C) where about n^0.4 heavy B-values carry most tuples of R and
    about n^0.3 tuples each in S; the rest is uniform."""
    rng = random.Random(seed * 1_000_033 + n)
    heavy = max(1, round(n ** 0.4))
    per = max(1, round(n ** 0.3))
    dom = max(4, 2 * n)
    R: set = set()
    S: set = set()
    hv = list(range(1, heavy + 1))
    while len(R) < n // 2:
        R.add((rng.randint(1, dom), rng.choice(hv)))
    for b in hv:
        for _ in range(per):
            S.add((b, rng.randint(1, dom)))
    while len(R) < n:
        R.add((rng.randint(1, dom), rng.randint(1, dom)))
    while len(S) < n:
        S.add((rng.randint(1, dom), rng.randint(1, dom)))
    schemas = {"R": ("A", "B"), "S": ("B", "C")}
    return Instance("skewed-join", n, schemas, {"R": sorted(R), "S": sorted(S)}, "Q(a,b,c) :- R(a,b), S(b,c).")


def evens_odds(n: int, seed: int = 0, perturb: int | None = None) -> Instance:
    """R = {2, 4, ..., 2n}, S = {1, 3, ..., 2n-1}.  With ``perturb = i`` the i-th
    value of each relation (0-based) becomes 2n+1."""
    R = [2 * (i + 1) for i in range(n)]
    S = [2 * i + 1 for i in range(n)]
    if perturb is not None:
        R[perturb] = 2 * n + 1
        S[perturb] = 2 * n + 1
    schemas = {"R": ("A",), "S": ("A",)}
    return Instance("evens-odds", n, schemas, {"R": [(v,) for v in R], "S": [(v,) for v in S]}, "(sjoin R S)")


def path_graph(n: int, seed: int = 0) -> Instance:
    """A path 1 -> 2 -> ... -> n split into three edge relations by seeded shuffling,
    plus the two-hop query over consecutive edges."""
    rng = random.Random(seed * 1_000_037 + n)
    edges = [(i, i + 1) for i in range(1, n)]
    rng.shuffle(edges)
    schemas = {"E": ("A", "B"), "F": ("A", "B")}
    half = len(edges) // 2
    data = {"E": sorted(edges[:half]), "F": sorted(edges[half:])}
    return Instance("path", n, schemas, data, "Q(x,z) :- E(x,y), F(y,z).")


def acyclic_star(n: int, seed: int = 0, dom: int | None = None) -> Instance:
    """Q(x,y) :- R(x,y), S(y,z), T(y,w) with n tuples per relation."""
    rng = random.Random(seed * 1_000_039 + n)
    dom = dom or max(2, int(math.isqrt(n) * 2))
    schemas = {"R": ("A", "B"), "S": ("A", "B"), "T": ("A", "B")}
    data = {k: _distinct(rng, n, 2, dom) for k in schemas}
    return Instance("acyclic", n, schemas, data, "Q(x,y) :- R(x,y), S(y,z), T(y,w).")


def triangle(n: int, seed: int = 0, dom: int | None = None) -> Instance:
    """R(a,b), S(b,c), T(a,c), n tuples each."""
    rng = random.Random(seed * 1_000_081 + n)
    dom = dom or max(2, int(math.isqrt(n)) + 2)
    schemas = {"R": ("A", "B"), "S": ("A", "B"), "T": ("A", "B")}
    data = {k: _distinct(rng, n, 2, dom) for k in schemas}
    return Instance("triangle", n, schemas, data, "Q(a,b,c) :- R(a,b), S(b,c), T(a,c).")


FAMILIES = {
    "uniform": uniform,
    "skewed-join": skewed_join,
    "evens-odds": evens_odds,
    "path": path_graph,
    "acyclic": acyclic_star,
    "triangle": triangle,
}
