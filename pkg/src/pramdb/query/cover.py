"""Fractional edge covers and the AGM bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..errors import ParameterFault
from ..primitives import iroot_ceil
from .syntax import ConjunctiveQuery

SNAP = Fraction(1, 1 << 20)


@dataclass(frozen=True)
class FractionalCover:
    atoms: tuple  # aliases
    weights: tuple  # Fractions

    def weight(self, alias: str) -> Fraction:
        return self.weights[self.atoms.index(alias)]

    @property
    def value(self) -> Fraction:
        return sum(self.weights, Fraction(0))


def verify_cover(q: ConjunctiveQuery, weights: Sequence) -> bool:
    """Exact check on rationals: x_i >= 0 and sum over atoms holding A >= 1 for every A."""
    w = [Fraction(x) for x in weights]
    if len(w) != len(q.atoms) or any(x < 0 for x in w):
        return False
    for v in q.variables:
        if sum((x for a, x in zip(q.atoms, w) if v in a.vars), Fraction(0)) < 1:
            return False
    return True


def make_cover(q: ConjunctiveQuery, weights: Sequence) -> FractionalCover:
    w = tuple(Fraction(x) for x in weights)
    if not verify_cover(q, w):
        raise ParameterFault(f"{[str(x) for x in w]} is not a fractional edge cover")
    return FractionalCover(tuple(a.alias for a in q.atoms), w)


def fractional_cover(q: ConjunctiveQuery) -> FractionalCover:
    """Minimum fractional edge cover: LP in floating point, then an exact check.

    The float solution is first rounded to a nearby fraction with a small
    denominator; if that is not a cover, every weight is snapped up to the grid
    2^-20 (plus one grid step) and verified again.
    """
    from scipy.optimize import linprog

    atoms = q.atoms
    variables = q.variables
    if not atoms:
        raise ParameterFault("query has no atoms")
    if not variables:
        return FractionalCover(tuple(a.alias for a in atoms), tuple(Fraction(0) for _ in atoms))
    A = np.array([[-1.0 if v in a.vars else 0.0 for a in atoms] for v in variables])
    res = linprog(np.ones(len(atoms)), A_ub=A, b_ub=-np.ones(len(variables)), bounds=[(0, None)] * len(atoms),
                  method="highs")
    if res.status != 0:
        raise ParameterFault(f"cover LP failed: {res.message}")
    x = [max(0.0, float(v)) for v in res.x]
    nice = [Fraction(v).limit_denominator(1000) for v in x]
    if verify_cover(q, nice):
        return FractionalCover(tuple(a.alias for a in atoms), tuple(nice))
    snapped = [(Fraction(v) / SNAP).__ceil__() * SNAP + SNAP for v in x]
    if not verify_cover(q, snapped):
        raise ParameterFault("cover verification failed after snapping")
    return FractionalCover(tuple(a.alias for a in atoms), tuple(snapped))


def agm_bound(q: ConjunctiveQuery, sizes: dict, cover: FractionalCover) -> int:
    """ceil(prod |R_i|^x_i).  Exact integer root when the common denominator is
    small; otherwise log-space with one part in 10^9 of upward slack."""
    if not verify_cover(q, cover.weights):
        raise ParameterFault("invalid cover")
    terms = []
    for a, x in zip(q.atoms, cover.weights):
        n = int(sizes[a.alias])
        if x == 0:
            continue
        if n == 0:
            return 0
        terms.append((n, x))
    if not terms:
        return 1
    den = 1
    for _, x in terms:
        den = den * x.denominator // math.gcd(den, x.denominator)
    if den <= 64:
        prod = 1
        for n, x in terms:
            prod *= n ** int(x * den)
        return iroot_ceil(prod, den)
    log = sum(float(x) * math.log(n) for n, x in terms)
    return math.ceil(math.exp(log) * (1 + 1e-9))


def within_agm(value: int, q: ConjunctiveQuery, sizes: dict, cover: FractionalCover, lam) -> bool:
    """value <= (1+lambda) * prod |R_i|^x_i, decided exactly when possible."""
    lam = Fraction(lam)
    terms = [(int(sizes[a.alias]), x) for a, x in zip(q.atoms, cover.weights) if x != 0]
    if any(n == 0 for n, _ in terms):
        return value == 0
    den = 1
    for _, x in terms:
        den = den * x.denominator // math.gcd(den, x.denominator)
    if den <= 64:
        # (value / (1+lam))^den <= prod n^(x*den)
        prod = 1
        for n, x in terms:
            prod *= n ** int(x * den)
        lhs = Fraction(value) / (1 + lam)
        return lhs ** den <= prod
    return value <= (1 + float(lam)) * agm_bound(q, sizes, cover)
