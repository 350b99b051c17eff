"""Basic operations on relation arrays: compaction, sorting, hashing, search
and deduplication."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ParameterFault, PreconditionFault, SettingFault
from .kernel import NONE, Machine, WriteMode
from .primitives import (approx_compact, as_fraction, iroot_ceil, padded_sort, predecessor_links,
                         rational_root_ceil, successor_links)
from .relstore import IntDomain, RelationArray, Setting, lex_cmp, rows_equal

# ------------------------------------------------------------------ helpers


def project_view(A: RelationArray, X: Sequence[str], name: str | None = None) -> RelationArray:
    """Array with the X-columns of every cell (not deduplicated); one round of |A| work."""
    X = tuple(X)
    m = A.m
    pay = m.alloc(A.length, len(X), name=f"{A.name}[{','.join(X)}]")
    with m.round(A.length) as r:
        if A.length:
            r.write_all(pay, A.columns(X))
    ob = A.order_for(X)
    view = RelationArray(m, X, pay, A.inhabited_arr, A.domain, ob, name or f"pi({A.name})")
    return view


def full_links(A: RelationArray, eps) -> RelationArray:
    """Predecessor and successor links over inhabited cells (strict)."""
    m = A.m
    inh = A.inhabited
    pred = predecessor_links(m, inh, eps)
    succ = successor_links(m, inh, eps)
    with m.round(A.length) as r:
        r.write_all(A.link("pred"), pred)
        r.write_all(A.link("succ"), succ)
    A.fully_linked = True
    return A


def _require_dictionary(A: RelationArray, what: str) -> IntDomain:
    if A.domain.setting is not Setting.DICTIONARY:
        raise SettingFault(f"{what} needs the dictionary setting")
    return A.domain


# --------------------------------------------------------- compact and sort


def compact_rel(A: RelationArray, lam, eps, name: str | None = None) -> RelationArray:
    """<= (1+lambda)k cells, order kept; mutual links ``image`` (on A) and ``origin``."""
    m = A.m
    with m.phase("compact_rel"):
        comp = approx_compact(m, A.inhabited, lam, eps)
        src = comp.src
        B = RelationArray.empty(m, A.attrs, comp.length, A.domain, name or f"compact({A.name})",
                                ordered_by=A.ordered_by)
        live = src != NONE
        with m.round(comp.length) as r:
            if comp.length:
                r.write_all(B.payload_arr, np.where(live[:, None], A.payload[np.maximum(src, 0)], 0))
                r.write_all(B.inhabited_arr, live.astype(np.int8))
                r.write_all(B.link("origin"), src)
        with m.round(A.length) as r:
            r.write_all(A.link("image"), comp.dest)
    return B


def _sort_exponent(N: int, base: int, k: int) -> int:
    """Smallest c with N**c >= base**k (values below base**k are below N**c)."""
    target = base ** k
    c = 1
    while N ** c < target:
        c += 1
    return c


def sort_rel(A: RelationArray, X: Sequence[str], lam, eps, dsize: int | None = None,
             name: str | None = None) -> RelationArray:
    """X-ordered copy of A by padded sorting of characteristic numbers.

    The sort key runs over X followed by the remaining attributes, so the
    output is fully ordered.  ``dsize`` is |D| (defaults to the size recorded
    in the domain).  The radix is c_val|D| + 1.
    """
    dom = _require_dictionary(A, "sort_rel")
    m = A.m
    X = tuple(X)
    if not set(X) <= set(A.attrs):
        raise ParameterFault(f"sort attributes {X} not in {A.attrs}")
    full = X + tuple(a for a in A.attrs if a not in X)
    k = len(full)
    base = dom.bound + 1  # m = c_val |D| + 1
    n = max(A.length, dsize if dsize is not None else dom.size)
    N = max(n, 2)
    c = 2 * k if N * N >= base else _sort_exponent(N, base, k)
    c = max(c, 1)
    with m.phase("sort_rel"):
        cols = A.columns(full) if A.length else np.zeros((0, k), dtype=np.int64)
        big = base ** k > (1 << 62)
        inh = A.inhabited
        if big:
            char = np.array([sum(int(v) * base ** (k - 1 - j) for j, v in enumerate(row)) if ok else 0
                             for row, ok in zip(cols, inh)], dtype=object)
        else:
            weights = np.array([base ** (k - 1 - j) for j in range(k)], dtype=np.int64)
            char = np.where(inh, (cols * weights).sum(axis=1) if k else 0, 0).astype(np.int64)
        m.charge_round(A.length * max(k, 1))
        ps = padded_sort(m, char, lam, eps, c, present=inh, n=n)
        order = ps.order
        B = RelationArray.empty(m, A.attrs, ps.length, A.domain, name or f"sort({A.name})", ordered_by=full)
        live = order != NONE
        with m.round(ps.length) as r:
            if ps.length:
                r.write_all(B.payload_arr, np.where(live[:, None], A.payload[np.maximum(order, 0)], 0))
                r.write_all(B.inhabited_arr, live.astype(np.int8))
                r.write_all(B.link("origin"), order)
        with m.round(A.length) as r:
            r.write_all(A.link("image"), np.where(inh, ps.dest, NONE))
    return B


# ----------------------------------------------------------- hash tables


@dataclass
class ArrayHashTable:
    """``hash[i]`` in [1, |A|] for inhabited cells (NONE otherwise)."""

    hash: np.ndarray
    scratch_cells: int


def _digits(bound: int, eps: Fraction) -> tuple[int, int]:
    """Radix r and digit count d with r**d > bound, r about bound**eps."""
    d = max(1, math.ceil(1 / eps))
    r = max(2, iroot_ceil(bound + 1, d))
    return r, d


def _hash_rows(m: Machine, rows: np.ndarray, mask: np.ndarray, bound: int, eps: Fraction) -> ArrayHashTable:
    if m.config.write_mode is not WriteMode.ARBITRARY:
        raise ParameterFault("array hash tables need Arbitrary write mode")
    n = rows.shape[0]
    k = rows.shape[1]
    r, d = _digits(bound, eps)
    pids = np.flatnonzero(mask)
    h = np.zeros(n, dtype=np.int64)  # previous hash, row of the scratch grid
    peak = 0
    with m.phase("hash_table"):
        if k == 0:
            cell = m.alloc(1, fill=NONE, name="hash_scratch")
            with m.round(pids.size) as rd:
                rd.write(cell, np.zeros(pids.size, dtype=np.int64), pids, pids)
            h[pids] = cell.data[0]
            m.charge_round(pids.size)
            m.free(cell)
            peak = 1
        first = True
        for col in range(k):
            v = rows[:, col]
            for s in range(d - 1, -1, -1):
                digit = (v // (r ** s)) % r
                height = 1 if first else n
                grid = m.alloc(height * r, fill=NONE, name="hash_scratch")
                peak = max(peak, height * r)
                addr = h[pids] * r + digit[pids]
                with m.round(pids.size) as rd:
                    rd.write(grid, addr, pids, pids)
                with m.round(pids.size):
                    h[pids] = grid.data[addr]
                m.free(grid)
                first = False
        out = np.where(mask, h + 1, NONE)
    return ArrayHashTable(out, peak)


def hash_table(A: RelationArray, eps) -> ArrayHashTable:
    dom = _require_dictionary(A, "hash_table")
    return _hash_rows(A.m, A.payload, A.inhabited, dom.bound, as_fraction(eps, "epsilon"))


# --------------------------------------------------------------- searching


def search_tuples_dict(A: RelationArray, B: RelationArray, eps) -> np.ndarray:
    """Partner link for each inhabited cell of A to a cell of B with the same tuple."""
    dom = _require_dictionary(A, "search_tuples_dict")
    _require_dictionary(B, "search_tuples_dict")
    if set(A.attrs) != set(B.attrs):
        raise ParameterFault(f"schemas differ: {A.attrs} vs {B.attrs}")
    m = A.m
    eps = as_fraction(eps, "epsilon")
    na, nb = A.length, B.length
    with m.phase("search_dict"):
        rows = np.concatenate([A.payload, B.columns(A.attrs)]) if na + nb else np.zeros((0, A.arity), np.int64)
        mask = np.concatenate([A.inhabited, B.inhabited])
        ht = _hash_rows(m, rows, mask, dom.bound, eps)
        C = m.alloc(na + nb, fill=NONE, name="posting")
        bp = np.flatnonzero(B.inhabited)
        with m.round(bp.size) as r:
            r.write(C, ht.hash[na + bp] - 1, bp, na + bp)
        ap = np.flatnonzero(A.inhabited)
        partner = np.full(na, NONE, dtype=np.int64)
        with m.round(ap.size) as r:
            partner[ap] = C.data[ht.hash[ap] - 1]
            r.write(A.link("partner"), ap, partner[ap])
        m.free(C)
    return partner


def _first_at_or_after(B: RelationArray, k: np.ndarray) -> np.ndarray:
    inh = B.inhabited
    succ = B.link_data("succ")
    kk = np.minimum(k, B.length - 1)
    out = np.where(inh[kk], kk, succ[kk])
    return np.where(k >= B.length, NONE, out)


def _require_fully(B: RelationArray, X: Sequence[str]) -> tuple:
    order = B.order_for(X)
    if order is None:
        raise PreconditionFault(f"{B.name} is not ordered by a list starting with {sorted(X)}")
    if not B.fully_linked:
        raise PreconditionFault(f"{B.name} is not fully linked")
    return order


def _largest_at_most(B: RelationArray, order: tuple, q: np.ndarray, qmask: np.ndarray, eps: Fraction,
                     strict: bool) -> np.ndarray:
    """For each query row, the largest inhabited index i with B[i][order] <= q (or < q)."""
    m = B.m
    n = B.length
    nq = q.shape[0]
    rounds = max(1, math.ceil(1 / eps))
    g = max(2, iroot_ceil(max(n, 1), rounds))
    lo = np.zeros(nq, dtype=np.int64)
    span = n
    keys = B.columns(order) if n else np.zeros((0, len(order)), np.int64)
    dom = B.domain
    active = qmask.copy()
    if n == 0:
        for _ in range(rounds + 1):
            m.charge_round(0)
        return np.full(nq, NONE, dtype=np.int64)
    qi = np.flatnonzero(active)
    for _ in range(rounds):
        step = -(-span // g)
        probes = lo[qi, None] + step * np.arange(g + 1)[None, :]
        cells = _first_at_or_after(B, probes.reshape(-1)).reshape(probes.shape)
        valid = cells != NONE
        c = np.zeros(cells.shape, dtype=np.int64)
        if valid.any():
            flat = np.flatnonzero(valid.reshape(-1))
            rows = np.repeat(qi, g + 1)[flat]
            c.reshape(-1)[flat] = lex_cmp(dom, keys[cells.reshape(-1)[flat]], q[rows])
        ok = valid & ((c < 0) if strict else (c <= 0))
        # processor l sees ok[l] and not ok[l+1]; exactly one such l exists when ok[0]
        with m.round(qi.size * (g + 1)):
            pick = np.where(ok[:, :g] & ~ok[:, 1:], np.arange(g)[None, :], -1).max(axis=1)
            lo[qi] = lo[qi] + np.maximum(pick, 0) * step
        if _ == 0:
            found = ok[:, 0]
            active[qi[~found]] = False
        span = step
    res = np.full(nq, NONE, dtype=np.int64)
    idx = np.flatnonzero(active)
    res[idx] = _first_at_or_after(B, lo[idx])
    with m.round(nq):
        pass
    return res


def search_ordered_into_B(A: RelationArray, B: RelationArray, X: Sequence[str] | None, eps,
                          query_rows: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """n^eps-ary descent in a fully linked, fully X-ordered B.

    Returns (lo, hi): lo[i] is the largest index with B.t[X] <= t and hi[i] the
    smallest index with B.t[X] >= t, both NONE when absent.  For equal runs the
    extreme cells of the run are returned.
    """
    eps = as_fraction(eps, "epsilon")
    X = tuple(A.attrs if X is None else X)
    order = _require_fully(B, X)
    if not A.domain.ordered and order:
        raise SettingFault("ordered search needs an ordered domain")
    m = B.m
    with m.phase("search_ordered_B"):
        q = A.columns(order) if query_rows is None else query_rows
        qmask = A.inhabited
        lo = _largest_at_most(B, order, q, qmask, eps, strict=False)
        lt = _largest_at_most(B, order, q, qmask, eps, strict=True)
        first = _first_at_or_after(B, np.zeros(1, dtype=np.int64))[0] if B.length else NONE
        succ = B.link_data("succ")
        with m.round(A.length):
            if B.length:
                hi = np.where(lt != NONE, succ[np.maximum(lt, 0)], first)
                hi = np.where(qmask, hi, NONE)
            else:
                hi = np.full(A.length if query_rows is None else q.shape[0], NONE, dtype=np.int64)
    return lo, hi


def search_ordered_into_A(A: RelationArray, B: RelationArray, eps) -> np.ndarray:
    """Membership links A -> B when A is fully ordered; boundaries are not computed."""
    eps = as_fraction(eps, "epsilon")
    if set(A.attrs) != set(B.attrs):
        raise ParameterFault(f"schemas differ: {A.attrs} vs {B.attrs}")
    if not A.fully_ordered:
        raise PreconditionFault(f"{A.name} is not fully ordered")
    m = A.m
    with m.phase("search_ordered_A"):
        D = A.derive(inhabited=m.adopt(A.inhabited_arr.data.copy(), name="dedup"), name=f"dedup({A.name})")
        dedup_ordered(D, eps)
        full_links(D, eps)
        order = D.ordered_by
        _, hi = search_ordered_into_B(B, D, order, eps, query_rows=B.columns(order))
        bp = np.flatnonzero(B.inhabited & (hi != NONE))
        eq = rows_equal(A.domain, D.payload[hi[bp]], B.columns(A.attrs)[bp]) if bp.size else np.zeros(0, bool)
        bp = bp[eq]
        mark = m.alloc(A.length, fill=NONE, name="marks")
        with m.round(B.length) as r:
            r.write(mark, hi[bp], bp, bp)
        rep = D.link_data("representative")
        ap = np.flatnonzero(A.inhabited)
        partner = np.full(A.length, NONE, dtype=np.int64)
        with m.round(ap.size) as r:
            partner[ap] = mark.data[rep[ap]]
            r.write(A.link("partner"), ap, partner[ap])
        m.free(mark)
    return partner


# ------------------------------------------------------------ deduplication


def _deactivate(A: RelationArray, rep: np.ndarray) -> None:
    """rep[i] is the representative of inhabited cell i; others are switched off."""
    m = A.m
    ap = np.flatnonzero(A.inhabited)
    dup = ap[rep[ap] != ap]
    with m.round(ap.size) as r:
        r.write(A.link("representative"), ap, rep[ap])
        r.write(A.inhabited_arr, dup, 0)


def dedup_dict(A: RelationArray, eps) -> RelationArray:
    """One representative per distinct tuple via an array hash table; work O(|A|)."""
    dom = _require_dictionary(A, "dedup_dict")
    m = A.m
    with m.phase("dedup_dict"):
        ht = _hash_rows(m, A.payload, A.inhabited, dom.bound, as_fraction(eps, "epsilon"))
        C = m.alloc(A.length, fill=NONE, name="posting")
        ap = np.flatnonzero(A.inhabited)
        with m.round(ap.size) as r:
            r.write(C, ht.hash[ap] - 1, ap, ap)
        rep = np.full(A.length, NONE, dtype=np.int64)
        with m.round(ap.size):
            rep[ap] = C.data[ht.hash[ap] - 1]
        m.free(C)
        _deactivate(A, rep)
    return A


def dedup_ordered(A: RelationArray, eps) -> RelationArray:
    """Fully ordered A: a cell is a representative unless its predecessor holds the
    same tuple; the second link pass points duplicates at their representative."""
    if not A.fully_ordered:
        raise PreconditionFault(f"{A.name} is not fully ordered")
    m = A.m
    with m.phase("dedup_ordered"):
        inh = A.inhabited
        pred = predecessor_links(m, inh, eps)
        ap = np.flatnonzero(inh)
        has = pred[ap] != NONE
        same = np.zeros(ap.size, dtype=bool)
        if has.any():
            same[has] = rows_equal(A.domain, A.payload[ap[has]], A.payload[pred[ap[has]]])
        is_rep = np.zeros(A.length, dtype=bool)
        with m.round(ap.size):
            is_rep[ap[~same]] = True
        pred2 = predecessor_links(m, is_rep, eps)
        rep = np.full(A.length, NONE, dtype=np.int64)
        with m.round(ap.size):
            rep[ap] = np.where(is_rep[ap], ap, pred2[ap])
        _deactivate(A, rep)
    return A
