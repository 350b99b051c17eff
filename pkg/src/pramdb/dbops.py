"""Relational operators over concise relation arrays."""
from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .array_ops import (compact_rel, dedup_dict, dedup_ordered, full_links, project_view,
                        search_ordered_into_A, search_ordered_into_B, search_tuples_dict, sort_rel)
from .errors import ParameterFault, PreconditionFault, SettingFault
from .kernel import NONE
from .primitives import approx_compact, as_fraction, schedule_tasks
from .relstore import RelationArray, Setting, rows_equal


class Variant(str, Enum):
    DICTIONARY_HASH = "DictionaryHash"
    ORDERED_INTO_OTHER = "OrderedIntoOther"
    ORDERED_INTO_SELF = "OrderedIntoSelf"
    NAIVE = "Naive"

    @classmethod
    def parse(cls, v) -> "Variant":
        if isinstance(v, Variant):
            return v
        key = str(v).strip().lower()
        aliases = {"a": cls.DICTIONARY_HASH, "dict": cls.DICTIONARY_HASH, "dictionaryhash": cls.DICTIONARY_HASH,
                   "b": cls.ORDERED_INTO_OTHER, "orderedintoother": cls.ORDERED_INTO_OTHER,
                   "c": cls.ORDERED_INTO_SELF, "orderedintoself": cls.ORDERED_INTO_SELF,
                   "naive": cls.NAIVE}
        if key not in aliases:
            raise ParameterFault(f"unknown operator variant {v!r}")
        return aliases[key]


def _fresh_inhabited(A: RelationArray, name: str):
    return A.m.adopt(A.inhabited_arr.data.copy(), name=f"{name}.inhabited")


def _shared(R: RelationArray, S: RelationArray) -> tuple:
    return tuple(a for a in R.attrs if a in S.attrs)


def _same_schema(R: RelationArray, S: RelationArray) -> None:
    if set(R.attrs) != set(S.attrs):
        raise ParameterFault(f"schemas differ: {R.attrs} vs {S.attrs}")


def _nonempty(S: RelationArray) -> bool:
    """Every inhabited cell writes 1 into one flag cell (Common write)."""
    m = S.m
    flag = m.alloc(1, dtype=np.int8, name="nonempty")
    sp = np.flatnonzero(S.inhabited)
    with m.round(S.length) as r:
        r.write(flag, np.zeros(sp.size, dtype=np.int64), 1, sp)
    out = bool(flag.data[0])
    m.free(flag)
    return out


# ---------------------------------------------------------------- selection


def selection(A: RelationArray, attr: str, other, is_attr: bool | None = None) -> RelationArray:
    """sigma_{attr = other}; ``other`` is an attribute name or a constant (a key in
    the dictionary setting, a raw value otherwise)."""
    if attr not in A.attrs:
        raise ParameterFault(f"unknown attribute {attr!r}")
    if is_attr is None:
        is_attr = isinstance(other, str) and other in A.attrs
    m = A.m
    with m.phase("selection"):
        col = A.columns([attr])[:, 0]
        if is_attr:
            if other not in A.attrs:
                raise ParameterFault(f"unknown attribute {other!r}")
            ok = A.domain.eq(col, A.columns([other])[:, 0]) if A.length else np.zeros(0, bool)
        else:
            ok = _eq_const(A, col, other)
        inh = m.alloc(A.length, dtype=np.int8, name="selection.inhabited")
        with m.round(A.length) as r:
            r.write_all(inh, (A.inhabited & ok).astype(np.int8))
        out = A.derive(inhabited=inh, name=f"sel({A.name})")
    return out


def _eq_const(A: RelationArray, col: np.ndarray, c) -> np.ndarray:
    if A.length == 0:
        return np.zeros(0, dtype=bool)
    if A.domain.setting is Setting.DICTIONARY:
        return col == int(c)
    vals = A.domain.store.values
    return np.asarray(vals[col] == c, dtype=bool)


# --------------------------------------------------------------- projection


def projection(A: RelationArray, X: Sequence[str], variant="DictionaryHash", lam=0.5, eps=0.5) -> RelationArray:
    """Concise pi_X(A) in an array of |A| cells; ``projection`` links from A."""
    variant = Variant.parse(variant)
    X = tuple(X)
    if not set(X) <= set(A.attrs) or len(set(X)) != len(X):
        raise ParameterFault(f"projection list {X} invalid for {A.attrs}")
    m = A.m
    with m.phase("projection"):
        P = project_view(A, X, name=f"pi({A.name})")
        P = P.derive(inhabited=_fresh_inhabited(A, "projection"))
        if variant is Variant.DICTIONARY_HASH:
            if A.domain.setting is not Setting.DICTIONARY:
                raise SettingFault("hash projection needs the dictionary setting")
            dedup_dict(P, eps)
        elif variant is Variant.ORDERED_INTO_SELF:
            prefix = A.order_for(X)
            if prefix is None:
                raise PreconditionFault(f"{A.name} is not ordered by a list starting with {list(X)}")
            P.ordered_by = prefix
            dedup_ordered(P, eps)
        elif variant is Variant.NAIVE:
            _dedup_naive(P)
        else:
            raise ParameterFault(f"projection has no {variant.value} variant")
        rep = P.link_data("representative")
        with m.round(A.length) as r:
            ap = np.flatnonzero(A.inhabited)
            r.write(A.link("projection"), ap, rep[ap])
        # order: the longest prefix of A's order list inside X
        ob = None
        if A.ordered_by is not None:
            pre = []
            for a in A.ordered_by:
                if a not in X:
                    break
                pre.append(a)
            ob = tuple(pre) if pre else None
        P.ordered_by = ob
    return P


def _dedup_naive(A: RelationArray) -> None:
    """One processor per cell pair; the leftmost equal cell is the representative."""
    m = A.m
    n = A.length
    ap = np.flatnonzero(A.inhabited)
    rep = np.full(n, NONE, dtype=np.int64)
    with m.round(n * n):
        if ap.size:
            pay = A.payload[ap]
            for pos, i in enumerate(ap):
                eq = rows_equal(A.domain, pay[:pos + 1], np.broadcast_to(pay[pos], pay[:pos + 1].shape))
                rep[i] = ap[int(np.argmax(eq))]
    dup = ap[rep[ap] != ap]
    with m.round(ap.size) as r:
        r.write(A.link("representative"), ap, rep[ap])
        r.write(A.inhabited_arr, dup, 0)


# ----------------------------------------------------------- partner search


def _partners(R: RelationArray, S: RelationArray, X: tuple, variant: Variant, eps,
              need_full_order: bool) -> np.ndarray:
    """For each inhabited cell of R a cell of S agreeing on X, or NONE."""
    m = R.m
    if not X:
        has = _nonempty(S)
        first = int(np.flatnonzero(S.inhabited)[0]) if has else NONE
        with m.round(R.length):
            return np.where(R.inhabited, first, NONE)
    if variant is Variant.DICTIONARY_HASH:
        if R.domain.setting is not Setting.DICTIONARY:
            raise SettingFault("hash variant needs the dictionary setting")
        Rp = project_view(R, X)
        Sp = project_view(S, X)
        p = search_tuples_dict(Rp, Sp, eps)
        m.free(Sp.payload_arr, Rp.payload_arr)
        return p
    if variant is Variant.ORDERED_INTO_OTHER:
        order = S.order_for(X)
        if order is None or (need_full_order and not S.fully_ordered):
            raise PreconditionFault(f"{S.name} is not fully ordered by {list(X)}")
        if not S.fully_linked:
            raise PreconditionFault(f"{S.name} is not fully linked")
        lo, _ = search_ordered_into_B(R, S, X, eps)
        hit = (lo != NONE) & R.inhabited
        idx = np.flatnonzero(hit)
        ok = rows_equal(R.domain, R.columns(order)[idx], S.columns(order)[lo[idx]]) if idx.size else np.zeros(0, bool)
        p = np.full(R.length, NONE, dtype=np.int64)
        with m.round(R.length):
            p[idx[ok]] = lo[idx[ok]]
        return p
    if variant is Variant.ORDERED_INTO_SELF:
        order = R.order_for(X)
        if order is None or (need_full_order and not R.fully_ordered):
            raise PreconditionFault(f"{R.name} is not fully ordered by {list(X)}")
        Rp = project_view(R, order)
        Sp = project_view(S, order)
        return search_ordered_into_A(Rp, Sp, eps)
    if variant is Variant.NAIVE:
        return _partners_naive(R, S, X)
    raise ParameterFault(f"unknown variant {variant}")


def _partners_naive(R: RelationArray, S: RelationArray, X: tuple) -> np.ndarray:
    m = R.m
    rp = np.flatnonzero(R.inhabited)
    sp = np.flatnonzero(S.inhabited)
    p = np.full(R.length, NONE, dtype=np.int64)
    target = m.alloc(R.length, fill=NONE, name="naive_partner")
    with m.round(R.length * S.length) as r:
        if rp.size and sp.size:
            rx = R.columns(X)
            sx = S.columns(X)[sp]
            for i in rp:
                eq = rows_equal(R.domain, sx, np.broadcast_to(rx[i], sx.shape))
                hits = sp[eq]
                if hits.size:
                    r.write(target, np.full(hits.size, i), hits, i * S.length + hits)
    p[:] = target.data
    m.free(target)
    return p


# ------------------------------------------------------- semijoin algebra


def semijoin(R: RelationArray, S: RelationArray, variant="DictionaryHash", eps=0.5) -> RelationArray:
    """Concise R semijoin S in an array of |R| cells; partner links into S."""
    variant = Variant.parse(variant)
    m = R.m
    X = _shared(R, S)
    with m.phase("semijoin"):
        p = _partners(R, S, X, variant, eps, need_full_order=False)
        inh = m.alloc(R.length, dtype=np.int8, name="semijoin.inhabited")
        out = R.derive(inhabited=inh, name=f"sj({R.name},{S.name})")
        with m.round(R.length) as r:
            r.write_all(inh, (R.inhabited & (p != NONE)).astype(np.int8))
            r.write_all(out.link("partner"), np.where(R.inhabited, p, NONE))
    return out


def difference(R: RelationArray, S: RelationArray, variant="DictionaryHash", eps=0.5) -> RelationArray:
    variant = Variant.parse(variant)
    _same_schema(R, S)
    m = R.m
    X = tuple(R.attrs)
    if variant is Variant.ORDERED_INTO_OTHER and S.ordered_by is not None and S.fully_ordered:
        X = S.ordered_by
    if variant is Variant.ORDERED_INTO_SELF and R.ordered_by is not None and R.fully_ordered:
        X = R.ordered_by
    with m.phase("difference"):
        p = _partners(R, S, X, variant, eps, need_full_order=True)
        inh = m.alloc(R.length, dtype=np.int8, name="difference.inhabited")
        with m.round(R.length) as r:
            r.write_all(inh, (R.inhabited & (p == NONE)).astype(np.int8))
        out = R.derive(inhabited=inh, name=f"diff({R.name},{S.name})")
    return out


def union(R: RelationArray, S: RelationArray, variant="DictionaryHash", eps=0.5) -> RelationArray:
    """(R minus S) concatenated with S; |R| + |S| cells."""
    variant = Variant.parse(variant)
    _same_schema(R, S)
    m = R.m
    with m.phase("union"):
        D = difference(R, S, variant, eps)
        n = R.length + S.length
        out = RelationArray.empty(m, R.attrs, n, R.domain, name=f"union({R.name},{S.name})")
        with m.round(n) as r:
            if n:
                r.write_all(out.payload_arr, np.concatenate([R.payload, S.columns(R.attrs)]))
                r.write_all(out.inhabited_arr, np.concatenate([D.inhabited, S.inhabited]).astype(np.int8))
    return out


# --------------------------------------------------------------------- join


def _join_output(R: RelationArray, S: RelationArray, X: tuple, length: int, name: str) -> RelationArray:
    attrs = tuple(R.attrs) + tuple(a for a in S.attrs if a not in X)
    return RelationArray.empty(R.m, attrs, length, R.domain, name=name)


def join_naive(R: RelationArray, S: RelationArray) -> RelationArray:
    """One processor per cell pair; output cell i*|S|+j holds the combination."""
    m = R.m
    X = _shared(R, S)
    extra = [a for a in S.attrs if a not in X]
    n = R.length * S.length
    with m.phase("join_naive"):
        out = _join_output(R, S, X, n, f"join({R.name},{S.name})")
        with m.round(n) as r:
            if n:
                ri = np.repeat(np.arange(R.length), S.length)
                si = np.tile(np.arange(S.length), R.length)
                ok = R.inhabited[ri] & S.inhabited[si]
                if X:
                    ok &= rows_equal(R.domain, R.columns(X)[ri], S.columns(X)[si])
                pay = np.concatenate([R.payload[ri], S.columns(extra)[si]], axis=1)
                r.write_all(out.payload_arr, np.where(ok[:, None], pay, 0))
                r.write_all(out.inhabited_arr, ok.astype(np.int8))
    return out


def join_params(lam, eps) -> tuple[Fraction, Fraction]:
    lam = as_fraction(lam, "lambda")
    eps = as_fraction(eps, "epsilon")
    return min(Fraction(1, 3), lam / 3), min(Fraction(1, 3), eps / 3)


def join(R: RelationArray, S: RelationArray, variant="DictionaryHash", lam=0.5, eps=0.5,
         stats: dict | None = None) -> RelationArray:
    """Concise R join S in at most (1+lambda)|R join S| cells.

    Variant DictionaryHash sorts S by the shared attributes first; variant
    OrderedIntoOther needs S fully ordered by them.  ``stats`` (optional dict)
    receives the sizes of the intermediate arrays.
    """
    variant = Variant.parse(variant)
    m = R.m
    if variant is Variant.NAIVE:
        return join_naive(R, S)
    X = _shared(R, S)
    lam_p, delta = join_params(lam, eps)
    eps = as_fraction(eps, "epsilon")
    with m.phase("join"):
        if variant is Variant.DICTIONARY_HASH:
            if R.domain.setting is not Setting.DICTIONARY:
                raise SettingFault("join variant DictionaryHash needs the dictionary setting")
            S = sort_rel(S, X, lam_p, eps, name=f"sorted({S.name})")
        elif variant is not Variant.ORDERED_INTO_OTHER:
            raise ParameterFault(f"join has no {variant.value} variant")
        order = S.order_for(X)
        if order is None:
            raise PreconditionFault(f"{S.name} is not ordered by a list starting with {list(X)}")
        if not S.fully_linked:
            full_links(S, eps)
        # (1) A1 = R semijoin S, lambda'-compacted
        A0 = semijoin(R, S, Variant.ORDERED_INTO_OTHER, eps)
        A1 = compact_rel(A0, lam_p, eps, name="A1")
        # (2) B1 = S semijoin R, X-ordered like S
        B1 = semijoin(S, R, Variant.ORDERED_INTO_SELF, eps)
        # (3) fully link B1
        full_links(B1, eps)
        # (4) B2 = pi_X(B1)
        B2 = projection(B1, order, Variant.ORDERED_INTO_SELF, lam_p, eps)
        B2.ordered_by = order
        # (5) group boundaries of every s in B2 inside B1
        i2, i1 = search_ordered_into_B(B2, B1, order, eps)
        # (6) compact every group separately, delta-parameters, scheduled blocks
        b2 = np.flatnonzero(B2.inhabited)
        sizes = (i2[b2] - i1[b2] + 1) if b2.size else np.zeros(0, np.int64)
        blocks = _group_blocks(sizes, delta, lam_p)
        sched = schedule_tasks(m, blocks, lam_p, delta)
        seg_starts = i1[b2]
        seg_bounds, seg_len, out_offs = _segments(B1.length, seg_starts, sizes, sched.start)
        comp = approx_compact(m, B1.inhabited, lam_p, delta, segments=seg_len, out_offsets=out_offs)
        total3 = max(sched.length, comp.length)
        B3 = RelationArray.empty(m, B1.attrs, total3, B1.domain, name="B3")
        live = np.zeros(total3, dtype=bool)
        src3 = np.full(total3, NONE, dtype=np.int64)
        src3[:comp.length] = comp.src
        live = src3 != NONE
        with m.round(total3) as r:
            if total3:
                r.write_all(B3.payload_arr, np.where(live[:, None], B1.payload[np.maximum(src3, 0)], 0))
                r.write_all(B3.inhabited_arr, live.astype(np.int8))
                r.write_all(B3.link("origin"), src3)
        # (7) j1, j2 from the compaction links of the group end cells
        j1 = np.full(B2.length, NONE, dtype=np.int64)
        j2 = np.full(B2.length, NONE, dtype=np.int64)
        with m.round(b2.size):
            j1[b2] = comp.dest[i1[b2]]
            j2[b2] = comp.dest[i2[b2]]
        # (8) s(t) for every t of A1: A1 -> A0 -> partner in S (= B1 cell) -> B2
        a1 = np.flatnonzero(A1.inhabited)
        origin = A1.link_data("origin")
        partner = A0.link_data("partner")
        proj = B1.link_data("projection")
        s_of = np.full(A1.length, NONE, dtype=np.int64)
        with m.round(a1.size):
            s_of[a1] = proj[partner[origin[a1]]]
        # (9) one processor per (t, cell of its B3 group)
        need = np.zeros(A1.length, dtype=np.int64)
        need[a1] = j2[s_of[a1]] - j1[s_of[a1]] + 1
        sched9 = schedule_tasks(m, need, lam_p, eps)
        out = _join_output(R, S, X, sched9.length, f"join({R.name},{S.name})")
        extra = [a for a in S.attrs if a not in X]
        with m.round(sched9.length) as r:
            if sched9.length:
                t = sched9.task
                busy = t != NONE
                tt = np.maximum(t, 0)
                cell = np.where(busy, j1[s_of[tt]] + sched9.rank, 0)
                ok = busy & B3.inhabited[np.where(busy, cell, 0)]
                pay = np.concatenate([A1.payload[tt], B3.columns(extra)[cell]], axis=1)
                r.write_all(out.payload_arr, np.where(ok[:, None], pay, 0))
                r.write_all(out.inhabited_arr, ok.astype(np.int8))
        if stats is not None:
            stats.update({"A1": A1.length, "B1": B1.length, "B3": B3.length, "output": out.length,
                          "groups": int(b2.size)})
    return out


def _group_blocks(sizes: np.ndarray, delta: Fraction, lam_p: Fraction) -> np.ndarray:
    """Processor block per group: ceil(size^(1+delta)), at least floor((1+lambda')size)
    so the compacted group always fits its block."""
    out = np.zeros(sizes.size, dtype=np.int64)
    e = float(1 + delta)
    for i, s in enumerate(sizes.tolist()):
        b = int(np.ceil(s ** e - 1e-9)) if s else 0
        while b ** delta.denominator < s ** (delta.denominator + delta.numerator):
            b += 1
        out[i] = max(b, (s * (1 + lam_p)).__floor__())
    return out


def _segments(n: int, starts: np.ndarray, sizes: np.ndarray, block_starts: np.ndarray):
    """Cover [0, n) by the groups and the gaps between them (gaps hold no tuples)."""
    bounds = []
    lens = []
    offs = []
    pos = 0
    for st, sz, bs in zip(starts.tolist(), sizes.tolist(), block_starts.tolist()):
        if st > pos:
            lens.append(st - pos)
            offs.append(0)
        lens.append(sz)
        offs.append(bs)
        bounds.append(st)
        pos = st + sz
    if pos < n or not lens:
        lens.append(n - pos)
        offs.append(0)
    return bounds, np.array(lens, dtype=np.int64), np.array(offs, dtype=np.int64)
