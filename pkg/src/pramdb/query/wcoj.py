"""Attribute-elimination join with AGM-bounded level arrays."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..array_ops import compact_rel, full_links, project_view, search_ordered_into_B, sort_rel
from ..dbops import Variant, _group_blocks, _segments, join_params, projection, semijoin
from ..errors import ParameterFault, PreconditionFault
from ..kernel import NONE
from ..primitives import approx_compact, as_fraction, schedule_tasks
from ..relstore import Database, RelationArray, Setting, rows_equal
from .cover import FractionalCover, agm_bound, fractional_cover, make_cover, within_agm
from .evaluate import EvalStats, _stats, atom_arrays
from .syntax import ConjunctiveQuery


class _Level:
    """P_{i,j}: concise projection of R_i to its first c attributes (in X order).

    ``array`` is None for c = 0 (the projection to no attributes); then the
    whole next level forms a single group."""

    def __init__(self, attrs: tuple, array: RelationArray | None):
        self.attrs = attrs
        self.array = array
        self.group_lo = None  # per cell: first cell of its group in the next level
        self.group_hi = None
        self.gstart = None  # per cell: first / last cell of the compacted group in G
        self.gend = None
        self.G = None  # compacted groups of the next level


def _prepare(rel: RelationArray, Z: tuple, lam, eps, dictionary: bool) -> RelationArray:
    """Z-ordered, fully linked copy of an atom array."""
    if dictionary:
        S = sort_rel(rel, Z, lam, eps, name=f"{rel.name}~Z")
    else:
        if rel.ordered_by is None or tuple(rel.ordered_by[:len(Z)]) != Z:
            raise PreconditionFault(f"{rel.name} is not ordered by {list(Z)}")
        S = rel
    return full_links(S, eps)


def _levels(S: RelationArray, Z: tuple, lam, eps) -> list:
    """P for c = |Z|, ..., 0 built in decreasing c with projection links."""
    levels = [None] * (len(Z) + 1)
    levels[len(Z)] = _Level(Z, S)
    cur = S
    for c in range(len(Z) - 1, 0, -1):
        P = projection(cur, Z[:c], Variant.ORDERED_INTO_SELF, lam, eps)
        P.ordered_by = Z[:c]
        full_links(P, eps)
        levels[c] = _Level(Z[:c], P)
        cur = P
    levels[0] = _Level((), None)
    return levels


def _group_phase(m, upper: _Level, lower: _Level, lam_p: Fraction, delta: Fraction, eps: Fraction) -> None:
    """Group boundaries of ``upper`` (grouped by ``lower``'s attributes), then a
    separate lambda'-compaction of every group into lower.G."""
    U = upper.array
    n = U.length
    inh = U.inhabited
    pred = U.link_data("pred")
    succ = U.link_data("succ")
    nlow = 1 if lower.array is None else lower.array.length
    if lower.array is None:
        proj = np.where(inh, 0, NONE)
    else:
        proj = U.link_data("projection")
    lo_arr = m.alloc(nlow, fill=NONE, name="group_lo")
    hi_arr = m.alloc(nlow, fill=NONE, name="group_hi")
    with m.round(n) as r:
        p = np.flatnonzero(inh)
        pp = pred[p]
        first = (pp == NONE) | (proj[np.maximum(pp, 0)] != proj[p])
        r.write(lo_arr, proj[p[first]], p[first])
        ps = succ[p]
        last = (ps == NONE) | (proj[np.maximum(ps, 0)] != proj[p])
        r.write(hi_arr, proj[p[last]], p[last])
    lo = lo_arr.data.copy()
    hi = hi_arr.data.copy()
    # representatives sit at the first cell of their run, so the groups follow
    # the order of their representatives
    reps = np.flatnonzero(lo != NONE)
    sizes = hi[reps] - lo[reps] + 1 if reps.size else np.zeros(0, dtype=np.int64)
    blocks = _group_blocks(sizes, delta, lam_p)
    sched = schedule_tasks(m, blocks, lam_p, delta)
    _, seg_len, out_offs = _segments(n, lo[reps], sizes, sched.start)
    comp = approx_compact(m, inh, lam_p, delta, segments=seg_len, out_offsets=out_offs)
    total = max(sched.length, comp.length)
    G = RelationArray.empty(m, U.attrs, total, U.domain, name=f"G[{','.join(U.attrs)}]")
    src = np.full(total, NONE, dtype=np.int64)
    src[:comp.length] = comp.src
    live = src != NONE
    with m.round(total) as r:
        if total:
            r.write_all(G.payload_arr, np.where(live[:, None], U.payload[np.maximum(src, 0)], 0))
            r.write_all(G.inhabited_arr, live.astype(np.int8))
            r.write_all(G.link("origin"), src)
    gstart = np.full(nlow, NONE, dtype=np.int64)
    gend = np.full(nlow, NONE, dtype=np.int64)
    with m.round(reps.size):
        gstart[reps] = comp.dest[lo[reps]]
        gend[reps] = comp.dest[hi[reps]]
    lower.group_lo, lower.group_hi = lo, hi
    lower.gstart, lower.gend, lower.G = gstart, gend, G


def _locate(m, L: RelationArray, lower: _Level, eps: Fraction) -> np.ndarray:
    """For each proper tuple t of L the cell of t[Y] in the lower level (NONE if absent)."""
    if lower.array is None:
        with m.round(L.length):
            return np.where(L.inhabited, 0, NONE)
    P = lower.array
    Y = lower.attrs
    q = L.columns(Y)
    lo, _ = search_ordered_into_B(L, P, Y, eps, query_rows=q)
    hit = (lo != NONE) & L.inhabited
    idx = np.flatnonzero(hit)
    out = np.full(L.length, NONE, dtype=np.int64)
    with m.round(L.length):
        if idx.size:
            ok = rows_equal(L.domain, q[idx], P.columns(Y)[lo[idx]])
            out[idx[ok]] = lo[idx[ok]]
    return out


def wcoj(q: ConjunctiveQuery, db: Database, attr_order=None, lam=0.5, eps=0.5,
         cover: FractionalCover | list | tuple | None = None,
         stats: EvalStats | None = None, prepared: dict | None = None) -> RelationArray:
    """Join query evaluation level by level over the attribute list X.

    Dictionary databases are sorted per atom (Z_i-ordered copies); otherwise
    every atom array must already be Z_i-ordered.  Every level array is checked
    against (1+lambda) * AGM for ``cover`` (computed by LP when omitted).
    """
    stats = _stats(stats)
    if not q.is_join_query:
        raise ParameterFault("wcoj needs a join query (no quantified variables)")
    lam = as_fraction(lam, "lambda")
    eps = as_fraction(eps, "epsilon")
    X = tuple(q.variables) if attr_order is None else tuple(attr_order)
    if sorted(X) != sorted(q.variables) or len(set(X)) != len(X):
        raise ParameterFault(f"attribute order {list(X)} is not a permutation of {list(q.variables)}")
    if cover is None:
        cov = fractional_cover(q)
    elif isinstance(cover, FractionalCover):
        cov = make_cover(q, cover.weights)
    else:
        cov = make_cover(q, cover)
    lam_p, delta = join_params(lam, eps)
    m = db.m
    dictionary = db.setting is Setting.DICTIONARY
    arrays = atom_arrays(q, db) if prepared is None else prepared
    sizes = {a.alias: arrays[a.alias].proper_count() for a in q.atoms}
    agm = agm_bound(q, sizes, cov)
    stats.meta.update({"attr_order": list(X), "cover": [str(w) for w in cov.weights], "AGM": agm})
    k = len(X)
    atoms = list(q.atoms)
    Z = [tuple(x for x in X if x in a.vars) for a in atoms]
    with m.phase("wcoj"):
        with m.phase("init"):
            levels = []
            for a, z in zip(atoms, Z):
                S = _prepare(arrays[a.alias], z, lam, eps, dictionary)
                levels.append(_levels(S, z, lam, eps))
        # c(i, j): number of attributes of R_i among A_1..A_j
        cnt = [[sum(1 for x in X[:j] if x in z) for j in range(k + 1)] for z in Z]
        rels = [[i for i, a in enumerate(atoms) if X[j] in a.vars] for j in range(k)]
        with m.phase("level1"):
            i0 = rels[0][0]
            P0 = levels[i0][1].array
            L = P0.derive(inhabited=m.adopt(P0.inhabited_arr.data.copy(), name="L1.inhabited"), name="L1")
            for i in rels[0][1:]:
                L = semijoin(L, levels[i][1].array, Variant.ORDERED_INTO_OTHER, eps)
            # an empty relation empties the join even if it misses A_1
            any_empty = any(sizes[a.alias] == 0 for a in atoms)
            with m.round(L.length) as r:
                if any_empty:
                    r.write_all(L.inhabited_arr, np.zeros(L.length, dtype=np.int8))
            L = compact_rel(L, lam, eps, name="L1")
        _check_level(stats, 1, L, q, sizes, cov, lam, agm)
        for j in range(1, k):
            A = X[j]
            with m.phase(f"level{j + 1}"):
                with m.phase("grouping"):
                    for i in rels[j]:
                        c = cnt[i][j + 1]
                        _group_phase(m, levels[i][c], levels[i][c - 1], lam_p, delta, eps)
                    cells = {}
                    span = {}
                    for i in rels[j]:
                        low = levels[i][cnt[i][j]]
                        cell = _locate(m, L, low, eps)
                        ok = cell != NONE
                        s = np.zeros(L.length, dtype=np.int64)
                        with m.round(L.length):
                            cc = np.maximum(cell, 0)
                            has = ok & (low.gstart[cc] != NONE)
                            s[has] = low.gend[cc[has]] - low.gstart[cc[has]] + 1
                        cells[i] = cell
                        span[i] = s
                    # smallest group per tuple (first relation on ties)
                    best = np.full(L.length, NONE, dtype=np.int64)
                    need = np.zeros(L.length, dtype=np.int64)
                    with m.round(L.length * len(rels[j])):
                        lp = np.flatnonzero(L.inhabited)
                        for i in rels[j]:
                            take = (best[lp] == NONE) | (span[i][lp] < need[lp])
                            best[lp[take]] = i
                            need[lp[take]] = span[i][lp[take]]
                        for i in rels[j]:
                            miss = cells[i][lp] == NONE
                            need[lp[miss]] = 0
                with m.phase("intersection"):
                    sched = schedule_tasks(m, need, lam_p, eps)
                    attrs = X[:j + 1]
                    Lj = RelationArray.empty(m, attrs, sched.length, L.domain, name=f"L{j + 1}")
                    with m.round(sched.length) as r:
                        if sched.length:
                            t = sched.task
                            busy = t != NONE
                            tt = np.maximum(t, 0)
                            pay = np.zeros((sched.length, len(attrs)), dtype=np.int64)
                            ok = np.zeros(sched.length, dtype=bool)
                            pay[:, :j] = L.columns(X[:j])[tt]
                            for i in rels[j]:
                                low = levels[i][cnt[i][j]]
                                mine = busy & (best[tt] == i)
                                if not mine.any():
                                    continue
                                g = low.gstart[np.maximum(cells[i][tt[mine]], 0)] + sched.rank[mine]
                                G = low.G
                                live = G.inhabited[g]
                                pos = np.flatnonzero(mine)
                                ok[pos] = live
                                pay[pos, j] = G.columns((A,))[g, 0]
                            r.write_all(Lj.payload_arr, np.where(ok[:, None], pay, 0))
                            r.write_all(Lj.inhabited_arr, ok.astype(np.int8))
                    for i in rels[j]:
                        Lj = semijoin(Lj, levels[i][cnt[i][j + 1]].array, Variant.ORDERED_INTO_OTHER, eps)
                    L = Lj
            _check_level(stats, j + 1, L, q, sizes, cov, lam, agm)
        with m.phase("output"):
            L = compact_rel(L, lam, eps, name=q.head_name)
            out = project_view(L, q.head, name=q.head_name) if tuple(L.attrs) != tuple(q.head) else L
    OUT = out.proper_count()
    stats.meta["OUT"] = OUT
    stats.check("wcoj:output_cells<=(1+lambda)OUT", out.length, int((1 + lam) * OUT))
    return out


def _check_level(stats: EvalStats, j: int, L: RelationArray, q, sizes, cov, lam, agm: int) -> None:
    stats.note(f"L{j}", L)
    ok = within_agm(L.length, q, sizes, cov, lam)
    bound = int((1 + lam) * agm)
    stats.checks.append(_size_check(f"wcoj:|L{j}|<=(1+lambda)AGM", L.length, bound, ok))
    if not ok:
        from ..errors import SizeAssertionFault

        raise SizeAssertionFault(f"wcoj:|L{j}|<=(1+lambda)AGM", L.length, bound)


def _size_check(name, observed, bound, ok):
    from .evaluate import SizeCheck

    return SizeCheck(name, int(observed), int(bound), bool(ok))
