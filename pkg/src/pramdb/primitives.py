"""Constant-depth array primitives over the simulated machine.

Every routine runs a number of rounds that depends only on its constant
parameters (lambda, epsilon, c) and never on the input length; all loops below
are over levels whose count is fixed up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterFault, PreconditionFault, WordOverflowFault
from .kernel import NONE, WORD_MAX, Machine

# ---------------------------------------------------------------- helpers


def as_fraction(x, name: str = "parameter") -> Fraction:
    if isinstance(x, Fraction):
        f = x
    elif isinstance(x, float):
        f = Fraction(repr(x))
    else:
        f = Fraction(x)
    if f <= 0:
        raise ParameterFault(f"{name} must be positive, got {x}")
    return f


def iroot_ceil(n: int, k: int) -> int:
    """Smallest b >= 1 with b**k >= n."""
    if n <= 1:
        return 1
    b = max(1, int(round(n ** (1.0 / k))))
    while b ** k < n:
        b += 1
    while b > 1 and (b - 1) ** k >= n:
        b -= 1
    return b


def rational_root_ceil(n: int, q: Fraction) -> int:
    """Smallest b >= 1 with b >= n**q, for rational q > 0."""
    if n <= 1:
        return 1
    num, den = q.numerator, q.denominator
    target = n ** num
    return iroot_ceil(target, den)


def _pow2_floor(x: int) -> int:
    return 1 << (x.bit_length() - 1)


def _next_pow2(x: np.ndarray) -> np.ndarray:
    x = np.maximum(np.asarray(x, dtype=np.int64), 1)
    return np.left_shift(np.int64(1), _bit_length(x - 1))


def _bit_length(x: np.ndarray) -> np.ndarray:
    """Vectorised int.bit_length for non-negative int64."""
    x = np.asarray(x, dtype=np.int64)
    e = np.frexp(x.astype(np.float64))[1].astype(np.int64)
    if not x.size or x.max() < (1 << 53):
        return e  # float conversion is exact here; frexp(0) has exponent 0
    e = np.where(x == 0, 0, np.minimum(e, 63))
    hi = np.left_shift(np.int64(1), np.clip(e, 0, 62))
    e = np.where((e < 63) & (x >= hi) & (x > 0), e + 1, e)
    lo = np.left_shift(np.int64(1), np.clip(e - 1, 0, 62))
    e = np.where((e > 0) & (x < lo), e - 1, e)
    return e


def approx_up(x: np.ndarray, bits: int) -> np.ndarray:
    """Round naturals up to ``bits + 1`` significant bits (relative error <= 2**-bits)."""
    x = np.asarray(x, dtype=np.int64)
    shift = np.maximum(_bit_length(x) - (bits + 1), 0)
    unit = np.left_shift(np.int64(1), shift)
    return ((x + unit - 1) >> shift) << shift


def _check_naturals(a: np.ndarray) -> None:
    if a.size and a.min() < 0:
        raise ParameterFault("values must be naturals")


def _as_int_array(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object:
        if arr.size and max(arr) > WORD_MAX:
            raise WordOverflowFault("value exceeds the word bound")
        arr = arr.astype(np.int64)
    elif arr.dtype == bool:
        arr = arr.astype(np.int64)
    elif arr.size == 0:
        arr = arr.astype(np.int64)
    return arr.astype(np.int64, copy=False).reshape(-1)


# ---------------------------------------------------------- summation trees


@dataclass
class SummationTree:
    """A forest of equally shaped summation trees (a single tree has ntrees == 1).

    ``labels[h]`` holds the numerators of the node labels at height h with shape
    (ntrees, leaf_count >> h); the label value is numerator / ``scale``.
    """

    leaf_count: int
    labels: list
    scale: int
    accuracy: Fraction
    sizes: np.ndarray
    consistent: bool = False

    @property
    def height(self) -> int:
        return self.leaf_count.bit_length() - 1

    @property
    def ntrees(self) -> int:
        return self.labels[0].shape[0]

    def label(self, h: int, k: int, tree: int = 0) -> Fraction:
        return Fraction(int(self.labels[h][tree, k]), self.scale)

    def exact_sum(self, h: int, k: int, tree: int = 0) -> int:
        leaves = self.labels[0][tree]
        lo = k << h
        return sum(int(v) for v in leaves[lo:lo + (1 << h)]) // self.scale


def _mantissa_bits(lam: Fraction) -> int:
    q = 0
    while Fraction(1, 1 << q) > lam:
        q += 1
    return q


def _build_forest(m: Machine, leaves: np.ndarray, sizes: np.ndarray, lambda_prime: Fraction,
                  exact: bool) -> SummationTree:
    ntrees, P = leaves.shape
    if P > m.config.macro_width:
        raise ParameterFault(f"summation tree with {P} leaves exceeds macro width {m.config.macro_width}")
    bits = _mantissa_bits(lambda_prime)
    H = P.bit_length() - 1
    exact_levels = [leaves.astype(np.int64)]
    labels = [leaves.astype(object)]
    for _ in range(H):
        prev = exact_levels[-1]
        s = prev[:, 0::2] + prev[:, 1::2]
        exact_levels.append(s)
        labels.append((s if exact else approx_up(s, bits)).astype(object))
    # every node's sum is one macro step over its leaves: (2^h)^2 work per node
    pt = _next_pow2(np.maximum(sizes, 1))
    store = m.alloc(int(ntrees) * (2 * P - 1), dtype=object, name="tree")
    with m.round(ntrees * (2 * P - 1), work=int(np.sum(pt * (2 * pt - 1)))) as r:
        r.write_all(store, np.concatenate([lv.reshape(-1) for lv in labels]) if ntrees else store.data)
    m.free(store)
    return SummationTree(P, labels, 1, lambda_prime, np.asarray(sizes, dtype=np.int64))


def build_summation_tree(m: Machine, A, lambda_prime, exact: bool = False) -> SummationTree:
    """Summation tree over ``A`` padded to a power of two with zero leaves."""
    lam = as_fraction(lambda_prime, "lambda_prime")
    a = _as_int_array(A)
    _check_naturals(a)
    P = int(_next_pow2(np.array([max(a.size, 1)]))[0])
    leaves = np.zeros((1, P), dtype=np.int64)
    leaves[0, :a.size] = a
    return _build_forest(m, leaves, np.array([a.size]), lam, exact)


def make_consistent(m: Machine, tree: SummationTree) -> SummationTree:
    """Multiply every label at height h by (1 + lambda')**h."""
    lam = tree.accuracy
    num, den = lam.denominator + lam.numerator, lam.denominator
    H = tree.height
    new = []
    for h, lv in enumerate(tree.labels):
        new.append(lv * (num ** h * den ** (H - h)))
    with m.round(tree.ntrees * (2 * tree.leaf_count - 1)):
        pass
    return SummationTree(tree.leaf_count, new, tree.scale * den ** H, lam, tree.sizes, True)


def _forest_prefix(m: Machine, tree: SummationTree) -> np.ndarray:
    if not tree.consistent:
        raise PreconditionFault("prefix_from_tree needs a consistent tree")
    ntrees, P = tree.labels[0].shape
    H = tree.height
    pos = np.arange(P)
    acc = tree.labels[0].copy()
    terms = np.ones(P, dtype=np.int64)
    for h in range(H):
        node = pos >> h
        take = (node & 1) == 1
        if not take.any():
            continue
        cols = np.where(take, node - 1, 0)
        add = tree.labels[h][:, cols]
        acc = acc + np.where(take[None, :], add, 0)
        terms += take
    out = (acc // tree.scale).astype(np.int64) if ntrees else np.zeros((0, P), dtype=np.int64)
    # one macro step per leaf over its (popcount + 1) summands, for real leaves only
    real = pos[None, :] < tree.sizes[:, None]
    m.charge_round(int(np.sum(np.where(real, terms[None, :] ** 2, 0))))
    return out


def prefix_from_tree(m: Machine, tree: SummationTree) -> np.ndarray:
    """b_i = sum of labels of left siblings hanging off the root path, plus a_i."""
    out = _forest_prefix(m, tree)
    if tree.ntrees == 1:
        return out[0, :int(tree.sizes[0])]
    return out


# ------------------------------------------------------------ prefix sums


def _prefix_levels_count(eps: Fraction) -> int:
    return max(4, math.ceil(1 / eps))


def _accuracy_bits(lam: Fraction, levels: int, hmax: int) -> int:
    q = 1
    while (1 + Fraction(1, 1 << q)) ** (hmax * levels) > 1 + lam:
        q += 1
    return q


def _segment_layout(seg: np.ndarray, b: int):
    n = int(seg.sum())
    nseg = seg.size
    seg_start = np.cumsum(seg) - seg
    segid = np.repeat(np.arange(nseg), seg)
    local = np.arange(n) - seg_start[segid]
    nb = (seg + b - 1) // b
    boff = np.cumsum(nb) - nb
    gblk = boff[segid] + local // b
    pos = local % b
    nblocks = int(nb.sum())
    sizes = np.bincount(gblk, minlength=nblocks) if n else np.zeros(nblocks, dtype=np.int64)
    return gblk, pos, nb, boff, nblocks, sizes


def _prefix_level(m: Machine, vals: np.ndarray, seg: np.ndarray, b: int, lam_p: Fraction,
                  levels_left: int) -> np.ndarray:
    n = vals.size
    out = m.alloc(n, name="prefix")
    gblk, pos, nb, boff, nblocks, sizes = _segment_layout(seg, b)
    P = int(_next_pow2(np.array([max(int(sizes.max()) if nblocks else 1, 1)]))[0])
    leaves = np.zeros((nblocks, P), dtype=np.int64)
    leaves[gblk, pos] = vals
    tree = make_consistent(m, _build_forest(m, leaves, sizes, lam_p, exact=False))
    pref = _forest_prefix(m, tree)
    part = m.alloc(n, name="block_prefix")
    carry = m.alloc(nblocks, name="carry")
    with m.round(n) as r:
        r.write_all(part, pref[gblk, pos])
    # C[k] = last block-prefix of block k-1 within the same segment, C[first] = 0
    bseg = np.repeat(np.arange(nb.size), nb)
    kin = np.arange(nblocks) - boff[bseg]
    last = pref[np.arange(nblocks), np.maximum(sizes - 1, 0)] if nblocks else np.zeros(0, np.int64)
    with m.round(nblocks) as r:
        r.write_all(carry, np.where(kin > 0, np.roll(last, 1), 0))
    if levels_left > 1:
        D = _prefix_level(m, carry.data, nb, b, lam_p, levels_left - 1)
    else:
        if nb.size and nb.max() > 1:
            raise AssertionError("final prefix level holds more than one block per segment")
        D = np.zeros(nblocks, dtype=np.int64)
    with m.round(n) as r:
        r.write_all(out, part.data + D[gblk])
    result = out.data.copy()
    m.free(carry, part)
    m.free(out)
    return result


def approx_prefix_sums(m: Machine, A, lam, eps, segments=None) -> np.ndarray:
    """Consistent lambda-approximate prefix sums, optionally per segment.

    ``segments`` is a vector of segment lengths summing to len(A); sums restart at
    each segment.  Returns an int64 array B with
    sum(A[:i+1]) <= B[i] <= (1+lambda) sum(A[:i+1]) and B[i] - B[i-1] >= A[i].
    """
    lam = as_fraction(lam, "lambda")
    eps = as_fraction(eps, "epsilon")
    a = _as_int_array(A)
    _check_naturals(a)
    seg = np.array([a.size], dtype=np.int64) if segments is None else np.asarray(segments, dtype=np.int64)
    if int(seg.sum()) != a.size:
        raise ParameterFault("segment lengths must sum to the array length")
    if a.size and int(a.sum(dtype=object)) > WORD_MAX // 4:
        raise WordOverflowFault("total exceeds word bound")
    levels = _prefix_levels_count(eps)
    pmax = _pow2_floor(m.config.macro_width)
    nmax = int(seg.max()) if seg.size else 0
    while iroot_ceil(nmax, levels) > pmax:
        levels += 1
    b = max(2, iroot_ceil(nmax, levels))
    hmax = pmax.bit_length() - 1
    lam_p = Fraction(1, 1 << _accuracy_bits(lam, levels, max(hmax, 1)))
    with m.phase("prefix_sums"):
        return _prefix_level(m, a, seg, b, lam_p, levels)


# ---------------------------------------------------------------- compaction


@dataclass
class Compaction:
    """Order-preserving placement: ``dest[i]`` is the output cell of input i (or NONE),
    ``src[j]`` the input cell stored at output j (or NONE)."""

    dest: np.ndarray
    src: np.ndarray
    length: int
    seg_offsets: np.ndarray
    seg_lengths: np.ndarray


def approx_compact(m: Machine, present, lam, eps, segments=None, out_offsets=None) -> Compaction:
    """Move the non-empty cells into an array of length <= (1+lambda)k, keeping order.

    With ``segments`` each segment is compacted independently; its output block
    starts at ``out_offsets[s]`` (or at consistent approximate prefix offsets).
    """
    mask = np.asarray(present, dtype=bool).reshape(-1)
    n = mask.size
    seg = np.array([n], dtype=np.int64) if segments is None else np.asarray(segments, dtype=np.int64)
    with m.phase("compact"):
        B = approx_prefix_sums(m, mask.astype(np.int64), lam, eps, seg)
        ends = np.cumsum(seg) - 1
        seg_len = np.where(seg > 0, B[np.maximum(ends, 0)] if n else 0, 0).astype(np.int64)
        if out_offsets is None:
            if seg.size <= 1:
                offs = np.zeros(seg.size, dtype=np.int64)
                total = int(seg_len.sum())
            else:
                ps = approx_prefix_sums(m, seg_len, lam, eps)
                offs = ps - seg_len
                total = int(ps[-1])
        else:
            offs = np.asarray(out_offsets, dtype=np.int64)
            total = int(np.max(offs + seg_len)) if seg.size else 0
        segid = np.repeat(np.arange(seg.size), seg)
        dest_arr = m.alloc(n, name="dest")
        src_arr = m.alloc(total, fill=NONE, name="src")
        dest = np.where(mask, offs[segid] + B - 1, NONE) if n else np.zeros(0, np.int64)
        with m.round(n) as r:
            r.write_all(dest_arr, dest)
            sel = np.flatnonzero(mask)
            r.write(src_arr, dest[sel], sel, sel)
        res = Compaction(dest_arr.data.copy(), src_arr.data.copy(), total, offs, seg_len)
        m.free(src_arr, dest_arr)
    return res


def compact_values(m: Machine, cells, lam, eps) -> list:
    """Convenience wrapper: ``cells`` is a sequence with ``None`` for empty cells."""
    cells = list(cells)
    mask = np.array([c is not None for c in cells], dtype=bool)
    comp = approx_compact(m, mask, lam, eps)
    return [cells[i] if i != NONE else None for i in comp.src]


# ------------------------------------------------------- predecessor links


def _pred_strict(m: Machine, mask: np.ndarray, eps: Fraction) -> np.ndarray:
    n = mask.size
    delta = eps / 2
    rounds = math.ceil(1 / delta)
    g = max(2, iroot_ceil(n, rounds))
    link = m.alloc(n, fill=NONE, name="pred")
    has = np.zeros(n, dtype=bool)
    cell = np.arange(n)
    last_in = np.where(mask, cell, NONE)  # last non-empty cell per current item
    span = 1  # cells per item
    for _ in range(rounds):
        items = last_in.size
        nint = max(1, -(-items // g))
        li = np.full(nint * g, NONE, dtype=np.int64)
        li[:items] = last_in
        li = li.reshape(nint, g)
        ne = li != NONE
        # table E[I, i, j], j = 0..g (j = g is the interval end): i is the last
        # non-empty item before j; eliminated by every non-empty k strictly between
        pred_item = np.full((nint, g + 1), NONE, dtype=np.int64)
        ii = np.arange(g)[:, None, None]
        jj = np.arange(g + 1)[None, :, None]
        kk = np.arange(g)[None, None, :]
        between = (ii < kk) & (kk < jj)
        lower = (ii[:, :, 0] < jj[:, :, 0])
        chunk = max(1, (1 << 22) // (g * (g + 1) * g))
        table = m.alloc(nint * g * (g + 1), dtype=np.int8, name="interval_table")
        with m.round(nint * g * (g + 1) * g) as r:
            for c0 in range(0, nint, chunk):
                sub = ne[c0:c0 + chunk]
                blocked = (sub[:, None, None, :] & between[None]).any(axis=3)
                E = sub[:, :, None] & lower[None] & ~blocked
                rows, ivals, jvals = np.nonzero(E)
                pred_item[c0 + rows, jvals] = ivals
                r.write(table, (((c0 + rows) * g + ivals) * (g + 1) + jvals), 1)
        m.free(table)
        # answer for item j: last non-empty cell of its predecessor item
        ans = np.where(pred_item[:, :g] != NONE,
                       np.take_along_axis(li, np.maximum(pred_item[:, :g], 0), axis=1), NONE)
        item_of_cell = cell // span
        cand = ans.reshape(-1)[item_of_cell]
        upd = (~has) & (cand != NONE)
        with m.round(n) as r:
            r.write(link, cell[upd], cand[upd])
        has |= upd
        tail = pred_item[:, g]
        last_in = np.where(tail != NONE, li[np.arange(nint), np.maximum(tail, 0)], NONE)
        span *= g
    out = link.data.copy()
    m.free(link)
    return out


def predecessor_links(m: Machine, present, eps) -> np.ndarray:
    """B[j] = largest i < j with a non-empty cell i, or NONE (0-based indices)."""
    eps = as_fraction(eps, "epsilon")
    mask = np.asarray(present, dtype=bool).reshape(-1)
    with m.phase("pred_links"):
        return _pred_strict(m, mask, eps)


def successor_links(m: Machine, present, eps) -> np.ndarray:
    """S[j] = smallest i > j with a non-empty cell i, or NONE (0-based indices)."""
    eps = as_fraction(eps, "epsilon")
    mask = np.asarray(present, dtype=bool).reshape(-1)
    n = mask.size
    with m.phase("succ_links"):
        rev = _pred_strict(m, mask[::-1].copy(), eps)[::-1]
        return np.where(rev != NONE, n - 1 - rev, NONE)


# ----------------------------------------------------------- task schedule


@dataclass
class Schedule:
    """``task[j]`` is the task served by cell j (NONE if empty) and ``lead[j]`` the
    first cell of that task's block; ``start[i]`` is the lead cell of task i."""

    task: np.ndarray
    lead: np.ndarray
    start: np.ndarray
    length: int

    @property
    def rank(self) -> np.ndarray:
        return np.where(self.task != NONE, np.arange(self.length) - self.lead, NONE)


def schedule_tasks(m: Machine, sizes, lam, eps) -> Schedule:
    """Allocate m_i consecutive cells to every task in an array of <= (1+lambda) sum m_i."""
    msz = _as_int_array(sizes)
    _check_naturals(msz)
    with m.phase("schedule"):
        s = approx_prefix_sums(m, msz, lam, eps)
        total = int(s[-1]) if s.size else 0
        # lead cell of task i is B[i-1]; consistency keeps leads distinct
        start = np.where(msz > 0, np.concatenate(([0], s[:-1])) if s.size else s, NONE)
        C = m.alloc(total, fill=NONE, name="schedule")
        live = np.flatnonzero(msz > 0)
        with m.round(msz.size) as r:
            r.write(C, start[live], live, live)
        occupied = C.data != NONE
        pred = _pred_strict(m, occupied, as_fraction(eps))
        cells = np.arange(total)
        lead = np.where(occupied, cells, pred)
        t = np.where(lead != NONE, C.data[np.maximum(lead, 0)], NONE)
        ok = (t != NONE) & (cells - lead < np.where(t != NONE, msz[np.maximum(t, 0)], 0))
        task = m.alloc(total, fill=NONE, name="task")
        with m.round(total) as r:
            r.write_all(task, np.where(ok, t, NONE))
        sched = Schedule(task.data.copy(), np.where(ok, lead, NONE), start, total)
        m.free(task, C)
    return sched


# ------------------------------------------------------------ padded sort


@dataclass
class PaddedSort:
    """``order[j]`` is the input index placed in output cell j (NONE if empty)."""

    order: np.ndarray
    dest: np.ndarray
    length: int


def padded_sort(m: Machine, A, lam, eps, c: int, present=None, n: int | None = None) -> PaddedSort:
    """Stable padded sort of naturals below N**c, N = max(n, 2), n defaulting to len(A).

    Runs ceil((c+1)/delta) bucket rounds with delta = eps/(2+eps); each round
    marks buckets in an array of about N**(1+delta) cells and compacts it with
    parameter eps/2, so (1+delta)(1+eps/2) = 1+eps.
    """
    lam = as_fraction(lam, "lambda")
    eps = as_fraction(eps, "epsilon")
    if c < 1:
        raise ParameterFault("c must be a positive integer")
    vals = list(A) if not isinstance(A, np.ndarray) else A
    size = len(vals)
    mask = np.ones(size, dtype=bool) if present is None else np.asarray(present, dtype=bool)
    N = max(size if n is None else int(n), 2)
    bound = N ** c
    big = bound * N > WORD_MAX
    w = np.array([int(v) for v in vals], dtype=object) if big else _as_int_array(vals)
    if size and (min(w[mask]) < 0 if mask.any() else False):
        raise ParameterFault("padded_sort takes naturals")
    if size and mask.any() and max(w[mask]) >= bound:
        raise ParameterFault(f"value exceeds range [0, {bound - 1}]")
    delta = eps / (2 + eps)
    eps_c = eps / 2
    beta = max(2, rational_root_ceil(N, delta))
    digits = math.ceil((c + 1) / delta)
    if beta ** digits < bound * N:
        raise AssertionError("radix too small")
    idx = np.arange(size)
    with m.phase("padded_sort"):
        # distinct keys, order-compatible: v * N + i
        low = w * N + (idx.astype(object) if big else idx)
        top = np.zeros(size, dtype=np.int64)
        T = 1
        for s in range(digits, 0, -1):
            unit = beta ** (s - 1)
            if big:
                d = np.array([int(x) // unit for x in low], dtype=np.int64) if size else np.zeros(0, np.int64)
                low = np.array([int(x) % unit for x in low], dtype=object)
            elif unit > WORD_MAX:
                # every key is below unit, so this digit is zero everywhere
                d = np.zeros(size, dtype=np.int64)
            else:
                d = low // unit
                low = low % unit
            bucket = top * beta + d
            marks = m.alloc(T * beta, dtype=np.int8, name="buckets")
            sel = np.flatnonzero(mask)
            with m.round(size) as r:
                r.write(marks, bucket[sel], 1, sel)
            comp = approx_compact(m, marks.data.astype(bool), lam, eps_c)
            with m.round(size):
                top = np.where(mask, comp.dest[np.where(mask, bucket, 0)] if size else top, 0)
            T = max(comp.length, 1)
            m.free(marks)
        length = comp.length if digits else 0
        order = m.alloc(length, fill=NONE, name="sorted")
        sel = np.flatnonzero(mask)
        with m.round(size) as r:
            r.write(order, top[sel], sel, sel)
        res = PaddedSort(order.data.copy(), np.where(mask, top, NONE), length)
        m.free(order)
    return res
