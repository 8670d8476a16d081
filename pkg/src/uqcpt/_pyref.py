"""Pure NumPy backend.

This module is the reference implementation of the small computational
kernels that dominate runtime: counting and slicing the multiset of
pairwise values ``g(x_i, x_j)``, ``i < j``, rank selection over growing
prefixes of that multiset, and windowed Epanechnikov sums.

The compiled twin (``uqcpt._speedups``) implements the same six functions
with identical floating-point semantics; ``uqcpt._backend`` picks whichever
is importable.  Every predicate here is evaluated on the exact double value
produced by the pair formula — ``(x_i + x_j) * 0.5`` or ``abs(x_i - x_j)``
— never on an algebraic rearrangement, so counts agree bit-for-bit with a
brute-force enumeration.

Pair kinds are integer coded: 0 for the pairwise average, 1 for the
pairwise absolute difference.  All ``xs`` arguments must be sorted
ascending, float64 and contiguous.
"""

from __future__ import annotations

import numpy as np

KIND_AVG = 0
KIND_ABSDIFF = 1

_BUCKET_SHIFT = 10  # buckets of 1024 slots in the rank-selection engine


def _avg_first_gt(xs: np.ndarray, t: float) -> np.ndarray:
    """For each j, the smallest i with ``(xs[i] + xs[j]) * 0.5 > t``.

    Returns ``n`` for rows where no such i exists.  The pair average is
    non-decreasing in each argument, so the predicate is monotone in i and
    the boundary is well defined.  The search evaluates the exact pair
    formula at every probe.
    """
    n = xs.size
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, n, dtype=np.int64)
    while True:
        open_ = lo < hi
        if not open_.any():
            return lo
        mid = (lo + hi) >> 1
        probe = np.minimum(mid, n - 1)
        ok = open_ & ((xs[probe] + xs) * 0.5 <= t)
        lo = np.where(ok, mid + 1, lo)
        hi = np.where(open_ & ~ok, mid, hi)


def _absdiff_first_le(xs: np.ndarray, t: float) -> np.ndarray:
    """For each j, the smallest i with ``xs[j] - xs[i] <= t`` (never > j).

    For i <= j the difference ``xs[j] - xs[i]`` is non-increasing in i, so
    once the predicate holds it holds for all larger i.
    """
    n = xs.size
    lo = np.zeros(n, dtype=np.int64)
    hi = np.arange(n, dtype=np.int64)  # xs[j] - xs[j] = 0 <= t when t >= 0
    if t < 0.0:
        hi = np.full(n, n, dtype=np.int64)
    while True:
        open_ = lo < hi
        if not open_.any():
            return lo
        mid = (lo + hi) >> 1
        probe = np.minimum(mid, n - 1)
        ok = open_ & (xs - xs[probe] <= t)
        hi = np.where(ok, mid, hi)
        lo = np.where(open_ & ~ok, mid + 1, lo)


def count_pairs_le(xs: np.ndarray, t: float, kind: int) -> int:
    """Number of pairs i < j with ``g(xs[i], xs[j]) <= t``."""
    n = xs.size
    js = np.arange(n, dtype=np.int64)
    if kind == KIND_AVG:
        return int(np.minimum(_avg_first_gt(xs, t), js).sum())
    first = np.minimum(_absdiff_first_le(xs, t), js)
    return int((js - first).sum())


def pair_avg_le_counts(xs: np.ndarray, thr: float) -> np.ndarray:
    """For each point, how many sample values y satisfy ``(x + y) * 0.5 <= thr``.

    Counts run over the whole sample including the point itself; dividing by
    ``n`` gives the empirical distribution of the average pair kernel
    anchored at each x.
    """
    return _avg_first_gt(xs, thr)


def pairs_in_range(xs: np.ndarray, lo: float, hi: float, kind: int) -> np.ndarray:
    """Values of all pairs i < j with ``lo < g(xs[i], xs[j]) <= hi``.

    Order of the returned values is unspecified; callers sort or select.
    """
    n = xs.size
    out: list[np.ndarray] = []
    if kind == KIND_AVG:
        a = _avg_first_gt(xs, lo)  # first index past the lower cut
        b = _avg_first_gt(xs, hi)  # first index past the upper cut
        for j in range(n):
            start, stop = int(a[j]), min(int(b[j]), j)
            if stop > start:
                out.append((xs[start:stop] + xs[j]) * 0.5)
    else:
        a = _absdiff_first_le(xs, lo)  # diffs at i >= a[j] are <= lo: too small
        b = _absdiff_first_le(xs, hi)
        for j in range(n):
            start, stop = int(b[j]), min(int(a[j]), j)
            if stop > start:
                out.append(xs[j] - xs[start:stop])
    if not out:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(out)


def _support_cuts(t: float, d: float) -> tuple[float, float]:
    """Widened cuts ``(c_lo, c_hi)`` bracketing the kernel support around t.

    Any value v with ``v <= c_lo`` or ``v > c_hi`` lies outside ``[t - d,
    t + d]`` in exact arithmetic, which forces the evaluated weight
    ``1 - ((v - t) / d)**2`` to be <= 0 under round-to-nearest (both t - d
    and -1 are representable, so the quotient cannot round back inside the
    open interval).  Skipping such values therefore changes nothing.
    """
    return np.nextafter(t - d, -np.inf), np.nextafter(t + d, np.inf)


def epan_pair_sum(xs: np.ndarray, t: float, d: float) -> float:
    """Sum of ``K((g(x_i, x_j) - t) / d)`` over pairs i < j, average kernel.

    K is the Epanechnikov kernel ``0.75 * (1 - u^2)`` on ``|u| <= 1``.  A
    window prefilter — an exact-predicate search for pair values inside the
    widened support — skips pairs that cannot contribute; each surviving
    pair is evaluated with the exact kernel formula.
    """
    n = xs.size
    c_lo, c_hi = _support_cuts(t, d)
    starts = _avg_first_gt(xs, c_lo)
    stops = _avg_first_gt(xs, c_hi)
    total = 0.0
    for j in range(1, n):
        start, stop = int(starts[j]), min(int(stops[j]), j)
        if stop <= start:
            continue
        u = ((xs[start:stop] + xs[j]) * 0.5 - t) / d
        w = 1.0 - u * u
        w[w < 0.0] = 0.0
        total += 0.75 * float(w.sum())
    return total


def epan_point_sum(xs: np.ndarray, x: float, d: float) -> float:
    """Sum of ``K((xs[k] - x) / d)`` over all points, Epanechnikov K."""
    c_lo, c_hi = _support_cuts(x, d)
    start = int(np.searchsorted(xs, c_lo, side="right"))
    stop = int(np.searchsorted(xs, c_hi, side="right"))
    if stop <= start:
        return 0.0
    u = (xs[start:stop] - x) / d
    w = 1.0 - u * u
    w[w < 0.0] = 0.0
    return 0.75 * float(w.sum())


def offline_rank_select(
    svals: np.ndarray,
    slot_pos: np.ndarray,
    group_ofs: np.ndarray,
    ranks: np.ndarray,
) -> np.ndarray:
    """Rank selection over a growing multiset, processed in activation order.

    ``svals`` holds all values that will ever exist, sorted ascending.  Step
    s activates the slots ``slot_pos[group_ofs[s]:group_ofs[s + 1]]`` and
    then, for each requested rank r in ``ranks[s]`` (0 means no query),
    reports the r-th smallest currently active value.

    Activation marks a slot and bumps a per-bucket counter (O(1)); a query
    scans bucket counts and then one bucket's slots (O(sqrt-ish of the slot
    count)).  This favours the workload here: one activation per value but
    at most two queries per step.
    """
    svals = np.ascontiguousarray(svals, dtype=np.float64)
    slot_pos = np.ascontiguousarray(slot_pos, dtype=np.int64)
    group_ofs = np.ascontiguousarray(group_ofs, dtype=np.int64)
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)

    n_vals = svals.size
    n_steps = group_ofs.size - 1
    n_buckets = max(1, (n_vals + (1 << _BUCKET_SHIFT) - 1) >> _BUCKET_SHIFT)
    bucket_counts = np.zeros(n_buckets, dtype=np.int64)
    active = np.zeros(n_vals, dtype=bool)
    out = np.full((n_steps, 2), np.nan, dtype=np.float64)

    for s in range(n_steps):
        slots = slot_pos[group_ofs[s] : group_ofs[s + 1]]
        if slots.size:
            active[slots] = True
            np.add.at(bucket_counts, slots >> _BUCKET_SHIFT, 1)
        if ranks[s, 0] <= 0 and ranks[s, 1] <= 0:
            continue
        cum = np.cumsum(bucket_counts)
        for q in range(2):
            r = int(ranks[s, q])
            if r <= 0:
                continue
            b = int(np.searchsorted(cum, r, side="left"))
            before = int(cum[b - 1]) if b else 0
            base = b << _BUCKET_SHIFT
            in_bucket = np.flatnonzero(active[base : base + (1 << _BUCKET_SHIFT)])
            out[s, q] = svals[base + in_bucket[r - before - 1]]
    return out
