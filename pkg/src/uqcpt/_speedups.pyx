# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend: C implementations of the pair-multiset kernels.

Function-for-function twin of ``uqcpt._pyref`` with identical
floating-point semantics: every comparison is made on the exact double
produced by the pair formula, so counts, selected values and window
membership agree bit-for-bit with the NumPy reference (only the
accumulation order of the two kernel sums differs).

Monotonicity of rounded addition in each argument turns the per-anchor
binary searches of the reference into amortised O(n) pointer sweeps here.
"""

import numpy as np

from libc.math cimport INFINITY, nextafter
from libc.stdint cimport int64_t, uint8_t

KIND_AVG = 0
KIND_ABSDIFF = 1

cdef int _BUCKET_SHIFT = 11  # buckets of 2048 slots in the selection engine


def count_pairs_le(double[::1] xs, double t, int kind):
    """Number of pairs i < j with ``g(xs[i], xs[j]) <= t``."""
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t j, ptr
    cdef int64_t total = 0
    if kind == KIND_AVG:
        ptr = n
        for j in range(n):
            while ptr > 0 and (xs[ptr - 1] + xs[j]) * 0.5 > t:
                ptr -= 1
            total += ptr if ptr < j else j
    else:
        ptr = 0
        for j in range(n):
            while ptr < n and xs[j] - xs[ptr] > t:
                ptr += 1
            if ptr < j:
                total += j - ptr
    return int(total)


def pair_avg_le_counts(double[::1] xs, double thr):
    """Per-point counts of sample values y with ``(x + y) * 0.5 <= thr``."""
    cdef Py_ssize_t n = xs.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t j, ptr = n
    for j in range(n):
        while ptr > 0 and (xs[ptr - 1] + xs[j]) * 0.5 > thr:
            ptr -= 1
        out[j] = ptr
    return out_arr


def pairs_in_range(double[::1] xs, double lo, double hi, int kind):
    """Values of all pairs i < j with ``lo < g(xs[i], xs[j]) <= hi``."""
    cdef Py_ssize_t n = xs.shape[0]
    starts_arr = np.empty(n, dtype=np.int64)
    stops_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] starts = starts_arr
    cdef int64_t[::1] stops = stops_arr
    cdef Py_ssize_t j, i, pa, pb
    cdef int64_t total = 0, pos = 0

    if kind == KIND_AVG:
        pa = n  # first pair value > lo for the current anchor
        pb = n  # first pair value > hi
        for j in range(n):
            while pa > 0 and (xs[pa - 1] + xs[j]) * 0.5 > lo:
                pa -= 1
            while pb > 0 and (xs[pb - 1] + xs[j]) * 0.5 > hi:
                pb -= 1
            starts[j] = pa
            stops[j] = pb if pb < j else j
            if stops[j] > starts[j]:
                total += stops[j] - starts[j]
        out_arr = np.empty(total, dtype=np.float64)
        if total:
            _fill_avg(xs, starts, stops, out_arr)
        return out_arr

    pa = 0  # first index whose difference from the anchor is <= lo
    pb = 0  # first index whose difference from the anchor is <= hi
    for j in range(n):
        while pa < n and xs[j] - xs[pa] > lo:
            pa += 1
        while pb < n and xs[j] - xs[pb] > hi:
            pb += 1
        starts[j] = pb
        stops[j] = pa if pa < j else j
        if stops[j] > starts[j]:
            total += stops[j] - starts[j]
    out_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(n):
        for i in range(starts[j], stops[j]):
            out[pos] = xs[j] - xs[i]
            pos += 1
    return out_arr


cdef void _fill_avg(double[::1] xs, int64_t[::1] starts, int64_t[::1] stops,
                    double[::1] out):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t j, i
    cdef int64_t pos = 0
    for j in range(n):
        for i in range(starts[j], stops[j]):
            out[pos] = (xs[i] + xs[j]) * 0.5
            pos += 1


def epan_pair_sum(double[::1] xs, double t, double d):
    """Sum of ``K((g(x_i, x_j) - t) / d)`` over pairs i < j, average kernel."""
    cdef Py_ssize_t n = xs.shape[0]
    cdef double c_lo = nextafter(t - d, -INFINITY)
    cdef double c_hi = nextafter(t + d, INFINITY)
    cdef Py_ssize_t j, i, stop, pa = n, pb = n
    cdef double u, w, part, total = 0.0
    for j in range(n):
        while pa > 0 and (xs[pa - 1] + xs[j]) * 0.5 > c_lo:
            pa -= 1
        while pb > 0 and (xs[pb - 1] + xs[j]) * 0.5 > c_hi:
            pb -= 1
        stop = pb if pb < j else j
        if stop <= pa:
            continue
        part = 0.0
        for i in range(pa, stop):
            u = ((xs[i] + xs[j]) * 0.5 - t) / d
            w = 1.0 - u * u
            if w > 0.0:
                part += w
        total += 0.75 * part
    return total


def epan_point_sum(double[::1] xs, double x, double d):
    """Sum of ``K((xs[k] - x) / d)`` over all points, Epanechnikov K."""
    cdef Py_ssize_t n = xs.shape[0]
    cdef double c_lo = nextafter(x - d, -INFINITY)
    cdef double c_hi = nextafter(x + d, INFINITY)
    cdef Py_ssize_t k
    cdef double v, u, w, total = 0.0
    for k in range(n):
        v = xs[k]
        if v <= c_lo or v > c_hi:
            continue
        u = (v - x) / d
        w = 1.0 - u * u
        if w > 0.0:
            total += w
    return 0.75 * total


def offline_rank_select(double[::1] svals, int64_t[::1] slot_pos,
                        int64_t[::1] group_ofs, int64_t[:, ::1] ranks):
    """Rank selection over a growing multiset, processed in activation order.

    See the NumPy reference for the contract.  Activation is O(1) per
    value; a query scans the bucket counters and one bucket's slots.
    """
    cdef Py_ssize_t n_vals = svals.shape[0]
    cdef Py_ssize_t n_steps = group_ofs.shape[0] - 1
    cdef int shift = _BUCKET_SHIFT
    cdef Py_ssize_t bucket = (<Py_ssize_t> 1) << shift
    cdef Py_ssize_t n_buckets = (n_vals + bucket - 1) >> shift
    if n_buckets < 1:
        n_buckets = 1

    counts_arr = np.zeros(n_buckets, dtype=np.int64)
    active_arr = np.zeros(n_vals if n_vals else 1, dtype=np.uint8)
    out_arr = np.full((n_steps, 2), np.nan, dtype=np.float64)
    cdef int64_t[::1] counts = counts_arr
    cdef uint8_t[::1] active = active_arr
    cdef double[:, ::1] out = out_arr

    cdef Py_ssize_t s, idx, slot, b, pos, limit
    cdef int q
    cdef int64_t r, acc, seen
    for s in range(n_steps):
        for idx in range(group_ofs[s], group_ofs[s + 1]):
            slot = slot_pos[idx]
            active[slot] = 1
            counts[slot >> shift] += 1
        for q in range(2):
            r = ranks[s, q]
            if r <= 0:
                continue
            acc = 0
            b = 0
            while acc + counts[b] < r:
                acc += counts[b]
                b += 1
            seen = acc
            pos = b << shift
            limit = pos + bucket
            if limit > n_vals:
                limit = n_vals
            while pos < limit:
                if active[pos]:
                    seen += 1
                    if seen == r:
                        out[s, q] = svals[pos]
                        break
                pos += 1
    return out_arr
