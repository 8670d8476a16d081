"""Empirical distribution, quantiles and prefix paths of pairwise values.

For a sample X_1..X_n and a symmetric pair function g, the objects here
live on the multiset of N = n(n-1)/2 values ``g(X_i, X_j)``, i < j:

* ``u_dist_fn``        — fraction of pair values <= t,
* ``u_quantile``       — generalised inverse of that step function,
* ``hodges_lehmann``   — median pairwise average, a robust location,
* ``prefix_*``         — the same statistic on every prefix of the sample,
* ``h1_hat``           — the centered one-argument projection of the
                          indicator kernel, the influence term that drives
                          the asymptotic variance.

Two pair functions are built in under the names ``"average"`` and
``"absdiff"``; they run through exact counting kernels that never
materialise the pair multiset.  Any other symmetric callable is accepted
and handled by direct enumeration (it should accept NumPy arrays and
broadcast; scalar-only callables are applied elementwise as a fallback).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _backend
from .errors import InsufficientDataError

__all__ = [
    "UQuantileSpec",
    "as_sample",
    "quantile_index",
    "u_dist_fn",
    "u_quantile",
    "hodges_lehmann",
    "prefix_u_quantiles",
    "prefix_means",
    "prefix_medians",
    "h1_hat",
    "KERNEL_AVERAGE",
    "KERNEL_ABSDIFF",
    "HL_SPEC",
]

KERNEL_AVERAGE = "average"
KERNEL_ABSDIFF = "absdiff"

_BUILTIN_FUNCS = {
    KERNEL_AVERAGE: lambda a, b: (a + b) * 0.5,
    KERNEL_ABSDIFF: lambda a, b: np.abs(a - b),
}
_BUILTIN_CODES = {
    KERNEL_AVERAGE: _backend.KIND_AVG,
    KERNEL_ABSDIFF: _backend.KIND_ABSDIFF,
}


@dataclass(frozen=True)
class UQuantileSpec:
    """A pair function together with the probability level to invert at.

    ``kernel`` is ``"average"``, ``"absdiff"`` or a symmetric callable;
    ``p`` must lie strictly between 0 and 1.
    """

    kernel: Union[str, Callable]
    p: float = 0.5

    def __post_init__(self) -> None:
        if isinstance(self.kernel, str):
            if self.kernel not in _BUILTIN_FUNCS:
                raise ValueError(
                    f"unknown kernel name {self.kernel!r}; "
                    f"built-ins are {sorted(_BUILTIN_FUNCS)}"
                )
        elif not callable(self.kernel):
            raise ValueError("kernel must be a built-in name or a callable")
        p = self.p
        if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 < p < 1.0):
            raise ValueError(f"p must lie strictly in (0, 1), got {p!r}")

    @property
    def kind(self):
        """Backend integer code for built-in kernels, None for callables."""
        if isinstance(self.kernel, str):
            return _BUILTIN_CODES[self.kernel]
        return None

    def pair_func(self) -> Callable:
        if isinstance(self.kernel, str):
            return _BUILTIN_FUNCS[self.kernel]
        return self.kernel


HL_SPEC = UQuantileSpec(KERNEL_AVERAGE, 0.5)


def as_sample(values, min_len: int = 1) -> np.ndarray:
    """Validate and convert input to a 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"sample must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_len:
        raise InsufficientDataError(
            f"need at least {min_len} observations, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    return arr


def quantile_index(p: float, m: int) -> int:
    """Smallest rank k in 1..m with k/m >= p.

    ``ceil(p * m)`` computed in floats can land one step off when p * m is
    within rounding error of an integer, so the result is nudged until the
    defining inequalities hold exactly.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability p must lie strictly in (0, 1), got {p}")
    if m < 1:
        raise ValueError(f"rank count m must be >= 1, got {m}")
    k = int(math.ceil(p * m))
    k = min(max(k, 1), m)
    while k > 1 and (k - 1) / m >= p:
        k -= 1
    while k < m and k / m < p:
        k += 1
    return k


def _pair_block(func: Callable, left: np.ndarray, right: float) -> np.ndarray:
    """Evaluate a pair function against one anchor value, vectorised if possible."""
    try:
        out = np.asarray(func(left, right), dtype=np.float64)
    except (TypeError, ValueError):
        out = None
    if out is not None and out.shape == left.shape:
        return out
    return np.array([func(float(v), right) for v in left], dtype=np.float64)


def _pair_values(x: np.ndarray, spec: UQuantileSpec) -> np.ndarray:
    """All pair values in activation order: step s contributes (i, s), i < s."""
    n = x.size
    total = n * (n - 1) // 2
    out = np.empty(total, dtype=np.float64)
    func = spec.pair_func()
    ofs = 0
    for s in range(1, n):
        out[ofs : ofs + s] = _pair_block(func, x[:s], x[s])
        ofs += s
    return out


def _count_le_avg_scalar(xs: np.ndarray, anchor: float, t: float) -> int:
    """How many sample values y satisfy ``(anchor + y) * 0.5 <= t``."""
    lo, hi = 0, xs.size
    while lo < hi:
        mid = (lo + hi) // 2
        if (anchor + xs[mid]) * 0.5 <= t:
            lo = mid + 1
        else:
            hi = mid
    return lo


def u_dist_fn(sample, spec: UQuantileSpec, t: float) -> float:
    """Fraction of pair values g(X_i, X_j), i < j, that are <= t."""
    x = as_sample(sample, min_len=2)
    if math.isnan(t):
        raise ValueError("threshold t must not be NaN")
    n = x.size
    total = n * (n - 1) // 2
    kind = spec.kind
    if kind is not None:
        xs = np.sort(x)
        return _backend.count_pairs_le(xs, float(t), kind) / total
    func = spec.pair_func()
    count = 0
    for s in range(1, n):
        count += int(np.count_nonzero(_pair_block(func, x[:s], x[s]) <= t))
    return count / total


def _select_pair_rank(xs: np.ndarray, k: int, kind: int) -> float:
    """k-th smallest pair value, by value-space bisection with exact counts.

    Never materialises the full multiset: counts above/below trial values
    narrow a value interval until the band it brackets is small enough to
    enumerate.  The returned double is an element of the pair multiset, so
    the result is identical to sorting all N values and indexing.
    """
    n = xs.size
    if kind == _backend.KIND_AVG:
        lo = (xs[0] + xs[1]) * 0.5
        hi = (xs[-2] + xs[-1]) * 0.5
    else:
        lo = float(np.min(xs[1:] - xs[:-1]))
        hi = float(xs[-1] - xs[0])
    if lo == hi:
        return float(lo)
    c_lo = _backend.count_pairs_le(xs, lo, kind)
    if c_lo >= k:
        return float(lo)
    c_hi = n * (n - 1) // 2
    band_cap = max(64, 4 * n)
    for _ in range(5000):
        if hi == np.nextafter(lo, np.inf):
            return float(hi)
        if c_hi - c_lo <= band_cap:
            band = _backend.pairs_in_range(xs, lo, hi, kind)
            idx = k - c_lo - 1
            return float(np.partition(band, idx)[idx])
        mid = lo * 0.5 + hi * 0.5
        if mid <= lo:
            mid = np.nextafter(lo, np.inf)
        elif mid >= hi:
            mid = np.nextafter(hi, -np.inf)
        c_mid = _backend.count_pairs_le(xs, mid, kind)
        if c_mid >= k:
            hi, c_hi = mid, c_mid
        else:
            lo, c_lo = mid, c_mid
    raise RuntimeError("pair-rank bisection failed to converge")  # pragma: no cover


def u_quantile(sample, spec: UQuantileSpec) -> float:
    """Smallest t with ``u_dist_fn(sample, spec, t) >= spec.p``.

    This is the k-th smallest pair value for k = ``quantile_index(p, N)``,
    N the number of pairs.
    """
    x = as_sample(sample, min_len=2)
    n = x.size
    total = n * (n - 1) // 2
    k = quantile_index(spec.p, total)
    kind = spec.kind
    if kind is not None:
        return _select_pair_rank(np.sort(x), k, kind)
    vals = _pair_values(x, spec)
    return float(np.partition(vals, k - 1)[k - 1])


def hodges_lehmann(sample) -> float:
    """Median of the pairwise averages (lower median for even pair counts)."""
    return u_quantile(sample, HL_SPEC)


def prefix_u_quantiles(sample, spec: UQuantileSpec, k_min: int) -> np.ndarray:
    """``u_quantile`` of every prefix X_1..X_k for k = k_min..n.

    Equivalent to recomputing from scratch at each k (bit-for-bit: each
    entry is selected from the same value multiset by the same rank rule),
    but runs off one sort of the full pair multiset plus an incremental
    rank-selection sweep.
    """
    x = as_sample(sample, min_len=2)
    n = x.size
    if not 2 <= k_min <= n:
        raise ValueError(f"k_min must lie in [2, n], got {k_min} with n={n}")
    vals = _pair_values(x, spec)
    order = np.argsort(vals)
    svals = vals[order]
    slot_pos = np.empty(vals.size, dtype=np.int64)
    slot_pos[order] = np.arange(vals.size, dtype=np.int64)
    group_ofs = np.concatenate(
        [np.zeros(1, dtype=np.int64), np.cumsum(np.arange(n, dtype=np.int64))]
    )
    ranks = np.zeros((n, 2), dtype=np.int64)
    for s in range(k_min - 1, n):
        pairs_k = (s + 1) * s // 2
        ranks[s, 0] = quantile_index(spec.p, pairs_k)
    got = _backend.offline_rank_select(svals, slot_pos, group_ofs, ranks)
    return np.ascontiguousarray(got[k_min - 1 :, 0])


def prefix_means(sample) -> np.ndarray:
    """Mean of every prefix X_1..X_k, k = 1..n."""
    x = as_sample(sample, min_len=1)
    return np.cumsum(x) / np.arange(1, x.size + 1)


def prefix_medians(sample) -> np.ndarray:
    """Median of every prefix X_1..X_k, k = 1..n (two-middle average)."""
    x = as_sample(sample, min_len=1)
    n = x.size
    order = np.argsort(x, kind="stable")
    svals = x[order]
    slot_pos = np.empty(n, dtype=np.int64)
    slot_pos[order] = np.arange(n, dtype=np.int64)
    group_ofs = np.arange(n + 1, dtype=np.int64)
    ranks = np.empty((n, 2), dtype=np.int64)
    ks = np.arange(1, n + 1, dtype=np.int64)
    ranks[:, 0] = (ks + 1) // 2
    ranks[:, 1] = np.where(ks % 2 == 0, ks // 2 + 1, 0)
    got = _backend.offline_rank_select(svals, slot_pos, group_ofs, ranks)
    out = got[:, 0].copy()
    even = ks % 2 == 0
    out[even] = (got[even, 0] + got[even, 1]) * 0.5
    return out


def h1_hat(sample, spec: UQuantileSpec, t: float, x: float) -> float:
    """Centered projection of the indicator pair kernel at threshold t.

    With h(a, b, t) = 1{g(a, b) <= t}, this is the average of h(x, X_j, t)
    over the sample minus the average of h(X_i, X_j, t) over all ordered
    sample pairs (diagonal included).  Averaged over x = X_1..X_n it is
    exactly zero.
    """
    xv = as_sample(sample, min_len=2)
    if math.isnan(t) or not math.isfinite(x):
        raise ValueError("t must not be NaN and x must be finite")
    n = xv.size
    if spec.kind == _backend.KIND_AVG:
        xs = np.sort(xv)
        first = _count_le_avg_scalar(xs, float(x), float(t)) / n
        both = 2 * _backend.count_pairs_le(xs, float(t), _backend.KIND_AVG)
        both += int(np.searchsorted(xs, t, side="right"))  # diagonal: g(a, a) = a
        return first - both / (n * n)
    func = spec.pair_func()
    first = float(np.count_nonzero(_pair_block(func, xv, float(x)) <= t)) / n
    both = 0
    for i in range(n):
        both += int(np.count_nonzero(_pair_block(func, xv, xv[i]) <= t))
    return first - both / (n * n)
