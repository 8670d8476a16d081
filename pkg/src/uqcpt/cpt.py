"""Studentized change-point processes and max-type tests.

A test kind pairs a prefix-estimable location statistic with its long-run
variance estimator.  The studentized process

    (k / sqrt(n)) * (theta_hat_k - theta_hat_n) / sigma_hat,   k = k_min..n,

uses the full-sample sigma_hat throughout; under stationarity its maximum
absolute value converges to the supremum of a standard Brownian bridge's
absolute value, which supplies p-values and critical values here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import (
    HL_SPEC,
    UQuantileSpec,
    as_sample,
    prefix_means,
    prefix_medians,
    prefix_u_quantiles,
)
from .lrv import (
    DEFAULT_CONFIG,
    MODE_KNOWN,
    LrvConfig,
    lrv_cusum,
    lrv_hl,
    lrv_median,
    lrv_uquantile,
)

__all__ = [
    "TestKind",
    "CUSUM",
    "MEDIAN",
    "HODGES_LEHMANN",
    "general_u_quantile",
    "ChangePointResult",
    "trajectory",
    "test_statistic",
    "sup_bb_cdf",
    "critical_value",
    "run_test",
]

_VARIANT_CUSUM = "cusum"
_VARIANT_MEDIAN = "median"
_VARIANT_HL = "hl"
_VARIANT_GENERAL = "uquantile"


@dataclass(frozen=True)
class TestKind:
    """Which location statistic drives the change-point process."""

    variant: str
    spec: Optional[UQuantileSpec] = None

    def __post_init__(self) -> None:
        variants = (_VARIANT_CUSUM, _VARIANT_MEDIAN, _VARIANT_HL, _VARIANT_GENERAL)
        if self.variant not in variants:
            raise ValueError(f"variant must be one of {variants}, got {self.variant!r}")
        if self.variant == _VARIANT_GENERAL:
            if not isinstance(self.spec, UQuantileSpec):
                raise ValueError("the general variant requires a UQuantileSpec")
        elif self.spec is not None:
            raise ValueError(f"variant {self.variant!r} does not take a spec")

    @property
    def pairwise(self) -> bool:
        """True when prefixes need two observations (pair-based statistics)."""
        return self.variant in (_VARIANT_HL, _VARIANT_GENERAL)

    @property
    def default_k_min(self) -> int:
        """11 for the robust kinds (drop the first 10 noisy prefixes), 1 for CUSUM."""
        return 1 if self.variant == _VARIANT_CUSUM else 11


CUSUM = TestKind(_VARIANT_CUSUM)
MEDIAN = TestKind(_VARIANT_MEDIAN)
HODGES_LEHMANN = TestKind(_VARIANT_HL)


def general_u_quantile(spec: UQuantileSpec) -> TestKind:
    """A change-point test built on an arbitrary pair-value quantile."""
    return TestKind(_VARIANT_GENERAL, spec)


@dataclass(frozen=True)
class ChangePointResult:
    """Everything ``run_test`` determines about one sample."""

    statistic: float
    trajectory: np.ndarray
    k_min: int
    changepoint_k: int
    lrv_used: float
    p_value: float
    reject_at_5pct: bool


def _resolve_k_min(kind: TestKind, k_min: Optional[int], n: int) -> int:
    if k_min is None:
        k_min = kind.default_k_min
    k_min = int(k_min)
    floor = 2 if kind.pairwise else 1
    if k_min < floor:
        raise ValueError(
            f"k_min must be >= {floor} for the {kind.variant} kind, got {k_min}"
        )
    if k_min > n:
        raise ValueError(f"k_min {k_min} exceeds the sample size {n}")
    return k_min


def _prefix_path(x: np.ndarray, kind: TestKind, k_min: int) -> np.ndarray:
    if kind.variant == _VARIANT_CUSUM:
        return prefix_means(x)[k_min - 1 :]
    if kind.variant == _VARIANT_MEDIAN:
        return prefix_medians(x)[k_min - 1 :]
    spec = HL_SPEC if kind.variant == _VARIANT_HL else kind.spec
    return prefix_u_quantiles(x, spec, k_min)


def _variance(x: np.ndarray, kind: TestKind, config: LrvConfig) -> float:
    if config.mode == MODE_KNOWN:
        return float(config.sigma2)
    if kind.variant == _VARIANT_CUSUM:
        return lrv_cusum(x, config)
    if kind.variant == _VARIANT_MEDIAN:
        return lrv_median(x, config)
    if kind.variant == _VARIANT_HL:
        return lrv_hl(x, config)
    return lrv_uquantile(x, kind.spec, config)


def _studentized_path(
    sample, kind: TestKind, config: LrvConfig, k_min: Optional[int]
) -> tuple[np.ndarray, float, int]:
    x = as_sample(sample, min_len=2)
    n = x.size
    k_min = _resolve_k_min(kind, k_min, n)
    theta = _prefix_path(x, kind, k_min)
    sigma2 = _variance(x, kind, config)
    ks = np.arange(k_min, n + 1, dtype=np.float64)
    path = ks / math.sqrt(n) * (theta - theta[-1]) / math.sqrt(sigma2)
    return path, sigma2, k_min


def trajectory(
    sample,
    kind: TestKind,
    config: LrvConfig = DEFAULT_CONFIG,
    k_min: Optional[int] = None,
) -> np.ndarray:
    """The studentized change-point process for k = k_min..n.

    The final entry is exactly zero: the prefix estimate at k = n is the
    full-sample estimate itself.
    """
    path, _, _ = _studentized_path(sample, kind, config, k_min)
    return path


def test_statistic(trajectory, k_min: int = 1) -> tuple[float, int]:
    """Max absolute entry of a trajectory indexed k = 1..len, and its k.

    Entries with k < k_min are excluded; ties resolve to the smallest k.
    """
    arr = np.asarray(trajectory, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("trajectory must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("trajectory contains non-finite values")
    k_min = int(k_min)
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    if k_min > arr.size:
        raise ValueError("all trajectory entries excluded by k_min")
    tail = np.abs(arr[k_min - 1 :])
    pos = int(np.argmax(tail))
    return float(tail[pos]), k_min + pos


def sup_bb_cdf(x: float) -> float:
    """P(sup |Brownian bridge| <= x), by the alternating exponential series.

    Terms are truncated below 1e-12; arguments under 0.1 return 0 directly
    (the series alternates too slowly there and the mass is below 1e-12
    anyway).
    """
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise ValueError(f"x must be a nonnegative real, got {x}")
    if x < 0.1:
        return 0.0
    total = 1.0
    sign = -1.0
    for k in range(1, 10000):
        term = 2.0 * math.exp(-2.0 * (k * x) ** 2)
        if term < 1e-12:
            break
        total += sign * term
        sign = -sign
    return min(max(total, 0.0), 1.0)


@lru_cache(maxsize=128)
def critical_value(alpha: float) -> float:
    """The (1 - alpha) quantile of the sup |Brownian bridge| law.

    Bracketed bisection of ``sup_bb_cdf`` on [0.1, 10] to width 1e-6.
    """
    alpha = float(alpha)
    if not (math.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    target = 1.0 - alpha
    lo, hi = 0.1, 10.0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if sup_bb_cdf(mid) >= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def run_test(
    sample,
    kind: TestKind,
    config: LrvConfig = DEFAULT_CONFIG,
    k_min: Optional[int] = None,
) -> ChangePointResult:
    """Run one change-point test end to end on one sample."""
    path, sigma2, k_min = _studentized_path(sample, kind, config, k_min)
    stat, k_at = test_statistic(path, 1)
    k_at = k_min + (k_at - 1)
    p_value = 1.0 - sup_bb_cdf(stat)
    return ChangePointResult(
        statistic=stat,
        trajectory=path,
        k_min=k_min,
        changepoint_k=k_at,
        lrv_used=sigma2,
        p_value=p_value,
        reject_at_5pct=stat > critical_value(0.05),
    )
