"""Long-run variance estimation for studentizing change-point processes.

Four estimators share one recipe: build a mean-zero influence series from
the sample, HAC-weight its autocovariances, and — for the quantile-type
statistics — divide by a squared kernel density estimate evaluated at the
point the statistic inverts.

* ``lrv_cusum``     — centered observations themselves;
* ``lrv_median``    — centered level indicators over a marginal density;
* ``lrv_hl``        — pair-average indicator averages ``psi_hat`` over the
                      density of the pairwise-average distribution;
* ``lrv_uquantile`` — the centered pair-kernel projection ``h1_hat``, for
                      an arbitrary pair function and probability level.

Three modes: ``known`` (a fixed value carried in the config, no
estimation), ``marginal`` (lag-zero term only) and ``full`` (the complete
HAC sum).  The quartic window is not positive semi-definite, so a full sum
can come out negative on adversarial samples; estimators then fall back to
the lag-zero term rather than return a negative variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _backend
from .core import (
    HL_SPEC,
    UQuantileSpec,
    _count_le_avg_scalar,
    _pair_block,
    _pair_values,
    as_sample,
    quantile_index,
    u_quantile,
)
from .errors import DegenerateSampleError, SingularDensityError

__all__ = [
    "DensityKernel",
    "HacWindow",
    "LrvConfig",
    "EPANECHNIKOV",
    "QUARTIC",
    "BARTLETT",
    "EPS_DENSITY",
    "MODE_KNOWN",
    "MODE_MARGINAL",
    "MODE_FULL",
    "u_density_estimate",
    "kde",
    "autocov_h1",
    "psi_hat",
    "lrv_cusum",
    "lrv_median",
    "lrv_hl",
    "lrv_uquantile",
]

EPS_DENSITY = 1e-8
"""Positivity floor: density estimates at or below this raise instead of
being squared into a near-infinite variance."""

MODE_KNOWN = "known"
MODE_MARGINAL = "marginal"
MODE_FULL = "full"
_MODES = (MODE_KNOWN, MODE_MARGINAL, MODE_FULL)


def _scalar_or_array(u, values):
    if np.ndim(u) == 0:
        return float(values)
    return values


def _epan_evaluate(u):
    arr = np.asarray(u, dtype=np.float64)
    out = np.where(np.abs(arr) <= 1.0, 0.75 * (1.0 - arr * arr), 0.0)
    return _scalar_or_array(u, out)


def _quartic_evaluate(t):
    arr = np.asarray(t, dtype=np.float64)
    w = 1.0 - arr * arr
    out = np.where(np.abs(arr) <= 1.0, w * w, 0.0)
    return _scalar_or_array(t, out)


def _bartlett_evaluate(t):
    arr = np.asarray(t, dtype=np.float64)
    out = np.where(np.abs(arr) <= 1.0, 1.0 - np.abs(arr), 0.0)
    return _scalar_or_array(t, out)


@dataclass(frozen=True)
class DensityKernel:
    """A symmetric density kernel with bounded support [-support, support]."""

    name: str
    evaluate: Callable
    support: float

    def __call__(self, u):
        return self.evaluate(u)


@dataclass(frozen=True)
class HacWindow:
    """An autocovariance weight function; ``support`` may be ``inf``."""

    name: str
    evaluate: Callable
    support: float

    def __call__(self, t):
        return self.evaluate(t)


EPANECHNIKOV = DensityKernel("epanechnikov", _epan_evaluate, 1.0)
QUARTIC = HacWindow("quartic", _quartic_evaluate, 1.0)
BARTLETT = HacWindow("bartlett", _bartlett_evaluate, 1.0)

BandwidthRule = Union[None, float, Callable]


@dataclass(frozen=True)
class LrvConfig:
    """How to obtain the long-run variance.

    ``mode`` is ``"known"`` (use ``sigma2`` as-is), ``"marginal"`` (lag-zero
    autocovariance only) or ``"full"`` (complete HAC sum, the default).
    Bandwidths may be fixed positive floats or callables of n; ``None``
    selects the built-in rules: density bandwidth = interquartile range of
    the smoothed values times n^(-1/3), HAC bandwidth = 2 n^(1/3).
    """

    mode: str = MODE_FULL
    sigma2: Optional[float] = None
    density_kernel: DensityKernel = EPANECHNIKOV
    hac_window: HacWindow = field(default=QUARTIC)
    d: BandwidthRule = None
    b: BandwidthRule = None

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.mode == MODE_KNOWN:
            s2 = self.sigma2
            if not (
                isinstance(s2, (int, float)) and math.isfinite(s2) and s2 > 0.0
            ):
                raise ValueError("known mode requires a positive finite sigma2")
        elif self.sigma2 is not None:
            raise ValueError("sigma2 is only meaningful in known mode")

    @classmethod
    def known(cls, sigma2: float) -> "LrvConfig":
        return cls(mode=MODE_KNOWN, sigma2=float(sigma2))


DEFAULT_CONFIG = LrvConfig()


def _require_estimation_mode(config: LrvConfig) -> None:
    if config.mode == MODE_KNOWN:
        raise ValueError(
            "known mode carries a fixed variance; estimators need "
            "marginal or full mode"
        )


def _positive_bandwidth(value, what: str) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"invalid bandwidth: {what} must be positive, got {value}")
    return value


def _resolve_b(config: LrvConfig, n: int) -> float:
    rule = config.b
    if rule is None:
        return 2.0 * n ** (1.0 / 3.0)
    if callable(rule):
        return _positive_bandwidth(rule(n), "b")
    return _positive_bandwidth(rule, "b")


def _resolve_d(config: LrvConfig, n: int, iqr: float, spread_fallback: Callable) -> float:
    """Density bandwidth: explicit setting, else scale estimate times n^(-1/3).

    ``iqr`` is the interquartile range of the values the density estimator
    smooths; ``spread_fallback`` lazily supplies their standard deviation
    for the all-ties case.  No usable spread at all means the sample is
    degenerate for density estimation.
    """
    rule = config.d
    if rule is not None:
        if callable(rule):
            return _positive_bandwidth(rule(n), "d")
        return _positive_bandwidth(rule, "d")
    scale = iqr
    if scale <= 0.0:
        scale = float(spread_fallback())
    if scale <= 0.0 or not math.isfinite(scale):
        raise DegenerateSampleError(
            "no usable spread for the density bandwidth (all values tied)"
        )
    return scale * n ** (-1.0 / 3.0)


def u_density_estimate(sample, spec: UQuantileSpec, t: float, K: DensityKernel, d: float) -> float:
    """Kernel density estimate of the pair-value distribution at t.

    Averages ``K((g(X_i, X_j) - t) / d)`` over the N = n(n-1)/2 pairs and
    divides by the bandwidth d.
    """
    x = as_sample(sample, min_len=2)
    d = _positive_bandwidth(d, "d")
    if not math.isfinite(t):
        raise ValueError("density evaluation point t must be finite")
    n = x.size
    norm = 2.0 / (n * (n - 1) * d)
    if spec.kind == _backend.KIND_AVG and K is EPANECHNIKOV:
        return _backend.epan_pair_sum(np.sort(x), float(t), d) * norm
    func = spec.pair_func()
    total = 0.0
    for s in range(1, n):
        u = (_pair_block(func, x[:s], x[s]) - t) / d
        total += float(np.sum(K.evaluate(u)))
    return total * norm


def kde(sample, x: float, K: DensityKernel, d: float) -> float:
    """Kernel density estimate of the marginal distribution at x."""
    xv = as_sample(sample, min_len=1)
    d = _positive_bandwidth(d, "d")
    if not math.isfinite(x):
        raise ValueError("density evaluation point x must be finite")
    n = xv.size
    if K is EPANECHNIKOV:
        return _backend.epan_point_sum(np.sort(xv), float(x), d) / (n * d)
    u = (xv - x) / d
    return float(np.sum(K.evaluate(u))) / (n * d)


def _h1_series(x: np.ndarray, spec: UQuantileSpec, t: float) -> np.ndarray:
    """``h1_hat`` evaluated at every sample point, in sample order."""
    n = x.size
    if spec.kind == _backend.KIND_AVG:
        xs = np.sort(x)
        order = np.argsort(x, kind="stable")
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n, dtype=np.int64)
        counts_sorted = _backend.pair_avg_le_counts(xs, float(t))
        both = 2 * _backend.count_pairs_le(xs, float(t), _backend.KIND_AVG)
        both += int(np.searchsorted(xs, t, side="right"))
        return counts_sorted[rank] / n - both / (n * n)
    func = spec.pair_func()
    counts = np.empty(n, dtype=np.int64)
    for i in range(n):
        counts[i] = int(np.count_nonzero(_pair_block(func, x, x[i]) <= t))
    return counts / n - int(counts.sum()) / (n * n)


def autocov_h1(sample, spec: UQuantileSpec, t: float, r: int) -> float:
    """Lag-r sample autocovariance of the centered projection series.

    The divisor is n for every lag, so magnitudes at high lags are not
    bounded by the lag-zero value.
    """
    x = as_sample(sample, min_len=2)
    n = x.size
    r = int(r)
    if not 0 <= r <= n - 1:
        raise ValueError(f"invalid lag: r must lie in [0, n-1], got {r}")
    v = _h1_series(x, spec, float(t))
    return float(v[: n - r] @ v[r:] / n)


def _hac_sum(v: np.ndarray, b: float, window: HacWindow) -> tuple[float, float]:
    """(full HAC-weighted sum, lag-zero term) for a mean-type series.

    Full sum: W(0) rho(0) + 2 sum_{r>=1} W(r/b) rho(r), truncated where the
    window vanishes; all autocovariances use divisor n.
    """
    n = v.size
    rho0 = float(v @ v / n)
    w0 = float(window.evaluate(0.0))
    base = w0 * rho0
    total = base
    for r in range(1, n):
        u = r / b
        if u > window.support:
            break
        w = float(window.evaluate(u))
        if w != 0.0:
            total += 2.0 * w * float(v[: n - r] @ v[r:] / n)
    return total, base


def _hac_by_mode(v: np.ndarray, config: LrvConfig, n: int) -> float:
    """HAC sum for the requested mode, clamped away from negative values."""
    b = _resolve_b(config, n)
    full, lag0 = _hac_sum(v, b, config.hac_window)
    if config.mode == MODE_MARGINAL:
        return lag0
    return full if full > 0.0 else lag0


def _check_positive(value: float, what: str) -> float:
    if not (math.isfinite(value) and value > 0.0):
        raise DegenerateSampleError(f"{what} came out non-positive ({value})")
    return float(value)


def lrv_cusum(sample, config: LrvConfig = DEFAULT_CONFIG) -> float:
    """Long-run variance of the observations, for the mean-based test."""
    _require_estimation_mode(config)
    x = as_sample(sample, min_len=2)
    if x.min() == x.max():
        raise DegenerateSampleError("constant sample has zero variance")
    v = x - x.mean()
    return _check_positive(_hac_by_mode(v, config, x.size), "long-run variance")


def lrv_median(sample, config: LrvConfig = DEFAULT_CONFIG) -> float:
    """Long-run variance of the sample median: indicator HAC over density^2."""
    _require_estimation_mode(config)
    x = as_sample(sample, min_len=2)
    n = x.size
    if x.min() == x.max():
        raise DegenerateSampleError("constant sample has zero variance")
    m = float(np.median(x))
    xs = np.sort(x)
    iqr = float(
        xs[quantile_index(0.75, n) - 1] - xs[quantile_index(0.25, n) - 1]
    )
    d = _resolve_d(config, n, iqr, lambda: np.std(x))
    f = kde(x, m, config.density_kernel, d)
    if f <= EPS_DENSITY:
        raise SingularDensityError(
            f"marginal density at the median is {f:.3e} <= {EPS_DENSITY}"
        )
    v = np.where(x <= m, 0.5, -0.5)
    s = _hac_by_mode(v, config, n)
    return _check_positive(s / (f * f), "long-run variance")


def psi_hat(sample, x: float, h_n: float) -> float:
    """Average of ``1{(x + X_j)/2 <= h_n} - 1/2`` over the sample."""
    xv = as_sample(sample, min_len=1)
    if not (math.isfinite(x) and math.isfinite(h_n)):
        raise ValueError("x and h_n must be finite")
    xs = np.sort(xv)
    return _count_le_avg_scalar(xs, float(x), float(h_n)) / xv.size - 0.5


def lrv_hl(sample, config: LrvConfig = DEFAULT_CONFIG) -> float:
    """Long-run variance of the median pairwise average.

    HAC sum of the ``psi_hat`` series over the sample, scaled by 4 over the
    squared pair-value density at the estimated location.
    """
    _require_estimation_mode(config)
    x = as_sample(sample, min_len=2)
    n = x.size
    if x.min() == x.max():
        raise DegenerateSampleError("constant sample has zero variance")
    hhat = u_quantile(x, HL_SPEC)
    iqr = u_quantile(x, UQuantileSpec(HL_SPEC.kernel, 0.75)) - u_quantile(
        x, UQuantileSpec(HL_SPEC.kernel, 0.25)
    )
    d = _resolve_d(config, n, iqr, lambda: np.std(_pair_values(x, HL_SPEC)))
    u_at = u_density_estimate(x, HL_SPEC, hhat, config.density_kernel, d)
    if u_at <= EPS_DENSITY:
        raise SingularDensityError(
            f"pair-value density at the location is {u_at:.3e} <= {EPS_DENSITY}"
        )
    xs = np.sort(x)
    order = np.argsort(x, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n, dtype=np.int64)
    counts = _backend.pair_avg_le_counts(xs, hhat)
    v = counts[rank] / n - 0.5
    s = _hac_by_mode(v, config, n)
    return _check_positive(4.0 * s / (u_at * u_at), "long-run variance")


def lrv_uquantile(sample, spec: UQuantileSpec, config: LrvConfig = DEFAULT_CONFIG) -> float:
    """Long-run variance of a general empirical pair-value quantile.

    HAC sum of the centered projection series at the estimated quantile,
    scaled by 4 over the squared pair-value density there.
    """
    _require_estimation_mode(config)
    x = as_sample(sample, min_len=2)
    n = x.size
    if x.min() == x.max():
        raise DegenerateSampleError("constant sample has zero variance")
    t_star = u_quantile(x, spec)
    iqr = u_quantile(x, UQuantileSpec(spec.kernel, 0.75)) - u_quantile(
        x, UQuantileSpec(spec.kernel, 0.25)
    )
    d = _resolve_d(config, n, iqr, lambda: np.std(_pair_values(x, spec)))
    u_at = u_density_estimate(x, spec, t_star, config.density_kernel, d)
    if u_at <= EPS_DENSITY:
        raise SingularDensityError(
            f"pair-value density at the quantile is {u_at:.3e} <= {EPS_DENSITY}"
        )
    v = _h1_series(x, spec, t_star)
    s = _hac_by_mode(v, config, n)
    return _check_positive(4.0 * s / (u_at * u_at), "long-run variance")
