"""Synthetic data generators and their population long-run variances.

Samples are built in two layers.  The dependence layer is either i.i.d.
noise or a stationary Gaussian AR(1) started from its stationary law (no
burn-in needed).  The marginal layer maps that noise to one of three
families: standard normal, a rescaled Student-t — multiplied by
``gamma_nu`` so the median of |Y| matches the normal case — or an
exponential.  Dependence with a non-normal marginal uses the Gaussian
copula: standardize the AR(1) state to N(0,1), push through the normal CDF
and then through the target quantile function.  On top of that, a change
specification either adds a level jump after a fraction theta of the
series or divides the tail by a scale factor.

``true_lrv`` returns the population long-run variance of the matching
location statistic under each covered design — the ground truth that
"known variance" simulation cells studentize with — or ``None`` with a
reason when no closed form is available.  Values for rescaled-t marginals
include the gamma_nu^2 factor, i.e. they describe the series actually
generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special as _sp
from scipy.integrate import quad as _quad
from scipy.optimize import brentq as _brentq
from scipy.signal import lfilter as _lfilter
from scipy.stats import t as _student_t

from .cpt import CUSUM, HODGES_LEHMANN, MEDIAN, TestKind

__all__ = [
    "MarginalDist",
    "DependenceSpec",
    "ChangeSpec",
    "DgpSpec",
    "NORMAL",
    "IID",
    "NO_CHANGE",
    "scaled_t",
    "exponential",
    "ar1",
    "location_jump",
    "scale_change",
    "t_density",
    "t_quantile",
    "generate",
    "true_lrv",
    "lrv_unavailable_reason",
    "exp_hl_location",
]

Z_75 = float(_sp.ndtri(0.75))  # upper quartile of the standard normal

_SERIES_TOL = 1e-14  # arcsin-series truncation: stop when increments dip below


@dataclass(frozen=True)
class MarginalDist:
    """Marginal family: ``"normal"``, ``"scaled_t"`` or ``"exponential"``."""

    variant: str
    nu: Optional[float] = None
    lam: Optional[float] = None

    def __post_init__(self) -> None:
        if self.variant == "normal":
            if self.nu is not None or self.lam is not None:
                raise ValueError("normal takes no parameters")
        elif self.variant == "scaled_t":
            if not (self.nu is not None and math.isfinite(self.nu) and self.nu > 0):
                raise ValueError("scaled_t requires degrees of freedom nu > 0")
            if self.lam is not None:
                raise ValueError("scaled_t takes no rate parameter")
        elif self.variant == "exponential":
            if not (self.lam is not None and math.isfinite(self.lam) and self.lam > 0):
                raise ValueError("exponential requires a rate lam > 0")
            if self.nu is not None:
                raise ValueError("exponential takes no degrees of freedom")
        else:
            raise ValueError(f"unknown marginal variant {self.variant!r}")

    @property
    def gamma(self) -> float:
        """Scale multiplier making median(|Y|) match the normal case."""
        if self.variant == "scaled_t":
            return Z_75 / t_quantile(self.nu, 0.75)
        return 1.0


@dataclass(frozen=True)
class DependenceSpec:
    """Serial dependence: ``"iid"`` or a Gaussian-copula ``"ar1"``."""

    variant: str
    phi: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in ("iid", "ar1"):
            raise ValueError(f"unknown dependence variant {self.variant!r}")
        if self.variant == "iid":
            if self.phi != 0.0:
                raise ValueError("iid carries no autoregression coefficient")
        elif not (math.isfinite(self.phi) and abs(self.phi) < 1.0):
            raise ValueError(f"ar1 requires |phi| < 1, got {self.phi}")


@dataclass(frozen=True)
class ChangeSpec:
    """What changes after a fraction theta of the series, if anything."""

    variant: str
    theta: float = 0.5
    mu: float = 0.0
    lambda2: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in ("none", "location", "scale"):
            raise ValueError(f"unknown change variant {self.variant!r}")
        if self.variant != "none" and not (
            math.isfinite(self.theta) and 0.0 < self.theta < 1.0
        ):
            raise ValueError(f"theta must lie strictly in (0, 1), got {self.theta}")
        if self.variant == "scale" and not (
            math.isfinite(self.lambda2) and self.lambda2 > 0.0
        ):
            raise ValueError(f"lambda2 must be positive, got {self.lambda2}")
        if self.variant == "location" and not math.isfinite(self.mu):
            raise ValueError("mu must be finite")


NORMAL = MarginalDist("normal")
IID = DependenceSpec("iid")
NO_CHANGE = ChangeSpec("none")


def scaled_t(nu: float) -> MarginalDist:
    return MarginalDist("scaled_t", nu=float(nu))


def exponential(lam: float) -> MarginalDist:
    return MarginalDist("exponential", lam=float(lam))


def ar1(phi: float) -> DependenceSpec:
    return DependenceSpec("ar1", phi=float(phi))


def location_jump(mu: float, theta: float) -> ChangeSpec:
    return ChangeSpec("location", theta=float(theta), mu=float(mu))


def scale_change(lambda2: float, theta: float) -> ChangeSpec:
    return ChangeSpec("scale", theta=float(theta), lambda2=float(lambda2))


@dataclass(frozen=True)
class DgpSpec:
    """A complete recipe for one synthetic sample."""

    marginal: MarginalDist
    dependence: DependenceSpec
    change: ChangeSpec
    n: int
    seed: Union[int, Tuple[int, ...]]

    def __post_init__(self) -> None:
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 2):
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")


def t_density(nu: float, x):
    """Standard Student-t density with ``nu`` degrees of freedom."""
    if not (math.isfinite(nu) and nu > 0):
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    log_norm = (
        math.lgamma((nu + 1.0) / 2.0)
        - math.lgamma(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
    )
    xv = np.asarray(x, dtype=np.float64)
    out = np.exp(log_norm - (nu + 1.0) / 2.0 * np.log1p(xv * xv / nu))
    if np.ndim(x) == 0:
        return float(out)
    return out


def _t_cdf(nu: float, x: float) -> float:
    return float(_sp.stdtr(nu, x))


def t_quantile(nu: float, q: float) -> float:
    """Inverse Student-t CDF by bracketed root-finding (closed forms for nu=1,2)."""
    if not (math.isfinite(nu) and nu > 0):
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    if not (math.isfinite(q) and 0.0 < q < 1.0):
        raise ValueError(f"quantile level must lie strictly in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_quantile(nu, 1.0 - q)
    if nu == 1.0:
        return math.tan(math.pi * (q - 0.5))
    if nu == 2.0:
        return (2.0 * q - 1.0) * math.sqrt(2.0 / (4.0 * q * (1.0 - q)))
    hi = 1.0
    while _t_cdf(nu, hi) < q:
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover - CDF reaches any q < 1 long before
            raise ArithmeticError("t quantile bracket expansion failed")
    return float(_brentq(lambda s: _t_cdf(nu, s) - q, 0.0, hi, xtol=1e-12, rtol=8.9e-16))


def _copula_uniforms(z: np.ndarray, phi: float) -> np.ndarray:
    """Map stationary AR(1) states to uniforms via the standard normal CDF."""
    v = z * math.sqrt(1.0 - phi * phi)
    u = _sp.ndtr(v)
    return np.clip(u, 1e-300, np.nextafter(1.0, 0.0))


def generate(spec: DgpSpec) -> np.ndarray:
    """Draw one sample; identical spec and seed give identical output."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n = int(spec.n)
    marginal = spec.marginal
    dep = spec.dependence

    if dep.variant == "iid":
        if marginal.variant == "normal":
            y = rng.standard_normal(n)
        elif marginal.variant == "scaled_t":
            y = marginal.gamma * rng.standard_t(marginal.nu, size=n)
        else:
            y = rng.exponential(scale=1.0 / marginal.lam, size=n)
    else:
        phi = dep.phi
        z0 = rng.standard_normal() / math.sqrt(1.0 - phi * phi)
        eps = rng.standard_normal(n)
        z = _lfilter([1.0], [1.0, -phi], eps, zi=[phi * z0])[0]
        v = z * math.sqrt(1.0 - phi * phi)
        if marginal.variant == "normal":
            y = v
        elif marginal.variant == "scaled_t":
            u = _copula_uniforms(z, phi)
            y = marginal.gamma * _student_t.ppf(u, marginal.nu)
        else:
            u = _copula_uniforms(z, phi)
            y = -np.log1p(-u) / marginal.lam

    change = spec.change
    if change.variant != "none":
        cut = int(math.floor(change.theta * n))
        if change.variant == "location":
            y[cut:] += change.mu
        else:
            y[cut:] /= change.lambda2
    return y


def _arcsin_series(phi: float, halved: bool) -> float:
    """Sum of arcsin(phi^k / 2) or arcsin(phi^k) over k >= 1."""
    if phi == 0.0:
        return 0.0
    total = 0.0
    power = 1.0
    for _ in range(100000):
        power *= phi
        term = math.asin(power / 2.0 if halved else power)
        total += term
        if abs(term) < _SERIES_TOL:
            break
    return total


@lru_cache(maxsize=64)
def _pair_density_mass(nu: float) -> float:
    """Twice the integrated squared t density, by adaptive quadrature."""
    val, _ = _quad(lambda s: t_density(nu, s) ** 2, -np.inf, np.inf)
    return 2.0 * val


@lru_cache(maxsize=1)
def exp_hl_location() -> float:
    """Population median pairwise average of a unit-rate exponential.

    The positive root h of ``2 (1 + 2h) = exp(2h)``.
    """
    return float(_brentq(lambda h: math.exp(2.0 * h) - 2.0 - 4.0 * h, 0.5, 2.0, xtol=1e-14))


_NORMAL_PAIR_MASS = 1.0 / math.sqrt(math.pi)  # 2 * integral of the squared normal pdf


def _kind_name(kind: Union[TestKind, str]) -> str:
    if isinstance(kind, TestKind):
        return kind.variant
    name = str(kind)
    aliases = {
        CUSUM.variant: CUSUM.variant,
        MEDIAN.variant: MEDIAN.variant,
        HODGES_LEHMANN.variant: HODGES_LEHMANN.variant,
    }
    if name not in aliases:
        raise ValueError(f"unknown test kind {name!r}")
    return name


def _true_lrv_detail(
    marginal: MarginalDist, dependence: DependenceSpec, kind: Union[TestKind, str]
) -> Tuple[Optional[float], Optional[str]]:
    name = _kind_name(kind)
    if isinstance(kind, TestKind) and kind.variant == "uquantile":
        return None, "no closed form for general pair kernels"
    phi = dependence.phi if dependence.variant == "ar1" else 0.0
    dependent = dependence.variant == "ar1"

    if marginal.variant == "exponential":
        if dependent:
            return None, "no closed form for dependent exponential margins"
        lam2 = marginal.lam * marginal.lam
        if name in (CUSUM.variant, MEDIAN.variant):
            return 1.0 / lam2, None
        h = exp_hl_location()
        two_h = 2.0 * h
        return (3.0 - (two_h - 1.0) ** 2) / (two_h * two_h) / lam2, None

    if name == CUSUM.variant:
        if marginal.variant == "normal":
            return (1.0 + phi) / (1.0 - phi), None
        if dependent:
            return None, "no closed form for dependent t margins"
        if marginal.nu <= 2.0:
            return None, "infinite variance"
        g = marginal.gamma
        return g * g * marginal.nu / (marginal.nu - 2.0), None

    if name == HODGES_LEHMANN.variant:
        series = _arcsin_series(phi, halved=True)
        if marginal.variant == "normal":
            g, mass = 1.0, _NORMAL_PAIR_MASS
        else:
            g, mass = marginal.gamma, _pair_density_mass(marginal.nu)
        return (g / mass) ** 2 * (1.0 / 3.0 + 4.0 / math.pi * series), None

    series = _arcsin_series(phi, halved=False)
    if marginal.variant == "normal":
        g, f0 = 1.0, 1.0 / math.sqrt(2.0 * math.pi)
    else:
        g, f0 = marginal.gamma, t_density(marginal.nu, 0.0)
    return (g / f0) ** 2 * (0.25 + series / math.pi), None


def true_lrv(
    marginal: MarginalDist, dependence: DependenceSpec, kind: Union[TestKind, str]
) -> Optional[float]:
    """Population long-run variance for a covered design, else None."""
    return _true_lrv_detail(marginal, dependence, kind)[0]


def lrv_unavailable_reason(
    marginal: MarginalDist, dependence: DependenceSpec, kind: Union[TestKind, str]
) -> Optional[str]:
    """Why ``true_lrv`` has no value for this design (None when it does)."""
    return _true_lrv_detail(marginal, dependence, kind)[1]
