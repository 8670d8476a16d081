"""Long-run variance machinery against direct-formula oracles and pinned values."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import oracles
from uqcpt.core import UQuantileSpec, u_quantile
from uqcpt.errors import DegenerateSampleError, SingularDensityError
from uqcpt.lrv import (
    BARTLETT,
    EPANECHNIKOV,
    EPS_DENSITY,
    MODE_FULL,
    MODE_KNOWN,
    MODE_MARGINAL,
    QUARTIC,
    LrvConfig,
    autocov_h1,
    kde,
    lrv_cusum,
    lrv_hl,
    lrv_median,
    lrv_uquantile,
    psi_hat,
    u_density_estimate,
)

AVG = UQuantileSpec("average", 0.5)
ABSDIFF = UQuantileSpec("absdiff", 0.25)

MARGINAL = LrvConfig(mode=MODE_MARGINAL)
FULL = LrvConfig(mode=MODE_FULL)


def rng_samples(count, lo=8, hi=30, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(lo, hi + 1))
        x = rng.normal(size=n) * float(rng.choice([0.1, 1.0, 10.0]))
        if rng.random() < 0.25:
            x = np.round(x * 4) / 4
        out.append(x)
    return out


# ---------------------------------------------------------------------------
# pinned examples


def test_lrv_cusum_alternating_marginal_is_unit():
    assert lrv_cusum([1.0, -1.0, 1.0, -1.0], MARGINAL) == 1.0


def test_u_density_two_point_example():
    assert u_density_estimate([0, 1], AVG, 0.5, EPANECHNIKOV, 1.0) == 0.75


def test_u_density_outside_support_is_zero():
    assert u_density_estimate([0, 1], AVG, 2.0, EPANECHNIKOV, 1.0) == 0.0


def test_kde_single_point_example():
    assert kde([0.0], 0.0, EPANECHNIKOV, 1.0) == 0.75
    assert kde([0.0], 5.0, EPANECHNIKOV, 1.0) == 0.0


def test_psi_hat_extremes():
    x = [1.0, 2.0, 3.0]
    assert psi_hat(x, 100.0, -1e9) == -0.5
    assert psi_hat(x, -100.0, 1e9) == 0.5


def test_autocov_lag_zero_nonnegative():
    for x in rng_samples(10, seed=1):
        t = u_quantile(x, AVG)
        assert autocov_h1(x, AVG, t, 0) >= 0.0


def test_autocov_lag_validation():
    with pytest.raises(ValueError):
        autocov_h1([1.0, 2.0, 3.0], AVG, 1.5, 3)
    with pytest.raises(ValueError):
        autocov_h1([1.0, 2.0, 3.0], AVG, 1.5, -1)


# ---------------------------------------------------------------------------
# oracle equivalence


def test_u_density_matches_dense_oracle():
    rng = np.random.default_rng(2)
    for x in rng_samples(25, seed=3):
        for spec, func in ((AVG, oracles.pair_avg), (ABSDIFF, oracles.pair_absdiff)):
            t = float(rng.choice(oracles.pair_values(x, func)))
            for d in (0.05, 0.7, 5.0):
                got = u_density_estimate(x, spec, t, EPANECHNIKOV, d)
                expect = oracles.u_density(x, func, t, oracles.epanechnikov, d)
                assert got == pytest.approx(expect, abs=1e-12)


def test_kde_matches_dense_oracle():
    rng = np.random.default_rng(4)
    for x in rng_samples(25, seed=5):
        pt = float(rng.choice(x))
        for d in (0.1, 1.0):
            got = kde(x, pt, EPANECHNIKOV, d)
            expect = oracles.point_density(x, pt, oracles.epanechnikov, d)
            assert got == pytest.approx(expect, abs=1e-12)


def test_psi_hat_matches_oracle():
    rng = np.random.default_rng(6)
    for x in rng_samples(25, seed=7):
        pt = float(rng.choice(x))
        h = float(rng.choice(oracles.pair_values(x, oracles.pair_avg)))
        assert psi_hat(x, pt, h) == oracles.psi(x, pt, h)


def test_autocov_matches_oracle():
    rng = np.random.default_rng(8)
    for x in rng_samples(20, lo=6, hi=20, seed=9):
        for spec, func in ((AVG, oracles.pair_avg), (ABSDIFF, oracles.pair_absdiff)):
            t = float(rng.choice(oracles.pair_values(x, func)))
            for r in (0, 1, len(x) // 2, len(x) - 1):
                got = autocov_h1(x, spec, t, r)
                assert got == pytest.approx(oracles.autocov(x, func, t, r), abs=1e-12)


def test_lrv_cusum_matches_oracle():
    for x in rng_samples(20, seed=10):
        for mode, config in (("marginal", MARGINAL), ("full", FULL)):
            got = lrv_cusum(x, config)
            assert got == pytest.approx(oracles.lrv_cusum(x, mode), abs=1e-10)


def test_lrv_median_matches_oracle():
    for x in rng_samples(20, seed=11):
        for mode, config in (("marginal", MARGINAL), ("full", FULL)):
            got = lrv_median(x, config)
            assert got == pytest.approx(oracles.lrv_median(x, mode), rel=1e-10)


def test_lrv_hl_matches_oracle():
    for x in rng_samples(20, seed=12):
        for mode, config in (("marginal", MARGINAL), ("full", FULL)):
            got = lrv_hl(x, config)
            assert got == pytest.approx(oracles.lrv_hl(x, mode), rel=1e-10)


def test_lrv_uquantile_matches_oracle_both_kernels():
    for x in rng_samples(16, seed=13):
        for spec, func in ((AVG, oracles.pair_avg), (ABSDIFF, oracles.pair_absdiff)):
            for mode, config in (("marginal", MARGINAL), ("full", FULL)):
                expect = oracles.lrv_uquantile(x, func, spec.p, mode)
                try:
                    got = lrv_uquantile(x, spec, config)
                except DegenerateSampleError:
                    # an all-zero projection series (heavy ties) has no
                    # positive variance; the oracle must agree it is zero
                    assert expect == pytest.approx(0.0, abs=1e-12)
                    continue
                assert got == pytest.approx(expect, rel=1e-10)


def test_bartlett_window_route_matches_oracle():
    config = LrvConfig(mode=MODE_FULL, hac_window=BARTLETT)
    for x in rng_samples(10, seed=14):
        got = lrv_cusum(x, config)
        expect = oracles.lrv_cusum(x, "full", window=oracles.bartlett)
        assert got == pytest.approx(expect, abs=1e-10)


def test_explicit_bandwidth_overrides_match_oracle():
    x = rng_samples(1, lo=25, hi=25, seed=15)[0]
    n = len(x)
    b_small = n ** (1.0 / 3.0)
    got = lrv_hl(x, LrvConfig(mode=MODE_FULL, b=b_small, d=0.4))
    expect = oracles.lrv_hl(x, "full", b=b_small, d=0.4)
    assert got == pytest.approx(expect, rel=1e-10)
    # callable rules resolve against n
    got_callable = lrv_hl(
        x, LrvConfig(mode=MODE_FULL, b=lambda m: m ** (1.0 / 3.0), d=lambda m: 0.4)
    )
    assert got_callable == got


# ---------------------------------------------------------------------------
# structural properties


def test_negative_hac_sum_falls_back_to_lag_zero():
    x = np.tile([5.0, -5.0], 32)  # strong negative serial correlation
    b = 2.0
    config = LrvConfig(mode=MODE_FULL, b=b)
    n = x.size
    v = x - x.mean()
    total = float(v @ v / n)
    for r in range(1, n):
        u = r / b
        if u > 1.0:
            break
        w = (1.0 - u * u) ** 2
        total += 2.0 * w * float(v[: n - r] @ v[r:] / n)
    assert total < 0.0  # the unclamped sum really is negative here
    assert lrv_cusum(x, config) == lrv_cusum(x, MARGINAL) == 25.0


def test_marginal_equals_full_when_bandwidth_tiny():
    tiny = LrvConfig(mode=MODE_FULL, b=1e-9)
    for x in rng_samples(8, seed=16):
        assert lrv_cusum(x, tiny) == lrv_cusum(x, MARGINAL)
        assert lrv_median(x, tiny) == lrv_median(x, MARGINAL)
        assert lrv_hl(x, tiny) == lrv_hl(x, MARGINAL)
        assert lrv_uquantile(x, ABSDIFF, tiny) == lrv_uquantile(x, ABSDIFF, MARGINAL)


def test_lrv_hl_location_invariant_exactly_on_dyadic_data():
    rng = np.random.default_rng(17)
    x = np.round(rng.normal(size=40) * 64) / 64
    for config in (MARGINAL, FULL):
        base = lrv_hl(x, config)
        assert lrv_hl(x + 17.0, config) == base
        assert lrv_hl(x - 9.0, config) == base


def test_lrv_cusum_scale_equivariance_power_of_two():
    rng = np.random.default_rng(18)
    x = rng.normal(size=50)
    for config in (MARGINAL, FULL):
        assert lrv_cusum(4.0 * x, config) == 16.0 * lrv_cusum(x, config)


def test_u_density_integrates_to_one():
    rng = np.random.default_rng(19)
    x = rng.normal(size=40)
    vals = oracles.pair_values(x, oracles.pair_avg)
    d = 0.4
    grid = np.linspace(min(vals) - d, max(vals) + d, 4001)
    dens = [u_density_estimate(x, AVG, float(t), EPANECHNIKOV, d) for t in grid]
    integral = np.trapezoid(dens, grid)
    assert integral == pytest.approx(1.0, abs=1e-3)


def test_density_kernel_integrates_to_one():
    val, err = quad(lambda u: EPANECHNIKOV.evaluate(u), -1, 1)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_window_values_at_origin():
    assert QUARTIC.evaluate(0.0) == 1.0
    assert BARTLETT.evaluate(0.0) == 1.0
    assert QUARTIC.evaluate(2.0) == 0.0
    assert BARTLETT.evaluate(-2.0) == 0.0


def test_hl_variance_estimate_tightens_with_sample_size():
    target = math.pi / 3.0
    errors = []
    for n in (500, 2000, 8000):
        rng = np.random.default_rng(20)
        x = rng.standard_normal(n)
        errors.append(abs(lrv_hl(x, FULL) - target))
    assert errors[2] < errors[0]
    assert errors[2] < 0.1


# ---------------------------------------------------------------------------
# error paths and validation


def test_constant_sample_raises_degenerate():
    x = [3.0] * 12
    for fn in (lrv_cusum, lrv_median, lrv_hl):
        with pytest.raises(DegenerateSampleError):
            fn(x, FULL)
    with pytest.raises(DegenerateSampleError):
        lrv_uquantile(x, AVG, FULL)


def test_known_mode_rejected_by_estimators():
    known = LrvConfig.known(1.0)
    x = list(np.random.default_rng(21).normal(size=12))
    for fn in (lrv_cusum, lrv_median, lrv_hl):
        with pytest.raises(ValueError):
            fn(x, known)
    with pytest.raises(ValueError):
        lrv_uquantile(x, AVG, known)


def test_huge_bandwidth_triggers_singular_density():
    x = list(np.random.default_rng(22).normal(size=30))
    flooded = LrvConfig(mode=MODE_FULL, d=1e12)
    with pytest.raises(SingularDensityError):
        lrv_hl(x, flooded)
    with pytest.raises(SingularDensityError):
        lrv_median(x, flooded)
    with pytest.raises(SingularDensityError):
        lrv_uquantile(x, ABSDIFF, flooded)


def test_config_validation():
    with pytest.raises(ValueError):
        LrvConfig(mode="bogus")
    with pytest.raises(ValueError):
        LrvConfig(mode=MODE_KNOWN)  # sigma2 missing
    with pytest.raises(ValueError):
        LrvConfig(mode=MODE_KNOWN, sigma2=-1.0)
    with pytest.raises(ValueError):
        LrvConfig(mode=MODE_FULL, sigma2=2.0)  # sigma2 without known
    assert LrvConfig.known(2.5).sigma2 == 2.5


def test_invalid_bandwidths_rejected():
    x = list(np.random.default_rng(23).normal(size=15))
    with pytest.raises(ValueError):
        lrv_cusum(x, LrvConfig(mode=MODE_FULL, b=-1.0))
    with pytest.raises(ValueError):
        lrv_hl(x, LrvConfig(mode=MODE_FULL, d=0.0))
    with pytest.raises(ValueError):
        u_density_estimate(x, AVG, 0.0, EPANECHNIKOV, -0.5)
    with pytest.raises(ValueError):
        kde(x, 0.0, EPANECHNIKOV, float("nan"))


def test_eps_density_floor_value():
    assert EPS_DENSITY == 1e-8
