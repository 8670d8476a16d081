"""The two computational backends must agree with a dense oracle and each other.

Counting, slicing, and rank selection are exact integer/selection work, so
those comparisons are bitwise.  The two Epanechnikov sums accumulate in
different orders (vectorized slices vs. a C loop), so they carry a tiny
relative tolerance.
"""

import numpy as np
import pytest

from uqcpt import _pyref

speedups = pytest.importorskip(
    "uqcpt._speedups", reason="compiled backend not built in this environment"
)

BACKENDS = [_pyref, speedups]
KINDS = [_pyref.KIND_AVG, _pyref.KIND_ABSDIFF]


def dense_pairs(xs, kind):
    out = []
    for j in range(1, xs.size):
        for i in range(j):
            if kind == _pyref.KIND_AVG:
                out.append((xs[i] + xs[j]) * 0.5)
            else:
                out.append(abs(xs[i] - xs[j]))
    return out


def sample_cases(seed=0, count=60):
    rng = np.random.default_rng(seed)
    cases = [
        np.array([0.0, 0.0]),
        np.array([1.0, 1.0, 1.0, 1.0]),
        np.array([-3.0, -1.0, 0.0, 2.0, 7.0]),
        np.array([1e15, 1e15 + 2.0, 1e15 + 4.0]),  # cancellation-heavy offsets
        np.array([-1e-12, 0.0, 1e-12, 5e-12]),
    ]
    for _ in range(count):
        n = int(rng.integers(2, 40))
        scale = float(rng.choice([1e-6, 1.0, 1e6]))
        x = rng.normal(size=n) * scale
        if rng.random() < 0.4:
            x = np.round(x, 2)  # force ties
        if rng.random() < 0.2:
            x = x + 1e9  # large common offset
        cases.append(x)
    return [np.sort(np.asarray(c, dtype=np.float64)) for c in cases]


def thresholds_for(xs, kind, rng):
    vals = dense_pairs(xs, kind)
    picks = [float(rng.choice(vals))]
    picks.append(float(np.nextafter(picks[0], -np.inf)))
    picks.append(float(np.nextafter(picks[0], np.inf)))
    picks.append(float(min(vals) - 1.0))
    picks.append(float(max(vals) + 1.0))
    picks.append(float(rng.normal() * (abs(np.mean(vals)) + 1.0)))
    return picks


def test_count_pairs_le_matches_dense_and_across_backends():
    rng = np.random.default_rng(1)
    for xs in sample_cases(seed=2):
        for kind in KINDS:
            vals = dense_pairs(xs, kind)
            for t in thresholds_for(xs, kind, rng):
                expect = sum(1 for v in vals if v <= t)
                for backend in BACKENDS:
                    assert backend.count_pairs_le(xs, t, kind) == expect


def test_pair_avg_le_counts_matches_dense_and_across_backends():
    rng = np.random.default_rng(3)
    for xs in sample_cases(seed=4, count=30):
        thr = float(rng.choice(xs)) if rng.random() < 0.5 else float(rng.normal())
        expect = [
            sum(1 for y in xs if (a + y) * 0.5 <= thr) for a in xs
        ]
        got_py = _pyref.pair_avg_le_counts(xs, thr)
        got_c = np.asarray(speedups.pair_avg_le_counts(xs, thr))
        assert got_py.tolist() == expect
        assert got_c.tolist() == expect


def test_pairs_in_range_matches_dense_multiset():
    rng = np.random.default_rng(5)
    for xs in sample_cases(seed=6, count=30):
        for kind in KINDS:
            vals = dense_pairs(xs, kind)
            svals = sorted(vals)
            a, b = sorted(rng.choice(svals, size=2).tolist())
            for lo, hi in [(a, b), (svals[0], svals[-1]), (a, a)]:
                expect = sorted(v for v in vals if lo < v <= hi)
                for backend in BACKENDS:
                    got = sorted(np.asarray(backend.pairs_in_range(xs, lo, hi, kind)).tolist())
                    assert got == expect


def test_epan_pair_sum_matches_dense_reference():
    rng = np.random.default_rng(7)
    for xs in sample_cases(seed=8, count=30):
        vals = dense_pairs(xs, _pyref.KIND_AVG)
        t = float(rng.choice(vals))
        for d in (1e-3, 0.5, 2.0, 1e4):
            dense = sum(
                0.75 * (1.0 - ((v - t) / d) ** 2)
                for v in vals
                if abs((v - t) / d) <= 1.0
            )
            for backend in BACKENDS:
                got = backend.epan_pair_sum(xs, t, d)
                assert got == pytest.approx(dense, rel=1e-12, abs=1e-12)


def test_epan_pair_sum_cut_exactly_on_pair_value():
    # engineer t - d to coincide exactly with an existing pair value
    xs = np.sort(np.array([0.0, 0.25, 0.5, 1.0, 1.75], dtype=np.float64))
    vals = dense_pairs(xs, _pyref.KIND_AVG)
    d = 0.25
    for v in vals:
        t = v + d  # then t - d == v exactly (dyadic values)
        assert t - d == v
        dense = sum(
            0.75 * (1.0 - ((w - t) / d) ** 2)
            for w in vals
            if abs((w - t) / d) <= 1.0
        )
        for backend in BACKENDS:
            assert backend.epan_pair_sum(xs, t, d) == pytest.approx(
                dense, rel=1e-13, abs=1e-13
            )


def test_epan_point_sum_matches_dense_reference():
    rng = np.random.default_rng(9)
    for xs in sample_cases(seed=10, count=30):
        x = float(rng.choice(xs))
        for d in (1e-3, 1.0, 50.0):
            dense = sum(
                0.75 * (1.0 - ((v - x) / d) ** 2)
                for v in xs
                if abs((v - x) / d) <= 1.0
            )
            for backend in BACKENDS:
                assert backend.epan_point_sum(xs, x, d) == pytest.approx(
                    dense, rel=1e-12, abs=1e-12
                )


def rank_select_case(rng, n):
    """Build a prefix-activation problem over pair averages of a random sample."""
    x = rng.normal(size=n)
    vals = []
    for s in range(1, n):
        for i in range(s):
            vals.append((x[i] + x[s]) * 0.5)
    vals = np.asarray(vals, dtype=np.float64)
    order = np.argsort(vals, kind="stable")
    svals = vals[order]
    slot_pos = np.empty(vals.size, dtype=np.int64)
    slot_pos[order] = np.arange(vals.size, dtype=np.int64)
    group_sizes = np.arange(n, dtype=np.int64)  # step s brings s new pairs
    group_ofs = np.concatenate(([0], np.cumsum(group_sizes)))
    ranks = np.zeros((n, 2), dtype=np.int64)
    for s in range(1, n):
        m = int(group_ofs[s + 1])
        ranks[s, 0] = int(rng.integers(1, m + 1))
        if rng.random() < 0.5:
            ranks[s, 1] = int(rng.integers(1, m + 1))
    return svals, slot_pos, group_ofs, ranks


def oracle_rank_select(svals, slot_pos, group_ofs, ranks):
    n_steps = group_ofs.size - 1
    out = np.full((n_steps, 2), np.nan)
    for s in range(n_steps):
        active = np.sort(slot_pos[: group_ofs[s + 1]])
        for q in range(2):
            r = ranks[s, q]
            if r > 0:
                out[s, q] = svals[active[r - 1]]
    return out


def test_offline_rank_select_matches_oracle_and_across_backends():
    rng = np.random.default_rng(11)
    for n in (2, 3, 7, 20, 60):
        svals, slot_pos, group_ofs, ranks = rank_select_case(rng, n)
        expect = oracle_rank_select(svals, slot_pos, group_ofs, ranks)
        for backend in BACKENDS:
            got = np.asarray(
                backend.offline_rank_select(svals, slot_pos, group_ofs, ranks)
            )
            assert got.shape == expect.shape
            same = (got == expect) | (np.isnan(got) & np.isnan(expect))
            assert same.all()


def test_rank_select_spans_bucket_boundaries():
    # more values than one bucket in either backend (shifts 10 and 11)
    rng = np.random.default_rng(13)
    n = 90  # 4005 pair values > 2048
    svals, slot_pos, group_ofs, ranks = rank_select_case(rng, n)
    expect = oracle_rank_select(svals, slot_pos, group_ofs, ranks)
    for backend in BACKENDS:
        got = np.asarray(backend.offline_rank_select(svals, slot_pos, group_ofs, ranks))
        same = (got == expect) | (np.isnan(got) & np.isnan(expect))
        assert same.all()


def test_backend_env_var_forces_python(tmp_path):
    import subprocess
    import sys

    code = "import uqcpt; print(uqcpt.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "UQCPT_BACKEND": "python"},
    )
    assert out.stdout.strip() == "python"
    out_default = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin"},
    )
    assert out_default.stdout.strip() in ("compiled", "python")


def test_selection_engine_results_identical_between_backends():
    # u_quantile and prefix paths give bitwise-equal results on both backends
    import subprocess
    import sys

    script = r"""
import numpy as np
import uqcpt
rng = np.random.default_rng(99)
x = rng.standard_normal(300)
vals = [
    uqcpt.u_quantile(x, uqcpt.UQuantileSpec("average", 0.37)),
    uqcpt.hodges_lehmann(x),
    float(uqcpt.prefix_u_quantiles(x, uqcpt.HL_SPEC, 2).sum()),
]
print(repr(vals), uqcpt.BACKEND)
"""
    runs = {}
    for forced in ("python", ""):
        env = {"PATH": "/usr/bin:/bin"}
        if forced:
            env["UQCPT_BACKEND"] = forced
        out = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr
        values, backend = out.stdout.strip().rsplit(" ", 1)
        runs[backend] = values
    if "compiled" in runs:
        assert runs["compiled"] == runs["python"]
