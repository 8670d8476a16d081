"""Compare the compiled selection/counting kernels against the NumPy fallback.

Runs every workload twice — once with the default (compiled, when built)
backend and once with ``UQCPT_BACKEND=python`` — in separate interpreter
processes, since the backend is chosen at import time.  Prints a table of
per-call times and the speedup ratio, and cross-checks that both backends
return identical numbers for the same seeded inputs.

Usage::

    python3 benchmarks/bench_backends.py            # full comparison
    python3 benchmarks/bench_backends.py --reps 5   # quicker, noisier
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

TARGET_SECONDS = 0.4  # rough per-workload budget when auto-sizing rep counts


def _workloads():
    from uqcpt import (
        CUSUM,
        HL_SPEC,
        HODGES_LEHMANN,
        MEDIAN,
        LrvConfig,
        lrv_hl,
        prefix_u_quantiles,
        run_test,
    )

    rng = np.random.default_rng(1234)
    y240 = rng.standard_normal(240)
    y960 = rng.standard_normal(960)
    y2000 = rng.standard_normal(2000)
    full = LrvConfig()
    known = LrvConfig.known(1.0)

    return [
        ("hl test, full lrv, n=240", lambda: run_test(y240, HODGES_LEHMANN, full)),
        ("median test, full lrv, n=240", lambda: run_test(y240, MEDIAN, full)),
        ("cusum test, full lrv, n=240", lambda: run_test(y240, CUSUM, full)),
        ("prefix hl quantiles, n=960", lambda: prefix_u_quantiles(y960, HL_SPEC, 2)),
        ("hl lrv only, n=2000", lambda: lrv_hl(y2000)),
        ("hl test, known lrv, n=2000", lambda: run_test(y2000, HODGES_LEHMANN, known)),
    ]


def _fingerprint():
    """A few exact result values, for cross-backend agreement checking."""
    from uqcpt import HL_SPEC, HODGES_LEHMANN, LrvConfig, prefix_u_quantiles, run_test

    rng = np.random.default_rng(987)
    y = rng.standard_normal(300)
    result = run_test(y, HODGES_LEHMANN, LrvConfig())
    prefix = prefix_u_quantiles(y, HL_SPEC, 2)
    return {
        "statistic": result.statistic,
        "lrv": result.lrv_used,
        "changepoint": result.changepoint_k,
        "prefix_sum": float(np.sum(prefix)),
    }


def _run_worker(reps):
    import uqcpt

    report = {"backend": uqcpt.BACKEND, "results": [], "fingerprint": _fingerprint()}
    for name, call in _workloads():
        call()  # warm up
        start = time.perf_counter()
        call()
        once = time.perf_counter() - start
        n_reps = reps if reps else max(3, min(200, int(TARGET_SECONDS / max(once, 1e-9))))
        best = once
        for _ in range(n_reps):
            start = time.perf_counter()
            call()
            best = min(best, time.perf_counter() - start)
        report["results"].append({"name": name, "ms": best * 1e3})
    print(json.dumps(report))
    return 0


def _spawn(backend, reps):
    env = dict(os.environ)
    if backend == "python":
        env["UQCPT_BACKEND"] = "python"
    else:
        env.pop("UQCPT_BACKEND", None)
    argv = [sys.executable, os.path.abspath(__file__), "--worker"]
    if reps:
        argv += ["--reps", str(reps)]
    proc = subprocess.run(argv, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"worker for backend {backend!r} failed")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=0,
                        help="fixed repetitions per workload (default: auto)")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.worker:
        return _run_worker(args.reps)

    fast = _spawn("compiled", args.reps)
    slow = _spawn("python", args.reps)
    if fast["backend"] == slow["backend"]:
        print(f"note: compiled extension unavailable; both runs used the "
              f"{fast['backend']!r} backend")

    # Selection outputs must agree bitwise; the density-based numbers may
    # differ by a few ulp from differing accumulation order.
    mismatches = {}
    worst_rel = 0.0
    for key, a in fast["fingerprint"].items():
        b = slow["fingerprint"][key]
        if key in ("changepoint", "prefix_sum"):
            if a != b:
                mismatches[key] = (a, b)
        else:
            rel = abs(a - b) / max(abs(a), abs(b), 1e-300)
            worst_rel = max(worst_rel, rel)
            if rel > 1e-12:
                mismatches[key] = (a, b)
    agreement = (f"agree (worst relative gap {worst_rel:.1e})"
                 if not mismatches else f"MISMATCH: {mismatches}")

    width = max(len(r["name"]) for r in fast["results"])
    print(f"{'workload':<{width}}  {fast['backend']:>10}  {slow['backend']:>10}  "
          f"{'speedup':>8}")
    for a, b in zip(fast["results"], slow["results"]):
        ratio = b["ms"] / a["ms"] if a["ms"] > 0 else float("inf")
        print(f"{a['name']:<{width}}  {a['ms']:>8.2f}ms  {b['ms']:>8.2f}ms  "
              f"{ratio:>7.1f}x")
    print(f"\ncross-backend results: {agreement}")
    return 0 if not mismatches else 1


if __name__ == "__main__":
    raise SystemExit(main())
