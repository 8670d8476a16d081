"""Command-line front end.

Four subcommands::

    uqcpt test   data.csv --test hl        run a change-point test on a CSV column
    uqcpt traj   data.csv --test hl        emit the studentized trajectory for plotting
    uqcpt sim    --preset table1           run a simulation grid, render + export results
    uqcpt refval --dist normal --dep iid --test hl   query population reference values

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
degeneracy (a variance estimate that does not exist for the input).

Input CSV: comma-separated, decimal point, one optional header row
(auto-detected: a first row with any non-numeric cell).  The first
numeric column is used unless ``--column`` names a header or gives a
0-based index.  Short series (n < 20) produce a warning on standard
error but are still processed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .cpt import (
    CUSUM,
    HODGES_LEHMANN,
    MEDIAN,
    TestKind,
    critical_value,
    run_test,
    trajectory,
)
from .dgp import (
    IID,
    NO_CHANGE,
    NORMAL,
    ChangeSpec,
    DependenceSpec,
    MarginalDist,
    ar1,
    exponential,
    location_jump,
    lrv_unavailable_reason,
    scale_change,
    scaled_t,
    true_lrv,
)
from .errors import DegenerateSampleError, InsufficientDataError, SingularDensityError
from .lrv import (
    BARTLETT,
    EPANECHNIKOV,
    MODE_FULL,
    MODE_KNOWN,
    MODE_MARGINAL,
    QUARTIC,
    LrvConfig,
)
from .sim import (
    DEFAULT_SEED,
    PRESET_NAMES,
    PlanRow,
    SimPlan,
    export_results,
    preset_plan,
    render_results,
    run_plan,
)

__all__ = ["CliConfig", "cmd_test", "cmd_traj", "cmd_sim", "cmd_refval", "main"]


class _UsageError(Exception):
    """Bad flags or flag combinations; exit code 1."""


class _DataError(Exception):
    """Unreadable or malformed input; exit code 2."""


_TEST_KINDS = {"cusum": CUSUM, "median": MEDIAN, "hl": HODGES_LEHMANN}
_WINDOWS = {"quartic": QUARTIC, "bartlett": BARTLETT}
_KERNELS = {"epanechnikov": EPANECHNIKOV}
_MODES = (MODE_KNOWN, MODE_MARGINAL, MODE_FULL)
_SHORT_SERIES = 20


@dataclass(frozen=True)
class CliConfig:
    """Validated flag set for one subcommand invocation."""

    subcommand: str
    input: Optional[str] = None
    test: Optional[str] = None
    lrv_mode: str = MODE_FULL
    sigma2: Optional[float] = None
    d: Optional[float] = None
    b: Optional[float] = None
    kernel: str = "epanechnikov"
    window: str = "quartic"
    k_min: Optional[int] = None
    alpha: float = 0.05
    output: Optional[str] = None
    seed: int = DEFAULT_SEED
    column: Optional[str] = None
    year_column: Optional[str] = None
    qq: Optional[str] = None
    preset: Optional[str] = None
    plan: Optional[str] = None
    replications: int = 1000
    n: int = 240
    jobs: Optional[int] = None
    dist: Optional[str] = None
    dep: Optional[str] = None
    phi: Optional[float] = None
    crit: Optional[float] = None


# ---------------------------------------------------------------------------
# flag parsing and validation


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="uqcpt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_series_flags(p, with_alpha):
        p.add_argument("input", help="CSV file with the series to analyse")
        p.add_argument("--test", required=True, choices=sorted(_TEST_KINDS),
                       help="which change-point statistic to use")
        p.add_argument("--lrv", default=MODE_FULL, choices=_MODES, dest="lrv_mode",
                       help="long-run variance mode (default full)")
        p.add_argument("--sigma2", type=float,
                       help="population variance for --lrv known")
        p.add_argument("--d", type=float, help="density bandwidth override")
        p.add_argument("--b", type=float,
                       help="autocovariance truncation lag override "
                            "(default 2 n^{1/3}; pass n^{1/3} to halve it)")
        p.add_argument("--kernel", default="epanechnikov", choices=sorted(_KERNELS),
                       help="density kernel")
        p.add_argument("--window", default="quartic", choices=sorted(_WINDOWS),
                       help="autocovariance weight window")
        p.add_argument("--k-min", type=int, dest="k_min",
                       help="first prefix length kept in the trajectory")
        p.add_argument("--column", help="column to analyse (header name or 0-based index)")
        p.add_argument("--output", help="write results to this file")
        if with_alpha:
            p.add_argument("--alpha", type=float, default=0.05,
                           help="rejection level (default 0.05)")

    p_test = sub.add_parser("test", help="run a change-point test on a CSV series")
    add_series_flags(p_test, with_alpha=True)
    p_test.add_argument("--year-column",
                        help="column whose value labels the estimated change point")

    p_traj = sub.add_parser("traj", help="emit the studentized trajectory as CSV")
    add_series_flags(p_traj, with_alpha=False)
    p_traj.add_argument("--qq", metavar="FILE",
                        help="also write (sorted value, normal quantile) pairs here")

    p_sim = sub.add_parser("sim", help="run a simulation preset or plan file")
    p_sim.add_argument("--preset", choices=PRESET_NAMES,
                       help="one of the built-in grids")
    p_sim.add_argument("--plan", help="JSON plan file (alternative to --preset)")
    p_sim.add_argument("--replications", "-R", type=int, default=1000,
                       help="replications per design row (default 1000)")
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"master seed (default {DEFAULT_SEED})")
    p_sim.add_argument("--n", type=int, default=240,
                       help="sample size for preset rows (default 240)")
    p_sim.add_argument("--k-min", type=int, dest="k_min",
                       help="override the per-test default minimum prefix")
    p_sim.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p_sim.add_argument("--output", help="write full-precision results CSV here")

    p_ref = sub.add_parser("refval", help="print population reference values")
    p_ref.add_argument("--dist", help="marginal: normal, t<nu> (e.g. t3), exp<lambda>")
    p_ref.add_argument("--dep", choices=("iid", "ar1"), help="dependence structure")
    p_ref.add_argument("--phi", type=float, help="AR(1) coefficient for --dep ar1")
    p_ref.add_argument("--test", choices=sorted(_TEST_KINDS),
                       help="which statistic's variance to report")
    p_ref.add_argument("--crit", type=float, metavar="ALPHA",
                       help="print the limit critical value for this level instead")

    return parser


def _config_from_namespace(ns: argparse.Namespace) -> CliConfig:
    fields = {k: v for k, v in vars(ns).items() if k in CliConfig.__dataclass_fields__}
    config = CliConfig(**fields)
    _validate(config)
    return config


def _validate(config: CliConfig) -> None:
    if config.subcommand in ("test", "traj"):
        if config.lrv_mode == MODE_KNOWN:
            if config.sigma2 is None:
                raise _UsageError("--lrv known requires --sigma2")
            if not (math.isfinite(config.sigma2) and config.sigma2 > 0):
                raise _UsageError("--sigma2 must be a positive finite number")
        elif config.sigma2 is not None:
            raise _UsageError("--sigma2 only applies with --lrv known")
        for name, value in (("--d", config.d), ("--b", config.b)):
            if value is not None and not (math.isfinite(value) and value > 0):
                raise _UsageError(f"{name} must be a positive finite number")
        if config.k_min is not None and config.k_min < 1:
            raise _UsageError("--k-min must be >= 1")
        if not (0.0 < config.alpha < 1.0):
            raise _UsageError("--alpha must lie strictly between 0 and 1")
    elif config.subcommand == "sim":
        if (config.preset is None) == (config.plan is None):
            raise _UsageError("give exactly one of --preset or --plan")
        if config.replications < 1:
            raise _UsageError("--replications must be >= 1")
        if config.n < 2:
            raise _UsageError("--n must be >= 2")
        if config.k_min is not None and config.k_min < 1:
            raise _UsageError("--k-min must be >= 1")
        if config.jobs is not None and config.jobs < 1:
            raise _UsageError("--jobs must be >= 1")
        if config.seed < 0:
            raise _UsageError("--seed must be non-negative")
    elif config.subcommand == "refval":
        if config.crit is not None:
            if any(v is not None for v in (config.dist, config.dep, config.test, config.phi)):
                raise _UsageError("--crit does not combine with --dist/--dep/--test/--phi")
            if not (0.0 < config.crit < 1.0):
                raise _UsageError("--crit level must lie strictly between 0 and 1")
            return
        if config.dist is None or config.dep is None or config.test is None:
            raise _UsageError("refval needs --crit, or all of --dist, --dep, --test")
        if config.dep == "ar1":
            if config.phi is None:
                raise _UsageError("--dep ar1 requires --phi")
            if not (math.isfinite(config.phi) and abs(config.phi) < 1):
                raise _UsageError("--phi must satisfy |phi| < 1")
        elif config.phi is not None:
            raise _UsageError("--phi only applies with --dep ar1")


_DIST_PATTERN = re.compile(r"^(normal|t(?P<nu>[0-9.]+)|exp(?P<lam>[0-9.]+))$")


def _parse_dist(text: str) -> MarginalDist:
    m = _DIST_PATTERN.match(text.strip())
    if not m:
        raise _UsageError(
            f"unknown distribution {text!r}; expected normal, t<nu>, or exp<lambda>"
        )
    if m.group("nu") is not None:
        return scaled_t(float(m.group("nu")))
    if m.group("lam") is not None:
        return exponential(float(m.group("lam")))
    return NORMAL


def _lrv_config(config: CliConfig) -> LrvConfig:
    if config.lrv_mode == MODE_KNOWN:
        return LrvConfig.known(config.sigma2)
    return LrvConfig(
        mode=config.lrv_mode,
        density_kernel=_KERNELS[config.kernel],
        hac_window=_WINDOWS[config.window],
        d=config.d,
        b=config.b,
    )


# ---------------------------------------------------------------------------
# CSV input


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _load_rows(path: str) -> tuple[Optional[list], list]:
    """(header or None, data rows); blank lines are skipped."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    except OSError as exc:
        raise _DataError(f"cannot read input file {path}: {exc}") from exc
    if not rows:
        raise _DataError(f"input file {path} contains no data")
    first = [c.strip() for c in rows[0]]
    if any(c and not _is_number(c) for c in first):
        if len(rows) == 1:
            raise _DataError(f"input file {path} has a header but no data rows")
        return rows[0], rows[1:]
    return None, rows


def _resolve_column(
    header: Optional[list], data: list, requested: Optional[str], path: str
) -> int:
    width = max(len(row) for row in data)
    if requested is not None:
        name = requested.strip()
        if header is not None:
            stripped = [c.strip() for c in header]
            if name in stripped:
                return stripped.index(name)
        if re.fullmatch(r"\d+", name):
            idx = int(name)
            if idx >= width:
                raise _DataError(
                    f"column index {idx} out of range for {path} (width {width})"
                )
            return idx
        raise _DataError(f"column {name!r} not found in {path}")
    for j, cell in enumerate(data[0]):
        if _is_number(cell.strip()):
            return j
    raise _DataError(f"no numeric column found in {path}")


def _extract_numeric(data: list, idx: int, path: str) -> np.ndarray:
    values = []
    for i, row in enumerate(data):
        cell = row[idx].strip() if idx < len(row) else ""
        if not _is_number(cell):
            raise _DataError(
                f"non-numeric value {cell!r} in {path}, data row {i + 1}, column {idx}"
            )
        values.append(float(cell))
    return np.asarray(values, dtype=np.float64)


def _extract_labels(data: list, idx: int) -> list:
    return [row[idx].strip() if idx < len(row) else "" for row in data]


def _read_series(config: CliConfig) -> tuple[np.ndarray, Optional[list]]:
    header, data = _load_rows(config.input)
    idx = _resolve_column(header, data, config.column, config.input)
    series = _extract_numeric(data, idx, config.input)
    labels = None
    if config.subcommand == "test" and config.year_column is not None:
        lab_idx = _resolve_column(header, data, config.year_column, config.input)
        labels = _extract_labels(data, lab_idx)
    if series.size < 2:
        raise _DataError(f"need at least 2 observations, found {series.size}")
    if series.size < _SHORT_SERIES:
        print(
            f"warning: only n={series.size} observations; "
            "the asymptotic approximation may be unreliable",
            file=sys.stderr,
        )
    return series, labels


def _effective_k_min(config: CliConfig, kind: TestKind, n: int) -> int:
    k_min = config.k_min if config.k_min is not None else kind.default_k_min
    if kind.pairwise:
        k_min = max(2, k_min)
    if k_min > n:
        raise _DataError(f"k_min={k_min} exceeds the series length n={n}")
    return k_min


# ---------------------------------------------------------------------------
# subcommands


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _write_report(path: str, record: dict) -> None:
    try:
        with open(path, "w") as fh:
            if path.endswith(".json"):
                json.dump(record, fh, indent=2)
                fh.write("\n")
            else:
                for key, value in record.items():
                    out = repr(float(value)) if isinstance(value, float) else str(value)
                    fh.write(f"{key}={out}\n")
    except OSError as exc:
        raise _DataError(f"cannot write report to {path}: {exc}") from exc


def cmd_test(config: CliConfig) -> int:
    series, labels = _read_series(config)
    kind = _TEST_KINDS[config.test]
    k_min = _effective_k_min(config, kind, series.size)
    result = run_test(series, kind, _lrv_config(config), k_min=k_min)
    crit = critical_value(config.alpha)
    reject = result.statistic > crit

    record = {
        "input": config.input,
        "n": int(series.size),
        "test": config.test,
        "lrv_mode": config.lrv_mode,
        "k_min": k_min,
        "lrv": result.lrv_used,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "changepoint_index": result.changepoint_k,
        "alpha": config.alpha,
        "critical_value": crit,
        "reject": bool(reject),
    }
    if labels is not None:
        record["changepoint_label"] = labels[result.changepoint_k - 1]

    print(f"n: {record['n']}")
    print(f"test: {record['test']}  (lrv mode: {record['lrv_mode']}, k_min: {k_min})")
    print(f"lrv estimate: {_fmt(result.lrv_used)}")
    print(f"statistic: {_fmt(result.statistic)}")
    print(f"p-value: {_fmt(result.p_value)}")
    print(f"changepoint index: {result.changepoint_k} (1-based)")
    if labels is not None:
        print(f"changepoint label: {record['changepoint_label']}")
    print(
        f"reject at level {config.alpha:g}: {'yes' if reject else 'no'} "
        f"(critical value {_fmt(crit)})"
    )
    if config.output:
        _write_report(config.output, record)
    return 0


def cmd_traj(config: CliConfig) -> int:
    series, _ = _read_series(config)
    kind = _TEST_KINDS[config.test]
    k_min = _effective_k_min(config, kind, series.size)
    path = trajectory(series, kind, _lrv_config(config), k_min=k_min)

    lines = ["k,value"]
    for offset, value in enumerate(path):
        lines.append(f"{k_min + offset},{float(value)!r}")
    body = "\n".join(lines) + "\n"
    if config.output:
        try:
            with open(config.output, "w") as fh:
                fh.write(body)
        except OSError as exc:
            raise _DataError(f"cannot write trajectory to {config.output}: {exc}") from exc
    else:
        sys.stdout.write(body)

    if config.qq:
        ordered = np.sort(series)
        grid = ndtri((np.arange(1, series.size + 1) - 0.5) / series.size)
        try:
            with open(config.qq, "w") as fh:
                fh.write("value,normal_quantile\n")
                for v, q in zip(ordered, grid):
                    fh.write(f"{float(v)!r},{float(q)!r}\n")
        except OSError as exc:
            raise _DataError(f"cannot write quantile pairs to {config.qq}: {exc}") from exc
    return 0


def _plan_from_json(path: str) -> SimPlan:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _DataError(f"cannot read plan file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _DataError(f"plan file {path} is not valid JSON: {exc}") from exc

    def parse_marginal(label: str) -> MarginalDist:
        try:
            return _parse_dist(label)
        except _UsageError as exc:
            raise _DataError(f"plan file {path}: {exc}") from exc

    def parse_dependence(label: str) -> DependenceSpec:
        label = label.strip()
        if label == "iid":
            return IID
        m = re.fullmatch(r"ar1\(([-+0-9.eE]+)\)", label)
        if m:
            return ar1(float(m.group(1)))
        raise _DataError(
            f"plan file {path}: unknown dependence {label!r}; use iid or ar1(<phi>)"
        )

    def parse_change(obj) -> ChangeSpec:
        if obj is None or obj == {} or obj.get("variant") == "none":
            return NO_CHANGE
        variant = obj.get("variant")
        if variant == "location":
            return location_jump(float(obj["mu"]), float(obj["theta"]))
        if variant == "scale":
            return scale_change(float(obj["lambda2"]), float(obj["theta"]))
        raise _DataError(
            f"plan file {path}: unknown change variant {variant!r}"
        )

    try:
        rows = tuple(
            PlanRow(
                table=str(row.get("table", "plan")),
                marginal=parse_marginal(row["marginal"]),
                dependence=parse_dependence(row["dependence"]),
                change=parse_change(row.get("change")),
                n=int(row["n"]),
            )
            for row in raw["rows"]
        )
        tests = tuple(_TEST_KINDS[name] for name in raw["tests"])
        plan = SimPlan(
            rows=rows,
            tests=tests,
            modes=tuple(raw["modes"]),
            replications=int(raw.get("replications", 1000)),
            seed=int(raw.get("seed", DEFAULT_SEED)),
            alpha=float(raw.get("alpha", 0.05)),
            k_min=None if raw.get("k_min") is None else int(raw["k_min"]),
        )
    except _DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise _DataError(f"plan file {path} is invalid: {exc}") from exc
    return plan


def cmd_sim(config: CliConfig) -> int:
    if config.preset is not None:
        plan = preset_plan(
            config.preset,
            replications=config.replications,
            seed=config.seed,
            n=config.n,
            k_min=config.k_min,
        )
    else:
        plan = _plan_from_json(config.plan)
    results = run_plan(plan, jobs=config.jobs)
    if config.output:
        export_results(results, config.output)
    sys.stdout.write(render_results(results))
    return 0


def cmd_refval(config: CliConfig) -> int:
    if config.crit is not None:
        print(f"{critical_value(config.crit):.4f}")
        return 0
    marginal = _parse_dist(config.dist)
    dependence = IID if config.dep == "iid" else ar1(config.phi)
    kind = _TEST_KINDS[config.test]
    reason = lrv_unavailable_reason(marginal, dependence, kind)
    if reason is not None:
        print(f"unavailable: {reason}")
        return 0
    print(f"{true_lrv(marginal, dependence, kind):.6f}")
    return 0


_DISPATCH = {"test": cmd_test, "traj": cmd_traj, "sim": cmd_sim, "refval": cmd_refval}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        config = _config_from_namespace(ns)
        return _DISPATCH[config.subcommand](config)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (_DataError, InsufficientDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateSampleError, SingularDensityError) as exc:
        print(
            f"numerical degeneracy: {exc} "
            "(for a constant or near-constant series, supply --lrv known --sigma2 <v>)",
            file=sys.stderr,
        )
        return 3


if __name__ == "__main__":
    sys.exit(main())
