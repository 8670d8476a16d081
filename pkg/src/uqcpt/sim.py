"""Monte Carlo harness: rejection frequencies over configurable designs.

A plan is a grid of data-generating rows crossed with test kinds and
variance modes.  Each replication draws ONE sample per row and evaluates
every (test, mode) cell on that same sample — the paired design removes
sampling noise from comparisons between tests.  The per-test numerator
(the max absolute unstudentized path value) is computed once per sample
and shared by the modes, which only differ in the variance they divide by.

Seeding: row r of a plan with master seed s uses row seed s + r, and
replication j of that row derives its generator from the pair (s + r, j).
Counts are therefore identical however replications are chunked across
processes.

``known`` cells require a population long-run variance; combinations
without one (and scale-change rows with a factor other than 1, where no
single population value applies) are reported as skipped, never as
failures.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .cpt import (
    CUSUM,
    HODGES_LEHMANN,
    MEDIAN,
    TestKind,
    _variance,
    critical_value,
    trajectory,
)
from .dgp import (
    IID,
    NO_CHANGE,
    NORMAL,
    ChangeSpec,
    DependenceSpec,
    DgpSpec,
    MarginalDist,
    ar1,
    exponential,
    generate,
    location_jump,
    lrv_unavailable_reason,
    scale_change,
    scaled_t,
    true_lrv,
)
from .errors import DegenerateSampleError, SingularDensityError
from .lrv import MODE_FULL, MODE_KNOWN, MODE_MARGINAL, LrvConfig

__all__ = [
    "PlanRow",
    "SimPlan",
    "CellResult",
    "run_plan",
    "export_results",
    "import_results",
    "render_results",
    "preset_plan",
    "PRESET_NAMES",
    "DEFAULT_SEED",
    "CSV_COLUMNS",
]

DEFAULT_SEED = 12345

CSV_COLUMNS = (
    "table",
    "marginal",
    "dependence",
    "theta",
    "mu_or_lambda2",
    "test",
    "lrv_mode",
    "n",
    "R",
    "reject_rate",
    "std_err",
    "seed",
)

_KNOWN_UNIT = LrvConfig.known(1.0)
_ESTIMATION_CONFIGS = {
    MODE_MARGINAL: LrvConfig(mode=MODE_MARGINAL),
    MODE_FULL: LrvConfig(mode=MODE_FULL),
}


@dataclass(frozen=True)
class PlanRow:
    """One data-generating design in a plan's grid."""

    table: str
    marginal: MarginalDist
    dependence: DependenceSpec
    change: ChangeSpec
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"row sample size must be >= 2, got {self.n}")


@dataclass(frozen=True)
class SimPlan:
    """A full simulation request: grid x tests x modes, R replications."""

    rows: Tuple[PlanRow, ...]
    tests: Tuple[TestKind, ...]
    modes: Tuple[str, ...]
    replications: int
    seed: int = DEFAULT_SEED
    alpha: float = 0.05
    k_min: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("plan needs at least one row")
        if not self.tests:
            raise ValueError("plan needs at least one test kind")
        allowed = (MODE_KNOWN, MODE_MARGINAL, MODE_FULL)
        if not self.modes or any(m not in allowed for m in self.modes):
            raise ValueError(f"modes must be a non-empty subset of {allowed}")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("modes must not repeat")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class CellResult:
    """One (row, test, mode) cell: a rate with its binomial standard error.

    Skipped cells (no population variance for a known-mode cell) carry
    ``None`` in both numeric fields and say why in ``skipped_reason``,
    which is informational and not part of the CSV schema.
    """

    table: str
    marginal: str
    dependence: str
    theta: Optional[float]
    mu_or_lambda2: Optional[float]
    test: str
    lrv_mode: str
    n: int
    replications: int
    reject_rate: Optional[float]
    std_err: Optional[float]
    seed: int
    skipped_reason: Optional[str] = None


def marginal_label(marginal: MarginalDist) -> str:
    if marginal.variant == "normal":
        return "normal"
    if marginal.variant == "scaled_t":
        return f"t{marginal.nu:g}"
    return f"exp{marginal.lam:g}"


def dependence_label(dep: DependenceSpec) -> str:
    if dep.variant == "iid":
        return "iid"
    return f"ar1({dep.phi:g})"


def _change_fields(change: ChangeSpec) -> Tuple[Optional[float], Optional[float]]:
    """(theta, mu_or_lambda2) for the CSV row; None for a no-change design."""
    if change.variant == "none":
        return None, None
    if change.variant == "location":
        return change.theta, change.mu
    return change.theta, change.lambda2


def _known_skip_reason(row: PlanRow, kind: TestKind) -> Optional[str]:
    if row.change.variant == "scale" and row.change.lambda2 != 1.0:
        return "no single known variance across a scale change"
    return lrv_unavailable_reason(row.marginal, row.dependence, kind)


def _simulate_chunk(
    row: PlanRow,
    tests: Tuple[TestKind, ...],
    modes: Tuple[str, ...],
    known_values: Tuple[Optional[float], ...],
    row_seed: int,
    rep_lo: int,
    rep_hi: int,
    crit: float,
    k_min: Optional[int],
) -> np.ndarray:
    """Rejection counts (tests x modes) over one contiguous replication range.

    A degenerate or singular variance estimate on some sample counts as a
    non-rejection for that cell; with the continuous designs here this is
    a theoretical corner, not an expected event.
    """
    counts = np.zeros((len(tests), len(modes)), dtype=np.int64)
    for rep in range(rep_lo, rep_hi):
        spec = DgpSpec(row.marginal, row.dependence, row.change, row.n, (row_seed, rep))
        sample = generate(spec)
        for ti, kind in enumerate(tests):
            use_k_min = k_min if k_min is not None else kind.default_k_min
            if kind.pairwise:
                use_k_min = max(2, use_k_min)
            path = trajectory(sample, kind, _KNOWN_UNIT, use_k_min)
            numer = float(np.max(np.abs(path)))
            for mi, mode in enumerate(modes):
                if mode == MODE_KNOWN:
                    sigma2 = known_values[ti]
                    if sigma2 is None:
                        continue
                else:
                    try:
                        sigma2 = _variance(sample, kind, _ESTIMATION_CONFIGS[mode])
                    except (DegenerateSampleError, SingularDensityError):
                        continue
                if numer / math.sqrt(sigma2) > crit:
                    counts[ti, mi] += 1
    return counts


def run_plan(plan: SimPlan, jobs: Optional[int] = None) -> list[CellResult]:
    """Execute a plan; ``jobs`` > 1 spreads replications over processes.

    Results are identical for any ``jobs`` value: replication j of row r is
    seeded by (plan.seed + r, j) wherever it runs, and counts merge by
    addition.
    """
    crit = critical_value(plan.alpha)
    jobs = 1 if jobs is None else max(1, int(jobs))
    results: list[CellResult] = []
    for row_idx, row in enumerate(plan.rows):
        row_seed = plan.seed + row_idx
        known_values = tuple(
            true_lrv(row.marginal, row.dependence, kind)
            if _known_skip_reason(row, kind) is None
            else None
            for kind in plan.tests
        )
        r_total = plan.replications
        if jobs == 1 or r_total < 2 * jobs:
            counts = _simulate_chunk(
                row, plan.tests, plan.modes, known_values, row_seed, 0, r_total, crit, plan.k_min
            )
        else:
            bounds = np.linspace(0, r_total, 4 * jobs + 1).astype(int)
            chunks = [
                (int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
            ]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(
                        _simulate_chunk,
                        row, plan.tests, plan.modes, known_values,
                        row_seed, lo, hi, crit, plan.k_min,
                    )
                    for lo, hi in chunks
                ]
                counts = sum(f.result() for f in futures)

        theta, level = _change_fields(row.change)
        for ti, kind in enumerate(plan.tests):
            for mi, mode in enumerate(plan.modes):
                common = dict(
                    table=row.table,
                    marginal=marginal_label(row.marginal),
                    dependence=dependence_label(row.dependence),
                    theta=theta,
                    mu_or_lambda2=level,
                    test=kind.variant,
                    lrv_mode=mode,
                    n=row.n,
                    replications=plan.replications,
                    seed=row_seed,
                )
                if mode == MODE_KNOWN and known_values[ti] is None:
                    results.append(
                        CellResult(
                            reject_rate=None,
                            std_err=None,
                            skipped_reason=_known_skip_reason(row, kind),
                            **common,
                        )
                    )
                    continue
                rate = float(counts[ti, mi]) / plan.replications
                se = math.sqrt(rate * (1.0 - rate) / plan.replications)
                results.append(CellResult(reject_rate=rate, std_err=se, **common))
    return results


def _format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def export_results(results: Sequence[CellResult], path) -> None:
    """Write results as CSV, one row per cell, fixed column order."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for cell in results:
                writer.writerow(
                    [
                        _format_field(v)
                        for v in (
                            cell.table,
                            cell.marginal,
                            cell.dependence,
                            cell.theta,
                            cell.mu_or_lambda2,
                            cell.test,
                            cell.lrv_mode,
                            cell.n,
                            cell.replications,
                            cell.reject_rate,
                            cell.std_err,
                            cell.seed,
                        )
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def import_results(path) -> list[CellResult]:
    """Read a results CSV back into cells; exact numeric round-trip."""

    def opt_float(text: str) -> Optional[float]:
        return None if text == "" else float(text)

    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected results header in {path}: {header}")
            out = []
            for rec in reader:
                if len(rec) != len(CSV_COLUMNS):
                    raise ValueError(f"malformed results row in {path}: {rec}")
                out.append(
                    CellResult(
                        table=rec[0],
                        marginal=rec[1],
                        dependence=rec[2],
                        theta=opt_float(rec[3]),
                        mu_or_lambda2=opt_float(rec[4]),
                        test=rec[5],
                        lrv_mode=rec[6],
                        n=int(rec[7]),
                        replications=int(rec[8]),
                        reject_rate=opt_float(rec[9]),
                        std_err=opt_float(rec[10]),
                        seed=int(rec[11]),
                    )
                )
            return out
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc


def render_results(results: Sequence[CellResult]) -> str:
    """Plain-text tables of integer rejection percentages, one per table tag.

    Mirrors the presentation style of the source grids: rows are designs,
    columns are (test, mode) pairs, skipped cells stay blank.
    """
    if not results:
        return "(no results)\n"
    tables: dict[str, list[CellResult]] = {}
    for cell in results:
        tables.setdefault(cell.table or "(untitled)", []).append(cell)

    blocks = []
    for name, cells in tables.items():
        row_keys: list[tuple] = []
        col_keys: list[tuple] = []
        values: dict[tuple, str] = {}
        for cell in cells:
            rk = (cell.marginal, cell.dependence, cell.theta, cell.mu_or_lambda2)
            ck = (cell.test, cell.lrv_mode)
            if rk not in row_keys:
                row_keys.append(rk)
            if ck not in col_keys:
                col_keys.append(ck)
            if cell.reject_rate is None:
                values[rk + ck] = ""
            else:
                values[rk + ck] = str(int(round(100.0 * cell.reject_rate)))

        def row_label(rk: tuple) -> str:
            marginal, dependence, theta, level = rk
            parts = [marginal, dependence]
            if theta is not None:
                parts.append(f"theta={theta:g}")
            if level is not None:
                parts.append(f"level={level:g}")
            return " ".join(parts)

        labels = [row_label(rk) for rk in row_keys]
        headers = [f"{t}/{m}" for t, m in col_keys]
        width0 = max(len(s) for s in labels + [name])
        widths = [max(len(h), 5) for h in headers]
        lines = [name]
        lines.append(
            "  ".join([" " * width0] + [h.rjust(w) for h, w in zip(headers, widths)])
        )
        for rk, label in zip(row_keys, labels):
            cells_txt = [
                values.get(rk + ck, "").rjust(w) for ck, w in zip(col_keys, widths)
            ]
            lines.append("  ".join([label.ljust(width0)] + cells_txt))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _table1_rows(n: int) -> Tuple[PlanRow, ...]:
    rows = []
    for dep in (IID, ar1(0.4)):
        for marg in (NORMAL, scaled_t(3.0), scaled_t(1.0)):
            rows.append(PlanRow("table1", marg, dep, NO_CHANGE, n))
    return tuple(rows)


def _jump_rows(table: str, dep: DependenceSpec, n: int) -> Tuple[PlanRow, ...]:
    rows = []
    for marg in (NORMAL, scaled_t(3.0), scaled_t(1.0)):
        for theta in (0.5, 0.75):
            for mu in (0.25, 0.5, 1.0):
                rows.append(PlanRow(table, marg, dep, location_jump(mu, theta), n))
    return tuple(rows)


def _table4_rows(n: int) -> Tuple[PlanRow, ...]:
    rows = []
    for lam2 in (1.0, 1.25, 1.5, 2.0, 3.0):
        rows.append(
            PlanRow("table4", exponential(1.0), IID, scale_change(lam2, 0.5), n)
        )
    return tuple(rows)


PRESET_NAMES = ("table1", "table2", "table3", "table4")


def preset_plan(
    name: str,
    replications: int = 1000,
    seed: int = DEFAULT_SEED,
    n: int = 240,
    k_min: Optional[int] = None,
) -> SimPlan:
    """The four built-in grids; all use n=240 and R=1000 by default."""
    all_modes = (MODE_KNOWN, MODE_MARGINAL, MODE_FULL)
    if name == "table1":
        return SimPlan(
            _table1_rows(n), (CUSUM, HODGES_LEHMANN, MEDIAN), all_modes,
            replications, seed, k_min=k_min,
        )
    if name == "table2":
        return SimPlan(
            _jump_rows("table2", IID, n), (CUSUM, HODGES_LEHMANN), all_modes,
            replications, seed, k_min=k_min,
        )
    if name == "table3":
        return SimPlan(
            _jump_rows("table3", ar1(0.4), n), (CUSUM, HODGES_LEHMANN),
            (MODE_KNOWN, MODE_FULL), replications, seed, k_min=k_min,
        )
    if name == "table4":
        return SimPlan(
            _table4_rows(n), (CUSUM, HODGES_LEHMANN, MEDIAN), all_modes,
            replications, seed, k_min=k_min,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
