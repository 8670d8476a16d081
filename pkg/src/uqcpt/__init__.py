"""Change-point tests built on quantiles of pairwise statistics.

The package detects at-most-one change in location (or scale) of a
series by tracking a robust location estimate — the median, the median
of pairwise averages, or a general quantile of an arbitrary pair
function — over growing prefixes, studentizing the resulting process by
a long-run variance estimate, and comparing its maximum against the
law of the supremum of a Brownian bridge.

Layout:

- ``core``: pairwise-quantile estimators and their prefix recursions,
  backed by a compiled kernel when available (``uqcpt.BACKEND``).
- ``lrv``: long-run variance estimation (density and autocovariance
  machinery, ``marginal`` and ``full`` modes).
- ``cpt``: trajectories, test statistics, the limit distribution, and
  the end-to-end ``run_test``.
- ``dgp``: simulation designs (normal / heavy-tailed / exponential
  margins, AR(1) dependence, location and scale changes) and the
  population long-run variances they imply.
- ``sim``: Monte Carlo rejection-rate grids with CSV export.
- ``cli``: the ``uqcpt`` command-line tool.
"""

from ._backend import BACKEND
from .core import (
    HL_SPEC,
    KERNEL_ABSDIFF,
    KERNEL_AVERAGE,
    UQuantileSpec,
    as_sample,
    h1_hat,
    hodges_lehmann,
    prefix_means,
    prefix_medians,
    prefix_u_quantiles,
    quantile_index,
    u_dist_fn,
    u_quantile,
)
from .cpt import (
    CUSUM,
    HODGES_LEHMANN,
    MEDIAN,
    ChangePointResult,
    TestKind,
    critical_value,
    general_u_quantile,
    run_test,
    sup_bb_cdf,
    test_statistic,
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
    exp_hl_location,
    exponential,
    generate,
    location_jump,
    lrv_unavailable_reason,
    scale_change,
    scaled_t,
    t_density,
    t_quantile,
    true_lrv,
)
from .errors import (
    DegenerateSampleError,
    InsufficientDataError,
    SingularDensityError,
    UqcptError,
)
from .lrv import (
    BARTLETT,
    EPANECHNIKOV,
    EPS_DENSITY,
    MODE_FULL,
    MODE_KNOWN,
    MODE_MARGINAL,
    QUARTIC,
    DensityKernel,
    HacWindow,
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
from .sim import (
    CSV_COLUMNS,
    DEFAULT_SEED,
    PRESET_NAMES,
    CellResult,
    PlanRow,
    SimPlan,
    export_results,
    import_results,
    preset_plan,
    render_results,
    run_plan,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # core
    "UQuantileSpec",
    "HL_SPEC",
    "KERNEL_AVERAGE",
    "KERNEL_ABSDIFF",
    "as_sample",
    "quantile_index",
    "u_dist_fn",
    "u_quantile",
    "hodges_lehmann",
    "prefix_u_quantiles",
    "prefix_means",
    "prefix_medians",
    "h1_hat",
    # lrv
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
    # cpt
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
    # dgp
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
    # sim
    "PlanRow",
    "SimPlan",
    "CellResult",
    "run_plan",
    "CSV_COLUMNS",
    "DEFAULT_SEED",
    "PRESET_NAMES",
    "export_results",
    "import_results",
    "render_results",
    "preset_plan",
    # errors
    "UqcptError",
    "InsufficientDataError",
    "DegenerateSampleError",
    "SingularDensityError",
]
