"""Backend selection: compiled extension if available, NumPy otherwise.

``uqcpt._speedups`` is an optional Cython extension implementing the same
six kernels as ``uqcpt._pyref``.  The counting and rank-selection kernels
return bitwise-identical results on both backends; the two kernel-density
sums may differ by a few ulp because the accumulation order differs.
Whichever module is active is re-exported here; set ``UQCPT_BACKEND=python``
to force the pure NumPy implementation (any other value, or an absent
variable, prefers the compiled one).
"""

from __future__ import annotations

import os

from . import _pyref

KIND_AVG = _pyref.KIND_AVG
KIND_ABSDIFF = _pyref.KIND_ABSDIFF

if os.environ.get("UQCPT_BACKEND", "").lower() == "python":
    _impl = _pyref
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pyref

BACKEND: str = "compiled" if _impl.__name__.endswith("_speedups") else "python"

count_pairs_le = _impl.count_pairs_le
pair_avg_le_counts = _impl.pair_avg_le_counts
pairs_in_range = _impl.pairs_in_range
epan_pair_sum = _impl.epan_pair_sum
epan_point_sum = _impl.epan_point_sum
offline_rank_select = _impl.offline_rank_select
