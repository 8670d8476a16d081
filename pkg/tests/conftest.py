"""Shared fixtures for expensive Monte Carlo artifacts reused across files."""

import math
import os
import time

import numpy as np
import pytest

from uqcpt import (
    HODGES_LEHMANN,
    IID,
    NO_CHANGE,
    NORMAL,
    DgpSpec,
    LrvConfig,
    generate,
    preset_plan,
    run_plan,
    run_test,
)

NULL_LAW_SEED = 20260822
NULL_LAW_N = 2000
NULL_LAW_REPS = 2000


@pytest.fixture(scope="session")
def hl_null_statistics():
    """Pairwise-median max statistics under the null with the true scale.

    2000 independent standard-normal samples of length 2000, each reduced to
    its max-type statistic with the known asymptotic variance pi/3 plugged
    in.  Shared by the distribution checks here and in the acceptance suite.
    """
    config = LrvConfig.known(math.pi / 3.0)
    stats = np.empty(NULL_LAW_REPS)
    for rep in range(NULL_LAW_REPS):
        sample = generate(
            DgpSpec(NORMAL, IID, NO_CHANGE, NULL_LAW_N, (NULL_LAW_SEED, rep))
        )
        stats[rep] = run_test(sample, HODGES_LEHMANN, config).statistic
    return stats


@pytest.fixture(scope="session")
def table1_run():
    """One full run of the no-change grid preset, with its wall-clock time.

    Shared by the cell-value checks here and by the acceptance suite's
    size-reproduction and runtime criteria.
    """
    plan = preset_plan("table1")
    start = time.perf_counter()
    results = run_plan(plan, jobs=os.cpu_count())
    elapsed = time.perf_counter() - start
    return {"results": results, "elapsed": elapsed}
