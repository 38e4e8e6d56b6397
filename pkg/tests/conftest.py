"""Shared, cached grid fields; building one costs seconds, so every test
module reuses the same few."""

import functools
import sys

import numpy as np
import pytest

from juliageom.grid import GridSpec, classify_and_label, distance_field, julia_sample
from juliageom.orbits import detect_cycles
from juliageom.ratmap import RationalMap


@functools.lru_cache(maxsize=None)
def cycles_of(c):
    return detect_cycles(RationalMap.quadratic(c))


@functools.lru_cache(maxsize=None)
def field_for(c, N, chart="standard", half_width=2.0, count=40000, method="mixed", seed=1):
    """(f, field, sample) for z^2 + c on the given window, delta-hat filled."""
    f = RationalMap.quadratic(c)
    fl = classify_and_label(f, GridSpec(chart, 0j, half_width, N), cycles_of(c))
    sample = julia_sample(f, count, seed, method=method, field=fl)
    distance_field(fl, sample)
    return f, fl, sample


@pytest.fixture(scope="session")
def disk512():
    """z^2 on [-1.25, 1.25]^2 at N = 512."""
    return field_for(0, 512, "standard", 1.25)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 10):
        terminalreporter.write_line(mod.RESULTS.get(k, f"criterion {k}: FAIL  (not run, or errored before a result)"))
