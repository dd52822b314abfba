"""Shared fixtures and small helpers for the test suite."""

import numpy as np
import pytest

from spafda.fdcore import Grid, SampledFunction, WarpingFunction, srsf_transform


@pytest.fixture(scope="session")
def grid():
    return Grid.uniform(101)


def smooth_function(grid, kind="bimodal"):
    t = grid.points
    if kind == "bimodal":
        vals = np.sin(2 * np.pi * t) + 0.5 * np.sin(4 * np.pi * t) + 2.0 * t
    elif kind == "peak":
        vals = np.exp(-((t - 0.4) ** 2) / 0.02)
    else:
        raise ValueError(kind)
    return SampledFunction(grid, vals)


def smooth_warp(grid, a=0.3):
    """gamma(t) = t + a*t*(1-t), strictly increasing for |a| < 1."""
    t = grid.points
    return WarpingFunction(grid, t + a * t * (1.0 - t))


def smooth_srsf(grid, kind="bimodal"):
    return srsf_transform(smooth_function(grid, kind))
