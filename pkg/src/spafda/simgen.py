"""Seeded generators for the simulation studies: Gaussian random fields with
exponential covariance, correlated-uniform phase coefficients, Beta-CDF warps,
and the kriging/clustering dataset designs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.stats import norm

from spafda.dataio import SpatialDataset
from spafda.fdcore import Grid, SampledFunction, WarpingFunction

__all__ = [
    "FieldSpec",
    "SimDataset",
    "matern_covariance",
    "sample_gaussian_field",
    "correlated_uniform",
    "beta_cdf_warp",
    "gen_kriging_dataset",
    "gen_cluster_dataset",
    "DegenerateCovarianceError",
    "DEFAULT_RANGE",
]

DEFAULT_RANGE = 2.0 * np.sqrt(2.0)

BSPLINE_COEF_MEANS = (1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0, 3.0, 3.0, 2.0, 1.0)


class DegenerateCovarianceError(ValueError):
    """Raised when the covariance matrix cannot be factorized even after jitter."""


@dataclass(frozen=True)
class FieldSpec:
    """Sites plus exponential-covariance parameters for a Gaussian random field."""

    sites: np.ndarray
    sigma2: float
    ell: float
    seed: int = 0

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=float)
        if self.sigma2 < 0 or self.ell <= 0:
            raise ValueError("need sigma2 >= 0 and ell > 0")
        if len({tuple(s) for s in sites}) != len(sites):
            raise ValueError("sites must be distinct")
        object.__setattr__(self, "sites", sites)


@dataclass(frozen=True)
class SimDataset:
    """Generated dataset plus the ground truth needed for scoring."""

    dataset: SpatialDataset
    true_amplitudes: np.ndarray  # pre-warp functions, (n, T)
    true_phases: tuple[WarpingFunction, ...]
    amp_partition: np.ndarray | None = None
    phase_partition: np.ndarray | None = None


def matern_covariance(h, sigma2: float, ell: float):
    """Exponential covariance sigma2 * exp(-h/ell) (Matern smoothness 0.5)."""
    return sigma2 * np.exp(-np.asarray(h, dtype=float) / ell)


def _chol_factor(spec: FieldSpec) -> np.ndarray:
    d = np.sqrt(np.sum((spec.sites[:, None, :] - spec.sites[None, :, :]) ** 2, axis=-1))
    C = matern_covariance(d, spec.sigma2, spec.ell) + 1e-10 * np.eye(len(spec.sites))
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError("covariance factorization failed") from exc


def sample_gaussian_field(spec: FieldSpec, mean, rng=None) -> np.ndarray:
    """One draw of the field at the spec's sites: mean + L z with L'L the covariance."""
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (len(spec.sites),))
    if spec.sigma2 == 0.0:
        return mean.copy()
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    L = _chol_factor(spec)
    return mean + L @ rng.standard_normal(len(spec.sites))


def correlated_uniform(spec: FieldSpec, B: float, rng=None) -> np.ndarray:
    """Gaussian-copula draw with uniform margins on [-B, B] at the spec's sites."""
    if B <= 0:
        raise ValueError("B must be positive")
    unit = FieldSpec(spec.sites, 1.0, spec.ell, spec.seed)
    z = sample_gaussian_field(unit, 0.0, rng)
    return B * (2.0 * norm.cdf(z) - 1.0)


def beta_cdf_warp(b: float, grid: Grid) -> WarpingFunction:
    """Warp gamma(t) = 1 - (1-t)^exp(b), the Beta(1, e^b) distribution function."""
    t = grid.points
    raw = -np.expm1(np.exp(b) * np.log1p(-t[:-1]))
    raw = np.append(raw, 1.0)
    # tiny convex blend with the identity keeps the sampled warp strictly
    # increasing where the closed form saturates in float precision
    eps = 1e-10
    return WarpingFunction(grid, (1.0 - eps) * raw + eps * t)


def _bspline_design(grid: Grid, n_basis: int, degree: int = 3) -> np.ndarray:
    interior = np.linspace(0.0, 1.0, n_basis - degree + 1)[1:-1]
    knots = np.concatenate([[0.0] * (degree + 1), interior, [1.0] * (degree + 1)])
    return BSpline.design_matrix(grid.points, knots, degree).toarray()


def _make_layout(layout, rng) -> np.ndarray:
    if layout == "grid5x5":
        axis = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])
    if isinstance(layout, tuple) and layout[0] == "uniform_random":
        n = int(layout[1])
        return rng.uniform(-2.0, 2.0, size=(n, 2))
    raise ValueError(f"unknown layout: {layout!r}")


def _build_dataset(grid, sites, values) -> SpatialDataset:
    fns = tuple(
        SampledFunction(grid, values[i], site=(float(sites[i, 0]), float(sites[i, 1])))
        for i in range(len(sites))
    )
    return SpatialDataset(grid, fns)


def gen_kriging_dataset(
    design: str = "bimodal",
    B: float = 1.0,
    ell1: float = DEFAULT_RANGE,
    ell2: float = DEFAULT_RANGE,
    sigma_a2: float = 1.0,
    noise_sd: float = 0.5,
    layout="grid5x5",
    seed: int = 0,
    grid_size: int = 101,
) -> SimDataset:
    """Kriging-study generator: spatially correlated basis coefficients composed
    with spatially correlated Beta-CDF warps, plus white observation noise.

    ``design`` is "bspline" (11 cubic B-spline basis functions) or "bimodal"
    (a single two-peak cosine basis function with mean coefficient 5).
    """
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(grid_size)
    t = grid.points
    sites = _make_layout(layout, rng)
    n = len(sites)

    if design == "bspline":
        basis = _bspline_design(grid, len(BSPLINE_COEF_MEANS))
        coef_means = np.array(BSPLINE_COEF_MEANS)
    elif design == "bimodal":
        # two-peak cosine; the original [-1,1] domain rescaled onto [0,1]
        basis = -np.cos(4.0 * np.pi * t)[:, None]
        coef_means = np.array([5.0])
    else:
        raise ValueError(f"unknown design: {design!r}")

    amp_spec = FieldSpec(sites, sigma_a2, ell1, seed)
    coeffs = np.column_stack(
        [sample_gaussian_field(amp_spec, m, rng) for m in coef_means]
    )  # (n, K); independent across basis indices
    signal = coeffs @ basis.T  # (n, T)
    noise = noise_sd * rng.standard_normal((n, grid_size)) if noise_sd > 0 else np.zeros((n, grid_size))
    pre_warp = signal + noise

    phase_spec = FieldSpec(sites, 1.0, ell2, seed)
    b = correlated_uniform(phase_spec, B, rng)
    phases = tuple(beta_cdf_warp(bi, grid) for bi in b)
    values = np.array([np.interp(g.values, t, pre_warp[i]) for i, g in enumerate(phases)])
    return SimDataset(_build_dataset(grid, sites, values), pre_warp, phases)


def _quadrant_partition(sites: np.ndarray, cx: float, cy: float) -> np.ndarray:
    labels = np.zeros(len(sites), dtype=int)
    labels[(sites[:, 0] >= cx) & (sites[:, 1] < cy)] = 1
    labels[(sites[:, 0] < cx) & (sites[:, 1] >= cy)] = 2
    labels[(sites[:, 0] >= cx) & (sites[:, 1] >= cy)] = 3
    return labels + 1


def _diagonal_partition(sites: np.ndarray) -> np.ndarray:
    # wedges cut by y = x and y = 4 - x
    above_main = sites[:, 1] >= sites[:, 0]
    above_anti = sites[:, 1] >= 4.0 - sites[:, 0]
    labels = np.zeros(len(sites), dtype=int)
    labels[above_main & ~above_anti] = 1
    labels[~above_main & above_anti] = 2
    labels[above_main & above_anti] = 3
    return labels + 1


def gen_cluster_dataset(
    design: str = "disagree",
    delta_a: float = 2.0,
    delta_b: float = 0.5,
    B: float = 1.0,
    sigma_a2: float = 1.0,
    noise_sd: float = 0.5,
    ell: float = DEFAULT_RANGE,
    seed: int = 0,
    grid_size: int = 101,
) -> SimDataset:
    """Clustering-study generator with separate amplitude and phase partitions.

    "agree": a 4x4 grid split into quadrants, shared by both components.
    "disagree": 30 uniform sites on [0,4]^2; amplitudes partitioned by
    x=2/y=2, phases by the two diagonals.
    """
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(grid_size)
    t = grid.points

    if design == "agree":
        axis = np.array([0.5, 1.5, 2.5, 3.5])
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        sites = np.column_stack([xx.ravel(), yy.ravel()])
        amp_part = _quadrant_partition(sites, 2.0, 2.0)
        phase_part = amp_part.copy()
    elif design == "disagree":
        sites = rng.uniform(0.0, 4.0, size=(30, 2))
        amp_part = _quadrant_partition(sites, 2.0, 2.0)
        phase_part = _diagonal_partition(sites)
    else:
        raise ValueError(f"unknown design: {design!r}")

    n = len(sites)
    amp_spec = FieldSpec(sites, sigma_a2, ell, seed)
    eps_a = sample_gaussian_field(amp_spec, 5.0, rng)
    a = amp_part * delta_a + eps_a

    phase_spec = FieldSpec(sites, 1.0, ell, seed)
    eps_b = correlated_uniform(phase_spec, B, rng)
    b = phase_part * delta_b + eps_b

    mu = -np.cos(2.0 * np.pi * t)
    noise = noise_sd * rng.standard_normal((n, grid_size)) if noise_sd > 0 else np.zeros((n, grid_size))
    pre_warp = a[:, None] * mu[None, :] + noise
    phases = tuple(beta_cdf_warp(bi, grid) for bi in b)
    values = np.array([np.interp(g.values, t, pre_warp[i]) for i, g in enumerate(phases)])
    return SimDataset(
        _build_dataset(grid, sites, values), pre_warp, phases, amp_part, phase_part
    )
