"""Core function representations on [0,1] and the warping-group algebra.

Everything operates on a shared uniform grid. Functions are stored as plain
value arrays; the square-root slope transform and its inverse move between
the function space and the transformed space where alignment is done.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Grid",
    "SampledFunction",
    "SrsfFunction",
    "WarpingFunction",
    "PsiFunction",
    "InvalidInputError",
    "InvalidWarpError",
    "DegenerateInputError",
    "srsf_transform",
    "srsf_inverse",
    "group_action",
    "warp_compose",
    "warp_invert",
    "warp_to_psi",
    "psi_to_warp",
    "identity_warp",
    "l2_norm",
    "l2_distance",
    "l2_inner",
]


class InvalidInputError(ValueError):
    """Raised when input values are non-finite or malformed."""


class InvalidWarpError(ValueError):
    """Raised when a candidate warping function is not a valid diffeomorphism."""


class DegenerateInputError(ValueError):
    """Raised when an input is degenerate for the requested operation (e.g. zero norm)."""


def _readonly(a) -> NDArray[np.float64]:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform sampling grid on [0,1]."""

    points: NDArray[np.float64]

    def __post_init__(self):
        pts = _readonly(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInputError("grid needs at least two points")
        if abs(pts[0]) > 1e-12 or abs(pts[-1] - 1.0) > 1e-12:
            raise InvalidInputError("grid must span [0,1]")
        spacing = np.diff(pts)
        if np.any(spacing <= 0) or np.ptp(spacing) > 1e-12:
            raise InvalidInputError("grid must be strictly increasing with uniform spacing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, size: int = 101) -> "Grid":
        return cls(np.linspace(0.0, 1.0, size))

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return float(self.points[1] - self.points[0])

    def __len__(self) -> int:
        return self.points.size


def l2_norm(values, grid: Grid) -> float:
    """Discrete L2 norm by trapezoidal quadrature."""
    return float(np.sqrt(np.trapezoid(np.square(values), grid.points)))


def l2_distance(v1, v2, grid: Grid) -> float:
    return l2_norm(np.asarray(v1) - np.asarray(v2), grid)


def l2_inner(v1, v2, grid: Grid) -> float:
    return float(np.trapezoid(np.asarray(v1) * np.asarray(v2), grid.points))


def _check_values(values, grid: Grid, what: str) -> NDArray[np.float64]:
    vals = _readonly(values)
    if vals.shape != (grid.size,):
        raise InvalidInputError(f"{what}: expected {grid.size} values, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError(f"{what}: non-finite values")
    return vals


@dataclass(frozen=True)
class SampledFunction:
    """Real function on [0,1] sampled on a shared grid, tagged with a spatial site."""

    grid: Grid
    values: NDArray[np.float64]
    site: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid, "SampledFunction"))
        object.__setattr__(self, "site", (float(self.site[0]), float(self.site[1])))


@dataclass(frozen=True)
class SrsfFunction:
    """Square-root slope transform of a function, plus the starting value f(0)."""

    grid: Grid
    values: NDArray[np.float64]
    start: float = 0.0
    site: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid, "SrsfFunction"))
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "site", (float(self.site[0]), float(self.site[1])))

    @property
    def norm(self) -> float:
        return l2_norm(self.values, self.grid)


@dataclass(frozen=True)
class WarpingFunction:
    """Boundary-preserving strictly increasing reparameterization of [0,1]."""

    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).copy()
        if vals.shape != (self.grid.size,):
            raise InvalidWarpError("warp length does not match grid")
        if not np.all(np.isfinite(vals)):
            raise InvalidWarpError("non-finite warp values")
        if abs(vals[0]) > 1e-8 or abs(vals[-1] - 1.0) > 1e-8:
            raise InvalidWarpError("warp must fix the boundary: gamma(0)=0, gamma(1)=1")
        vals[0], vals[-1] = 0.0, 1.0
        if np.any(np.diff(vals) <= 0.0):
            raise InvalidWarpError("warp must be strictly increasing")
        object.__setattr__(self, "values", _readonly(vals))


@dataclass(frozen=True)
class PsiFunction:
    """Square-root slope representation of a warp; unit-norm, nonnegative."""

    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self):
        vals = _check_values(self.values, self.grid, "PsiFunction")
        if np.any(vals < 0.0):
            raise InvalidInputError("psi values must be nonnegative")
        if abs(l2_norm(vals, self.grid) - 1.0) > 1e-6:
            raise InvalidInputError("psi must have unit discrete L2 norm")
        object.__setattr__(self, "values", vals)


def identity_warp(grid: Grid) -> WarpingFunction:
    return WarpingFunction(grid, grid.points)


def _derivative(values, grid: Grid) -> NDArray[np.float64]:
    # Central differences at interior nodes, one-sided at the boundaries.
    # The scalar-spacing form is exact (no cancellation residue) on constants.
    return np.gradient(values, grid.spacing)


def srsf_transform(f: SampledFunction) -> SrsfFunction:
    """Square-root slope transform q = sign(f')*sqrt(|f'|), with sign(0)*0 = 0."""
    df = _derivative(f.values, f.grid)
    if not np.all(np.isfinite(df)):
        raise InvalidInputError("non-finite derivative in SRSF transform")
    q = np.sign(df) * np.sqrt(np.abs(df))
    return SrsfFunction(f.grid, q, start=float(f.values[0]), site=f.site)


def srsf_inverse(q: SrsfFunction) -> SampledFunction:
    """Reconstruct f(t) = f(0) + int_0^t q|q| by cumulative trapezoidal quadrature."""
    integrand = q.values * np.abs(q.values)
    dt = q.grid.spacing
    cum = np.concatenate(([0.0], np.cumsum((integrand[1:] + integrand[:-1]) * 0.5 * dt)))
    return SampledFunction(q.grid, q.start + cum, site=q.site)


def group_action(q: SrsfFunction, g: WarpingFunction) -> SrsfFunction:
    """Warping action (q, gamma) = (q o gamma) * sqrt(gamma')."""
    t = q.grid.points
    qg = np.interp(g.values, t, q.values)
    gdot = np.clip(_derivative(g.values, q.grid), 0.0, None)
    return SrsfFunction(q.grid, qg * np.sqrt(gdot), start=q.start, site=q.site)


def warp_compose(g1: WarpingFunction, g2: WarpingFunction) -> WarpingFunction:
    """Pointwise composition g1(g2(t)) by linear interpolation."""
    t = g1.grid.points
    vals = np.interp(g2.values, t, g1.values)
    return WarpingFunction(g1.grid, vals)


def warp_invert(g: WarpingFunction) -> WarpingFunction:
    """Numerical inverse: swap axes and re-interpolate onto the grid."""
    t = g.grid.points
    return WarpingFunction(g.grid, np.interp(t, g.values, t))


def warp_to_psi(g: WarpingFunction) -> PsiFunction:
    """psi = sqrt(gamma'), renormalized onto the unit sphere."""
    gdot = np.clip(_derivative(g.values, g.grid), 0.0, None)
    psi = np.sqrt(gdot)
    nrm = l2_norm(psi, g.grid)
    if nrm <= 0.0:
        raise InvalidWarpError("warp has vanishing derivative everywhere")
    return PsiFunction(g.grid, psi / nrm)


def psi_to_warp(p: PsiFunction) -> WarpingFunction:
    """gamma(t) = int_0^t psi(u)^2 du, endpoint-renormalized so gamma(1)=1."""
    sq = np.square(p.values)
    dt = p.grid.spacing
    cum = np.concatenate(([0.0], np.cumsum((sq[1:] + sq[:-1]) * 0.5 * dt)))
    if cum[-1] <= 0.0:
        raise InvalidWarpError("psi integrates to zero")
    vals = cum / cum[-1]
    if np.any(np.diff(vals) <= 0.0):
        raise InvalidWarpError("psi has a flat stretch; integrated warp is not strictly increasing")
    return WarpingFunction(p.grid, vals)
