"""Empirical semivariograms, exponential-family model fitting, and the
shape-augmented distance used for phase dependence.

All empirical estimators share one form: pairs are grouped into lag bins and
each bin records half the mean squared discrepancy of its pairs. What
"discrepancy" means (raw L2, aligned L2, psi distance, amplitude distance) is
decided by the caller, which passes the matrix of squared discrepancies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from spafda.fdcore import Grid, SrsfFunction
from spafda.metrics import shape_distance

__all__ = [
    "EnlargedPoint",
    "EmpiricalVariogram",
    "VariogramModel",
    "InsufficientDataError",
    "enlarged_distance",
    "empirical_variogram",
    "pairwise_sq_l2",
    "fit_matern",
    "select_omega",
    "DEFAULT_OMEGA_CANDIDATES",
]

DEFAULT_OMEGA_CANDIDATES: tuple[float, ...] = (0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0)


class InsufficientDataError(ValueError):
    """Raised when too few observations are available for estimation."""


@dataclass(frozen=True)
class EnlargedPoint:
    """Spatial site augmented with the shape of its observed function."""

    site: tuple[float, float]
    shape: SrsfFunction


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Binned semivariances: parallel arrays of lag, semivariance, pair count."""

    lags: np.ndarray
    semivariances: np.ndarray
    pair_counts: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        if np.any(np.diff(lags) <= 0):
            raise ValueError("bin lags must be strictly increasing")
        if np.any(np.asarray(self.pair_counts) < 1):
            raise ValueError("retained bins must have at least one pair")

    @property
    def n_bins(self) -> int:
        return self.lags.size


@dataclass(frozen=True)
class VariogramModel:
    """Exponential (Matern with smoothness 0.5) semivariogram model."""

    scale: float
    range_: float
    nugget: float = 0.0
    smoothness: float = 0.5
    fit_error: float = 0.0
    r2: float = 1.0
    degenerate: bool = False

    def evaluate(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        v = self.nugget + self.scale * (1.0 - np.exp(-h / self.range_))
        return np.where(h <= 0.0, self.nugget, v)

    def __call__(self, h):
        return self.evaluate(h)


def enlarged_distance(y1: EnlargedPoint, y2: EnlargedPoint, omega: float) -> float:
    """sqrt(spatial distance^2 + omega * shape distance^2)."""
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    ds2 = (y1.site[0] - y2.site[0]) ** 2 + (y1.site[1] - y2.site[1]) ** 2
    if omega == 0.0:
        return float(np.sqrt(ds2))
    return float(np.sqrt(ds2 + omega * shape_distance(y1.shape, y2.shape) ** 2))


def pairwise_sq_l2(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Matrix of squared trapezoidal L2 distances between rows of ``values``."""
    diffs = values[:, None, :] - values[None, :, :]
    return np.trapezoid(np.square(diffs), grid.points, axis=-1)


def empirical_variogram(
    dist_matrix: np.ndarray,
    sq_diffs: np.ndarray,
    n_bins: int = 12,
    max_lag: float | None = None,
) -> EmpiricalVariogram:
    """Bin pairs by lag; each bin's semivariance is half the mean squared discrepancy.

    Pairs beyond ``max_lag`` (default: half the maximum pairwise distance) are
    dropped, as are empty bins. When ``max_lag`` is left automatic and the
    half-range cut leaves fewer than three nonempty bins (small site sets),
    the full lag range is used instead so a model can still be fitted.
    """
    D = np.asarray(dist_matrix, dtype=float)
    S = np.asarray(sq_diffs, dtype=float)
    n = D.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least 2 items for an empirical variogram")
    if D.shape != (n, n) or S.shape != (n, n):
        raise ValueError("distance and discrepancy matrices must be square and matching")
    if not np.allclose(D, D.T) or np.any(np.abs(np.diag(D)) > 1e-10):
        raise ValueError("distance matrix must be symmetric with zero diagonal")
    iu, ju = np.triu_indices(n, k=1)
    all_lags = D[iu, ju]
    all_vals = S[iu, ju]
    auto = max_lag is None
    if auto:
        max_lag = 0.5 * float(all_lags.max())
    if max_lag <= 0:
        raise InsufficientDataError("no positive lags available")

    def _bin(cut):
        keep = all_lags <= cut
        lags, vals = all_lags[keep], all_vals[keep]
        if lags.size == 0:
            return None
        edges = np.linspace(0.0, cut, n_bins + 1)
        which = np.clip(np.searchsorted(edges, lags, side="right") - 1, 0, n_bins - 1)
        out_lags, out_semis, out_counts = [], [], []
        for b in range(n_bins):
            mask = which == b
            if not np.any(mask):
                continue
            lag = float(lags[mask].mean())
            semi = 0.5 * float(vals[mask].mean())
            cnt = int(mask.sum())
            # a single lattice distance can straddle a bin edge in float
            # arithmetic; merge bins whose mean lags coincide
            if out_lags and lag - out_lags[-1] <= 1e-9 * max(1.0, lag):
                tot = out_counts[-1] + cnt
                out_lags[-1] = (out_lags[-1] * out_counts[-1] + lag * cnt) / tot
                out_semis[-1] = (out_semis[-1] * out_counts[-1] + semi * cnt) / tot
                out_counts[-1] = tot
            else:
                out_lags.append(lag)
                out_semis.append(semi)
                out_counts.append(cnt)
        return EmpiricalVariogram(np.array(out_lags), np.array(out_semis), np.array(out_counts))

    emp = _bin(max_lag)
    if auto and (emp is None or emp.n_bins < 3):
        widened = _bin(float(all_lags.max()))
        if widened is not None and (emp is None or widened.n_bins > emp.n_bins):
            emp = widened
    if emp is None:
        raise InsufficientDataError("no pairs within the maximum lag")
    return emp


def _sse(params, h, y, fit_nugget):
    if fit_nugget:
        nugget, scale, rng = params
    else:
        nugget, (scale, rng) = 0.0, params
    if scale < 0 or rng <= 0 or nugget < 0:
        return np.inf
    pred = nugget + scale * (1.0 - np.exp(-h / rng))
    return float(np.sum((y - pred) ** 2))


def fit_matern(emp: EmpiricalVariogram, fit_nugget: bool = False) -> VariogramModel:
    """Least-squares fit of the exponential semivariogram to binned estimates.

    The nugget is fixed to 0 unless ``fit_nugget`` is set. Degenerate inputs
    (all semivariances equal) yield a flagged flat model.
    """
    if emp.n_bins < 3:
        raise InsufficientDataError("need at least 3 bins to fit a variogram model")
    h, y = emp.lags, emp.semivariances
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst <= 1e-30:
        fe = float(np.sum(y**2))
        return VariogramModel(
            scale=0.0, range_=float(h.max()), nugget=0.0, fit_error=fe, r2=0.0, degenerate=True
        )
    # coarse log-grid over the range, closed-form linear solve per candidate
    best = (np.inf, None)
    hmax = float(h.max())
    for rng in np.geomspace(hmax * 1e-3, hmax * 20.0, 80):
        g = 1.0 - np.exp(-h / rng)
        if fit_nugget:
            X = np.column_stack([np.ones_like(g), g])
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            nugget, scale = max(coef[0], 0.0), max(coef[1], 0.0)
            params = (nugget, scale, rng)
        else:
            scale = max(float(g @ y) / float(g @ g), 0.0)
            params = (scale, rng)
        sse = _sse(params, h, y, fit_nugget)
        if sse < best[0]:
            best = (sse, params)
    # derivative-free local refinement from the grid optimum
    res = minimize(_sse, np.array(best[1]), args=(h, y, fit_nugget), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    sse, params = (res.fun, tuple(res.x)) if res.fun <= best[0] else best
    if fit_nugget:
        nugget, scale, rng = params
    else:
        nugget, (scale, rng) = 0.0, params
    return VariogramModel(
        scale=max(float(scale), 0.0),
        range_=max(float(rng), 1e-12),
        nugget=max(float(nugget), 0.0),
        fit_error=float(sse),
        r2=max(0.0, 1.0 - float(sse) / sst),
    )


def select_omega(
    sites: np.ndarray,
    shape_sq_dists: np.ndarray,
    psi_sq_diffs: np.ndarray,
    candidates=DEFAULT_OMEGA_CANDIDATES,
    n_bins: int = 12,
) -> tuple[float, VariogramModel]:
    """Pick the shape-augmentation weight maximizing variogram goodness of fit.

    The augmented distance is only kept when the best positive candidate cuts
    the fitting error by at least 5% relative to the purely spatial fit;
    otherwise the weight falls back to 0.

    ``shape_sq_dists`` holds squared pairwise shape distances and
    ``psi_sq_diffs`` squared pairwise L2 distances between relative phases.
    """
    candidates = sorted(set(float(c) for c in candidates))
    if 0.0 not in candidates:
        raise ValueError("omega candidates must include 0")
    sites = np.asarray(sites, dtype=float)
    spatial_sq = np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1)
    results = {}
    for omega in candidates:
        D = np.sqrt(spatial_sq + omega * shape_sq_dists)
        np.fill_diagonal(D, 0.0)
        try:
            emp = empirical_variogram(D, psi_sq_diffs, n_bins=n_bins)
            results[omega] = fit_matern(emp)
        except InsufficientDataError:
            continue
    if 0.0 not in results:
        raise InsufficientDataError("variogram fit failed for omega=0")
    base = results[0.0]
    best_omega = max(results, key=lambda w: (results[w].r2, -w))
    if best_omega > 0.0:
        fe0 = base.fit_error
        improvement = (fe0 - results[best_omega].fit_error) / fe0 if fe0 > 0 else 0.0
        if improvement < 0.05:
            best_omega = 0.0
    return best_omega, results[best_omega]
