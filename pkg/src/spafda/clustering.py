"""Spatially weighted amplitude/phase dissimilarities, agglomerative clustering,
and the rand index for scoring estimated partitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage as scipy_linkage
from scipy.spatial.distance import squareform

from spafda.dataio import SpatialDataset
from spafda.fdcore import l2_norm
from spafda.metrics import amplitude_distance, phase_distance, shape_distance
from spafda.variogram import (
    InsufficientDataError,
    empirical_variogram,
    fit_matern,
    pairwise_sq_l2,
    select_omega,
)

__all__ = [
    "DissimilarityMatrix",
    "Partition",
    "amplitude_dissimilarity_matrix",
    "phase_dissimilarity_matrix",
    "l2_dissimilarity_matrix",
    "hierarchical_cluster",
    "rand_index",
]

LINKAGES = ("average", "complete", "single")


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric nonnegative dissimilarities with a site label per row."""

    matrix: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("dissimilarity matrix must be square")
        if np.any(np.abs(np.diag(m)) > 1e-12):
            raise ValueError("dissimilarity matrix must have zero diagonal")
        if not np.allclose(m, m.T):
            raise ValueError("dissimilarity matrix must be symmetric")
        if np.any(m < 0):
            raise ValueError("dissimilarities must be nonnegative")
        if len(self.labels) != m.shape[0]:
            raise ValueError("label count must match matrix size")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, c: float) -> "DissimilarityMatrix":
        if c <= 0:
            raise ValueError("scale must be positive")
        return DissimilarityMatrix(self.matrix * c, self.labels)


@dataclass(frozen=True)
class Partition:
    """Cluster assignment: labels[i] in 1..k for site_ids[i], no empty cluster."""

    site_ids: tuple[str, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.site_ids) != len(self.labels):
            raise ValueError("one label per site required")
        labels = tuple(int(l) for l in self.labels)
        k = max(labels)
        if set(labels) != set(range(1, k + 1)):
            raise ValueError("labels must cover 1..k with no empty cluster")
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return max(self.labels)

    @classmethod
    def from_labels(cls, site_ids, raw_labels) -> "Partition":
        """Relabel arbitrary cluster ids to consecutive integers (order of first appearance)."""
        mapping = {}
        labels = []
        for l in raw_labels:
            if l not in mapping:
                mapping[l] = len(mapping) + 1
            labels.append(mapping[l])
        return cls(tuple(site_ids), tuple(labels))


def _spatial_dists(dataset: SpatialDataset) -> np.ndarray:
    s = dataset.sites
    d = np.sqrt(np.sum((s[:, None, :] - s[None, :, :]) ** 2, axis=-1))
    np.fill_diagonal(d, 0.0)
    return d


def _symmetrize(m: np.ndarray) -> np.ndarray:
    out = 0.5 * (m + m.T)
    np.fill_diagonal(out, 0.0)
    return out


def amplitude_dissimilarity_matrix(
    dataset: SpatialDataset, n_bins: int = 12, spatial_weight: bool = True
) -> DissimilarityMatrix:
    """Pairwise amplitude distances, optionally weighted by the fitted amplitude variogram."""
    if dataset.n < 2:
        raise InsufficientDataError("need at least 2 sites")
    srsfs = dataset.srsfs()
    n = dataset.n
    da = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            da[i, j] = da[j, i] = 0.5 * (
                amplitude_distance(srsfs[i], srsfs[j]) + amplitude_distance(srsfs[j], srsfs[i])
            )
    if not spatial_weight:
        return DissimilarityMatrix(da, dataset.site_ids)
    dists = _spatial_dists(dataset)
    model = fit_matern(empirical_variogram(dists, da**2, n_bins=n_bins))
    return DissimilarityMatrix(_symmetrize(da * model.evaluate(dists)), dataset.site_ids)


def phase_dissimilarity_matrix(
    dataset: SpatialDataset,
    omega: float | None = None,
    omega_candidates=None,
    n_bins: int = 12,
    spatial_weight: bool = True,
    lam: float = 10.0,
) -> DissimilarityMatrix:
    """Pairwise intrinsic phase distances, weighted by the shape-augmented phase variogram.

    Each pair's first element serves as the alignment template. When ``omega``
    is None it is selected by goodness of fit with the 5% fallback rule.
    ``lam`` penalizes the pairwise alignments; with noisy data an unpenalized
    alignment overfits noise into the warp and swamps the phase signal, so a
    moderate penalty is the default. Pass 0 for exact elastic alignment.
    """
    if dataset.n < 2:
        raise InsufficientDataError("need at least 2 sites")
    srsfs = dataset.srsfs()
    n = dataset.n
    dp = np.zeros((n, n))
    dsh2 = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dp[i, j] = dp[j, i] = 0.5 * (
                phase_distance(srsfs[i], srsfs[j], lam).intrinsic
                + phase_distance(srsfs[j], srsfs[i], lam).intrinsic
            )
            d = 0.5 * (shape_distance(srsfs[i], srsfs[j]) + shape_distance(srsfs[j], srsfs[i]))
            dsh2[i, j] = dsh2[j, i] = d * d
    if not spatial_weight:
        return DissimilarityMatrix(dp, dataset.site_ids)
    sites = dataset.sites
    if omega is None:
        from spafda.variogram import DEFAULT_OMEGA_CANDIDATES

        candidates = omega_candidates or DEFAULT_OMEGA_CANDIDATES
        omega, model = select_omega(sites, dsh2, dp**2, candidates=candidates, n_bins=n_bins)
    else:
        spatial_sq = np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1)
        D = np.sqrt(spatial_sq + omega * dsh2)
        np.fill_diagonal(D, 0.0)
        model = fit_matern(empirical_variogram(D, dp**2, n_bins=n_bins))
    spatial_sq = np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1)
    enlarged = np.sqrt(spatial_sq + omega * dsh2)
    np.fill_diagonal(enlarged, 0.0)
    return DissimilarityMatrix(_symmetrize(dp * model.evaluate(enlarged)), dataset.site_ids)


def l2_dissimilarity_matrix(
    dataset: SpatialDataset, n_bins: int = 12, spatial_weight: bool = True
) -> DissimilarityMatrix:
    """Raw L2 distances weighted by the plain trace-variogram (baseline method)."""
    if dataset.n < 2:
        raise InsufficientDataError("need at least 2 sites")
    sq = pairwise_sq_l2(dataset.values_matrix, dataset.grid)
    dl2 = np.sqrt(np.maximum(sq, 0.0))
    np.fill_diagonal(dl2, 0.0)
    if not spatial_weight:
        return DissimilarityMatrix(dl2, dataset.site_ids)
    dists = _spatial_dists(dataset)
    model = fit_matern(empirical_variogram(dists, sq, n_bins=n_bins))
    return DissimilarityMatrix(_symmetrize(dl2 * model.evaluate(dists)), dataset.site_ids)


def hierarchical_cluster(d: DissimilarityMatrix, k: int, linkage: str = "average") -> Partition:
    """Agglomerative clustering of a dissimilarity matrix, cut to k clusters."""
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    if k < 1 or k > d.n:
        raise ValueError("k must be between 1 and the number of sites")
    if k == d.n:
        return Partition(d.labels, tuple(range(1, d.n + 1)))
    Z = scipy_linkage(squareform(d.matrix, checks=False), method=linkage)
    raw = fcluster(Z, t=k, criterion="maxclust")
    return Partition.from_labels(d.labels, raw)


def rand_index(p1: Partition, p2: Partition) -> float:
    """Fraction of unordered site pairs on which the two partitions agree."""
    if p1.site_ids != p2.site_ids:
        raise ValueError("partitions must cover the same sites in the same order")
    a = np.asarray(p1.labels)
    b = np.asarray(p2.labels)
    n = a.size
    if n < 2:
        return 1.0
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    iu = np.triu_indices(n, k=1)
    agree = np.count_nonzero(same_a[iu] == same_b[iu])
    return agree / iu[0].size
