"""Dissimilarity construction, hierarchical clustering, and rand-index tests."""

import itertools

import numpy as np
import pytest

from spafda.clustering import (
    DissimilarityMatrix,
    Partition,
    amplitude_dissimilarity_matrix,
    hierarchical_cluster,
    l2_dissimilarity_matrix,
    phase_dissimilarity_matrix,
    rand_index,
)
from spafda.dataio import SpatialDataset
from spafda.fdcore import Grid, SampledFunction
from tests.conftest import smooth_warp


def _brute_force_rand(a, b):
    n = len(a)
    agree = total = 0
    for i, j in itertools.combinations(range(n), 2):
        total += 1
        if (a[i] == a[j]) == (b[i] == b[j]):
            agree += 1
    return agree / total


def make_dataset(n=8, T=41, seed=0, two_groups=False, warp_only=False):
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(T)
    t = grid.points
    base = np.sin(2 * np.pi * t) + 2.0 * t
    fns = []
    for i in range(n):
        if warp_only:
            g = smooth_warp(grid, rng.uniform(-0.5, 0.5))
            vals = np.interp(g.values, t, base)
        elif two_groups:
            amp = 2.0 if i < n // 2 else 6.0
            vals = amp * np.sin(2 * np.pi * t) + rng.normal(0, 0.05, T)
        else:
            vals = base + rng.normal(0, 0.1, T)
        fns.append(SampledFunction(grid, vals, site=(float(i), float(i % 3))))
    return SpatialDataset(grid, tuple(fns))


class TestDissimilarityMatrix:
    def test_validation(self):
        labels = ("a", "b")
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.zeros((2, 3)), labels)
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.eye(2), labels)  # nonzero diagonal
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]), labels)
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.array([[0.0, -1.0], [-1.0, 0.0]]), labels)
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.zeros((3, 3)), labels)

    def test_scaled(self):
        d = DissimilarityMatrix(np.array([[0.0, 2.0], [2.0, 0.0]]), ("a", "b"))
        assert d.scaled(0.5).matrix[0, 1] == 1.0
        with pytest.raises(ValueError):
            d.scaled(0.0)


class TestPartition:
    def test_labels_must_cover_range(self):
        with pytest.raises(ValueError):
            Partition(("a", "b", "c"), (1, 3, 3))  # cluster 2 empty

    def test_from_labels_relabels(self):
        p = Partition.from_labels(("a", "b", "c", "d"), (7, 2, 7, 9))
        assert p.labels == (1, 2, 1, 3)
        assert p.k == 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Partition(("a",), (1, 2))


class TestRandIndex:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for n in (4, 6, 8):
            for _ in range(20):
                ids = tuple(str(i) for i in range(n))
                a = Partition.from_labels(ids, rng.integers(0, 3, n))
                b = Partition.from_labels(ids, rng.integers(0, 3, n))
                assert rand_index(a, b) == pytest.approx(
                    _brute_force_rand(a.labels, b.labels)
                )

    def test_identical_is_one(self):
        ids = ("a", "b", "c", "d")
        p = Partition(ids, (1, 1, 2, 2))
        assert rand_index(p, p) == 1.0

    def test_label_permutation_invariant(self):
        ids = ("a", "b", "c", "d")
        p1 = Partition(ids, (1, 1, 2, 2))
        p2 = Partition(ids, (2, 2, 1, 1))
        assert rand_index(p1, p2) == 1.0

    def test_site_mismatch(self):
        p1 = Partition(("a", "b"), (1, 2))
        p2 = Partition(("b", "a"), (1, 2))
        with pytest.raises(ValueError):
            rand_index(p1, p2)


class TestHierarchicalCluster:
    def _toy_matrix(self):
        # two tight pairs far apart: {0,1} and {2,3}
        m = np.full((4, 4), 10.0)
        np.fill_diagonal(m, 0.0)
        m[0, 1] = m[1, 0] = 1.0
        m[2, 3] = m[3, 2] = 1.2
        return DissimilarityMatrix(m, ("a", "b", "c", "d"))

    def test_hand_traced_two_clusters(self):
        p = hierarchical_cluster(self._toy_matrix(), 2, "average")
        assert p.labels[0] == p.labels[1]
        assert p.labels[2] == p.labels[3]
        assert p.labels[0] != p.labels[2]

    def test_scale_invariance(self):
        d = self._toy_matrix()
        for k in (2, 3):
            assert (
                hierarchical_cluster(d, k).labels
                == hierarchical_cluster(d.scaled(37.5), k).labels
            )

    def test_k_extremes(self):
        d = self._toy_matrix()
        assert hierarchical_cluster(d, 1).labels == (1, 1, 1, 1)
        assert hierarchical_cluster(d, 4).labels == (1, 2, 3, 4)

    def test_invalid_args(self):
        d = self._toy_matrix()
        with pytest.raises(ValueError):
            hierarchical_cluster(d, 2, "ward")
        with pytest.raises(ValueError):
            hierarchical_cluster(d, 0)
        with pytest.raises(ValueError):
            hierarchical_cluster(d, 5)


class TestDissimilarityConstruction:
    def test_identical_functions_all_zero(self):
        grid = Grid.uniform(41)
        vals = np.sin(2 * np.pi * grid.points)
        rng = np.random.default_rng(0)
        sites = rng.uniform(0.0, 4.0, size=(6, 2))
        fns = tuple(
            SampledFunction(grid, vals, site=(s[0], s[1])) for s in sites
        )
        ds = SpatialDataset(grid, fns)
        for build in (amplitude_dissimilarity_matrix, l2_dissimilarity_matrix):
            assert np.allclose(build(ds, n_bins=4).matrix, 0.0, atol=1e-8)

    def test_amplitude_forgives_pure_warping(self):
        # alignment residual is discretization-limited, so a fine grid is used
        ds = make_dataset(T=101, warp_only=True, seed=1)
        amp = amplitude_dissimilarity_matrix(ds, spatial_weight=False).matrix
        l2 = l2_dissimilarity_matrix(ds, spatial_weight=False).matrix
        iu = np.triu_indices(ds.n, 1)
        assert amp[iu].mean() < 0.5 * l2[iu].mean()

    def test_phase_charges_pure_warping(self):
        ds = make_dataset(warp_only=True, seed=2)
        ph = phase_dissimilarity_matrix(ds, spatial_weight=False, lam=0.0).matrix
        iu = np.triu_indices(ds.n, 1)
        assert ph[iu].mean() > 1e-3
        assert np.allclose(ph, ph.T)

    def test_phase_penalty_shrinks_distances_on_noise(self):
        rng = np.random.default_rng(3)
        grid = Grid.uniform(41)
        t = grid.points
        fns = tuple(
            SampledFunction(
                grid,
                np.sin(2 * np.pi * t) + rng.normal(0, 0.3, 41),
                site=(float(i), 0.0),
            )
            for i in range(5)
        )
        ds = SpatialDataset(grid, fns)
        iu = np.triu_indices(5, 1)
        loose = phase_dissimilarity_matrix(ds, spatial_weight=False, lam=0.0).matrix
        tight = phase_dissimilarity_matrix(ds, spatial_weight=False, lam=10.0).matrix
        assert tight[iu].mean() < loose[iu].mean()

    def test_weighted_matrices_valid(self):
        ds = make_dataset(two_groups=True, seed=4)
        for build in (
            amplitude_dissimilarity_matrix,
            l2_dissimilarity_matrix,
        ):
            d = build(ds, n_bins=4)
            assert d.n == ds.n
            assert np.all(d.matrix >= 0)
        d = phase_dissimilarity_matrix(ds, n_bins=4)
        assert d.n == ds.n
        assert np.all(d.matrix >= 0)

    def test_two_group_amplitude_separation(self):
        ds = make_dataset(two_groups=True, seed=5)
        d = amplitude_dissimilarity_matrix(ds, spatial_weight=False)
        p = hierarchical_cluster(d, 2, "average")
        truth = Partition.from_labels(ds.site_ids, [0] * 4 + [1] * 4)
        assert rand_index(p, truth) == 1.0
