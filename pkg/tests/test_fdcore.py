"""Core representation and warping-algebra tests, oracle values first."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spafda.fdcore import (
    DegenerateInputError,
    Grid,
    InvalidInputError,
    InvalidWarpError,
    PsiFunction,
    SampledFunction,
    SrsfFunction,
    WarpingFunction,
    group_action,
    identity_warp,
    l2_norm,
    psi_to_warp,
    srsf_inverse,
    srsf_transform,
    warp_compose,
    warp_invert,
    warp_to_psi,
)
from tests.conftest import smooth_function, smooth_srsf, smooth_warp


class TestGrid:
    def test_uniform(self):
        g = Grid.uniform(11)
        assert g.size == 11
        assert g.points[0] == 0.0 and g.points[-1] == 1.0
        assert g.spacing == pytest.approx(0.1)

    def test_rejects_bad_span(self):
        with pytest.raises(InvalidInputError):
            Grid(np.linspace(0.1, 1.0, 10))

    def test_rejects_nonuniform(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.0, 0.1, 0.5, 1.0]))

    def test_rejects_too_small(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.5]))


class TestSrsfTransform:
    def test_linear(self, grid):
        q = srsf_transform(SampledFunction(grid, grid.points))
        assert np.allclose(q.values, 1.0)
        assert q.start == 0.0

    def test_constant(self, grid):
        q = srsf_transform(SampledFunction(grid, np.full(grid.size, 4.0)))
        assert np.allclose(q.values, 0.0)
        assert q.start == 4.0

    def test_quadratic_matches_analytic_derivative(self, grid):
        # f = t^2 has f' = 2t; central differences are exact for quadratics
        q = srsf_transform(SampledFunction(grid, grid.points**2))
        expected = np.sqrt(2.0 * grid.points[1:-1])
        assert np.allclose(q.values[1:-1], expected, atol=1e-10)

    def test_rejects_nonfinite(self, grid):
        vals = np.ones(grid.size)
        vals[3] = np.nan
        with pytest.raises(InvalidInputError):
            SampledFunction(grid, vals)


class TestSrsfInverse:
    def test_unit_q(self, grid):
        f = srsf_inverse(SrsfFunction(grid, np.ones(grid.size)))
        assert np.allclose(f.values, grid.points, atol=1e-12)

    def test_zero_q_with_start(self, grid):
        f = srsf_inverse(SrsfFunction(grid, np.zeros(grid.size), start=3.0))
        assert np.allclose(f.values, 3.0)

    def test_round_trip(self, grid):
        # moderate curvature: the central-difference/trapezoid pair is O(h^2 f''),
        # so the 1e-3 contract applies to functions of bounded second derivative
        t = grid.points
        f = SampledFunction(grid, 0.8 * np.sin(2 * np.pi * t) + 2.0 * t + 0.3 * t * t)
        back = srsf_inverse(srsf_transform(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-3


class TestGroupAction:
    def test_identity(self, grid):
        q = smooth_srsf(grid)
        out = group_action(q, identity_warp(grid))
        assert np.allclose(out.values, q.values, atol=1e-9)
        assert out.start == q.start

    def test_isometry(self, grid):
        rng = np.random.default_rng(0)
        for _ in range(5):
            t = grid.points
            coef = rng.normal(size=3)
            q = SrsfFunction(grid, coef[0] + coef[1] * np.sin(2 * np.pi * t) + coef[2] * t)
            g = smooth_warp(grid, a=rng.uniform(-0.6, 0.6))
            nq = l2_norm(q.values, grid)
            ng = l2_norm(group_action(q, g).values, grid)
            assert abs(ng - nq) / nq < 1e-3

    def test_group_law(self, grid):
        q = smooth_srsf(grid)
        g1 = smooth_warp(grid, 0.3)
        g2 = smooth_warp(grid, -0.4)
        lhs = group_action(group_action(q, g1), g2)
        rhs = group_action(q, warp_compose(g1, g2))
        # pointwise interpolation error spikes where q is steep; compare in L2
        rel = l2_norm(lhs.values - rhs.values, grid) / l2_norm(q.values, grid)
        assert rel < 2e-2


class TestWarpAlgebra:
    def test_compose_identity_right(self, grid):
        g = smooth_warp(grid)
        out = warp_compose(g, identity_warp(grid))
        assert np.allclose(out.values, g.values, atol=1e-12)

    def test_compose_identity_left(self, grid):
        g = smooth_warp(grid)
        out = warp_compose(identity_warp(grid), g)
        assert np.allclose(out.values, g.values, atol=1e-12)

    def test_compose_with_inverse(self, grid):
        g = smooth_warp(grid, 0.5)
        out = warp_compose(g, warp_invert(g))
        assert np.max(np.abs(out.values - grid.points)) < 1e-3

    def test_invert_identity(self, grid):
        out = warp_invert(identity_warp(grid))
        assert np.allclose(out.values, grid.points, atol=1e-12)

    def test_invert_involution(self, grid):
        g = smooth_warp(grid, 0.5)
        out = warp_invert(warp_invert(g))
        assert np.max(np.abs(out.values - g.values)) < 1e-3

    def test_invert_square(self, grid):
        g = WarpingFunction(grid, grid.points**2)
        out = warp_invert(g)
        assert np.max(np.abs(out.values - np.sqrt(grid.points))) < 5e-2  # sqrt kink at 0

    def test_warp_invariants_enforced(self, grid):
        with pytest.raises(InvalidWarpError):
            WarpingFunction(grid, np.linspace(0.1, 1.0, grid.size))
        vals = grid.points.copy()
        vals[5] = vals[7]  # non-monotone
        with pytest.raises(InvalidWarpError):
            WarpingFunction(grid, vals)


class TestPsi:
    def test_identity_warp_gives_unit_psi(self, grid):
        psi = warp_to_psi(identity_warp(grid))
        assert np.allclose(psi.values, 1.0, atol=1e-9)

    def test_unit_norm_enforced(self, grid):
        psi = warp_to_psi(smooth_warp(grid, 0.5))
        assert abs(l2_norm(psi.values, grid) - 1.0) < 1e-12
        with pytest.raises(InvalidInputError):
            PsiFunction(grid, np.full(grid.size, 2.0))

    def test_psi_to_warp_identity(self, grid):
        out = psi_to_warp(PsiFunction(grid, np.ones(grid.size)))
        assert np.allclose(out.values, grid.points, atol=1e-12)

    def test_round_trip(self, grid):
        g = smooth_warp(grid, 0.5)
        back = psi_to_warp(warp_to_psi(g))
        assert np.max(np.abs(back.values - g.values)) < 1e-3

    def test_positive_psi_strictly_increasing(self, grid):
        rng = np.random.default_rng(1)
        raw = 0.5 + rng.uniform(0.0, 1.0, grid.size)
        psi = PsiFunction(grid, raw / l2_norm(raw, grid))
        out = psi_to_warp(psi)
        assert np.all(np.diff(out.values) > 0)


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(-0.8, 0.8),
    c1=st.floats(-0.8, 0.8),
    c2=st.floats(-2.0, 2.0),
)
def test_property_isometry_and_roundtrip(a, c1, c2):
    grid = Grid.uniform(101)
    t = grid.points
    f = SampledFunction(grid, c1 * np.sin(2 * np.pi * t) + c2 * t + 0.3 * t * t)
    q = srsf_transform(f)
    g = smooth_warp(grid, a)
    nq = l2_norm(q.values, grid)
    if nq > 1e-3:
        assert abs(l2_norm(group_action(q, g).values, grid) - nq) / nq < 1e-3
    back = srsf_inverse(q)
    assert np.max(np.abs(back.values - f.values)) < 1e-3
