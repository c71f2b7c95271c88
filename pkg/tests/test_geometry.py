import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.errors import (
    BadSpec,
    CuspAtVertex,
    DegenerateEdge,
    DegenerateStencil,
    LengthMismatch,
)
from curveflow.geometry import (
    FlowParams,
    GeometricCache,
    PolygonalCurve,
    discrete_curvature,
    discrete_inner_product,
    edge_quantities,
    functionals,
    mesh_ratio,
    periodic_difference,
    polygon_area,
    tangential_velocity,
    vertex_tangents,
)
from conftest import random_valid_curve, regular_polygon, unit_square


def ngon_curvature(n: int, radius: float) -> float:
    """Closed-form curvature of a regular n-gon of circumradius R.

    Tends to 1/R as n grows; derived by direct evaluation of the central
    difference stencils on X_j = R (cos(2 pi j / n), sin(2 pi j / n)).
    """
    return 2.0 / (radius * (1.0 + np.cos(2.0 * np.pi / n)))


class TestPeriodicDifference:
    @pytest.mark.parametrize("mode", ["forward", "backward", "central1", "central2"])
    def test_constant_maps_to_zero(self, mode):
        values = np.full(7, 3.25)
        np.testing.assert_array_equal(
            periodic_difference(values, mode, 1.0 / 7), np.zeros(7)
        )

    def test_ramp_central1(self):
        # v = (1, 2, 3, 4) treated periodically; at the second entry the
        # neighbors are 3 and 1, so central1 gives (3 - 1) / (2 * 0.25) = 4.
        values = np.array([1.0, 2.0, 3.0, 4.0])
        out = periodic_difference(values, "central1", 0.25)
        assert out[1] == pytest.approx(4.0)

    def test_unit_square_central2_divides_by_du_once(self):
        out = periodic_difference(unit_square(), "central2", 0.25)
        np.testing.assert_allclose(out[1], [-4.0, 4.0])

    def test_forward_backward_shift(self, rng):
        values = rng.standard_normal(9)
        fwd = periodic_difference(values, "forward", 1.0 / 9)
        bwd = periodic_difference(values, "backward", 1.0 / 9)
        np.testing.assert_allclose(np.roll(fwd, 1), bwd, atol=1e-14)

    def test_central1_is_antisymmetric(self, rng):
        # sum a * d1(b) = -sum d1(a) * b on periodic arrays: the identity
        # the gradient assembly's summation by parts relies on.
        a, b = rng.standard_normal((2, 11))
        du = 1.0 / 11
        lhs = np.sum(a * periodic_difference(b, "central1", du))
        rhs = -np.sum(periodic_difference(a, "central1", du) * b)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_central2_is_symmetric(self, rng):
        a, b = rng.standard_normal((2, 11))
        du = 1.0 / 11
        lhs = np.sum(a * periodic_difference(b, "central2", du))
        rhs = np.sum(periodic_difference(a, "central2", du) * b)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            periodic_difference(np.zeros(5), "upwind", 0.2)


class TestEdgeQuantities:
    def test_unit_square(self):
        r, t = edge_quantities(unit_square())
        np.testing.assert_allclose(r, np.ones(4))
        np.testing.assert_allclose(
            t, [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], atol=1e-15
        )

    def test_regular_hexagon_side_length(self):
        # side of a regular n-gon is 2 R sin(pi/n); exactly 1 at n=6, R=1
        r, t = edge_quantities(regular_polygon(6, radius=1.0))
        np.testing.assert_allclose(r, np.ones(6), rtol=1e-14)
        np.testing.assert_allclose(np.hypot(t[:, 0], t[:, 1]), 1.0, rtol=1e-14)

    def test_coincident_vertices_raise(self):
        x = unit_square()
        x = np.vstack([x, x[-1]])  # repeated last vertex
        with pytest.raises(DegenerateEdge):
            edge_quantities(x)


class TestVertexTangents:
    def test_unit_square_corner(self):
        _, t = edge_quantities(unit_square())
        T = vertex_tangents(t)
        # at vertex (1,1): incoming tangent (0,1), outgoing (-1,0)
        np.testing.assert_allclose(T[2], np.array([-1.0, 1.0]) / np.sqrt(2))

    def test_collinear_edges_identity(self):
        t = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        T = vertex_tangents(t)
        np.testing.assert_allclose(T[0], [1.0, 0.0])

    def test_hairpin_raises(self):
        t = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        with pytest.raises(CuspAtVertex):
            vertex_tangents(t)

    def test_unit_norm(self, rng):
        _, t = edge_quantities(random_valid_curve(rng, 12))
        T = vertex_tangents(t)
        np.testing.assert_allclose(np.hypot(T[:, 0], T[:, 1]), 1.0, atol=1e-12)


class TestDiscreteCurvature:
    @pytest.mark.parametrize("n", [4, 8, 16, 64, 256, 512])
    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_regular_polygon_closed_form(self, n, radius):
        k, g = discrete_curvature(regular_polygon(n, radius))
        # the second-difference chord cancellation costs ~eps/theta^2, which
        # reaches ~1.5e-12 relative at n = 512; 1e-12 holds through n = 256
        rtol = 1e-12 if n <= 256 else 4e-12
        np.testing.assert_allclose(k, ngon_curvature(n, radius), rtol=rtol)
        assert np.all(g > 0)

    def test_continuum_limit(self):
        # k -> 1/R: within 1e-3 of 2.0 on a 256-gon of radius 0.5
        k, _ = discrete_curvature(regular_polygon(256, radius=0.5))
        np.testing.assert_allclose(k, 2.0, atol=1e-3)

    def test_unit_square_value(self):
        k, _ = discrete_curvature(unit_square())
        np.testing.assert_allclose(k, 2.0 * np.sqrt(2.0), rtol=1e-14)

    def test_degenerate_stencil(self):
        x = np.array(
            [[0.0, 0.0], [1.0, 0.0], [1e-15, 1e-16], [1.0, 1.0], [0.0, 1.0]]
        )
        with pytest.raises(DegenerateStencil):
            discrete_curvature(x)


class TestFunctionals:
    def test_unit_square(self):
        # the square's curvature is 2*sqrt(2) at every vertex, so the bending
        # integrand vanishes at c0 = 2*sqrt(2)
        b, length, area, r_hat = functionals(unit_square(), c0=2.0 * np.sqrt(2.0))
        assert b == pytest.approx(0.0, abs=1e-26)
        assert length == pytest.approx(4.0)
        assert area == pytest.approx(1.0)
        np.testing.assert_allclose(r_hat, np.ones(4))

    def test_translation_invariance(self, rng):
        x = random_valid_curve(rng, 20)
        b0, l0, a0, _ = functionals(x, c0=1.5)
        b1, l1, a1, _ = functionals(x + np.array([3.7, -2.2]), c0=1.5)
        np.testing.assert_allclose([b1, l1, a1], [b0, l0, a0], rtol=1e-12)

    def test_near_minimizer_energy(self):
        # 64-gon of radius 0.5 at c0 = 2: nearly flat energy
        b, _, _, _ = functionals(regular_polygon(64, radius=0.5), c0=2.0)
        assert b < 1e-3

    def test_weights_sum_to_length(self, rng):
        x = random_valid_curve(rng, 17)
        r, _ = edge_quantities(x)
        _, length, _, r_hat = functionals(x, c0=0.0)
        assert np.sum(r_hat) == pytest.approx(length, rel=1e-14)
        assert np.sum(r) == pytest.approx(length, rel=1e-14)

    def test_polygon_area_of_ngon(self):
        # (1/2) n R^2 sin(2 pi / n)
        n, radius = 64, 0.5
        expected = 0.5 * n * radius**2 * np.sin(2.0 * np.pi / n)
        assert polygon_area(regular_polygon(n, radius)) == pytest.approx(expected)


class TestInnerProduct:
    def test_zero(self):
        z = np.zeros((6, 2))
        assert discrete_inner_product(z, z, np.ones(6)) == 0.0

    def test_unweighted_norm(self, rng):
        u = rng.standard_normal((8, 2))
        assert discrete_inner_product(u, u, np.ones(8)) == pytest.approx(
            np.sum(u**2)
        )

    def test_symmetry(self, rng):
        u, v = rng.standard_normal((2, 9, 2))
        w = rng.uniform(0.1, 2.0, 9)
        assert discrete_inner_product(u, v, w) == discrete_inner_product(v, u, w)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            discrete_inner_product(np.zeros((4, 2)), np.zeros((5, 2)), np.ones(4))


class TestTangentialVelocity:
    def test_uniform_polygon_vanishes(self):
        w = tangential_velocity(regular_polygon(16), alpha=7.0)
        np.testing.assert_allclose(w, 0.0, atol=1e-12)

    def test_zero_alpha(self, rng):
        w = tangential_velocity(random_valid_curve(rng, 10), alpha=0.0)
        np.testing.assert_array_equal(w, np.zeros(10))

    def test_matches_edge_length_form(self, rng):
        # the backward difference of 1/|d+X| collapses to
        # alpha * (1/r_i - 1/r_{i+1})
        x = random_valid_curve(rng, 14)
        r, _ = edge_quantities(x)
        expected = 3.0 * (1.0 / r - 1.0 / np.roll(r, -1))
        np.testing.assert_allclose(
            tangential_velocity(x, alpha=3.0), expected, rtol=1e-12
        )

    def test_pushes_toward_longer_side(self):
        # vertex 1 has a backward edge of length 1 and a forward edge of
        # length 2: w_1 > 0 moves it along +T (toward the longer side)
        x = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [3.0, 1.5], [0.0, 1.5]])
        w = tangential_velocity(x, alpha=1.0)
        assert w[1] == pytest.approx(1.0 / 1.0 - 1.0 / 2.0)
        assert w[1] > 0


class TestEuclideanInvariance:
    @settings(max_examples=25, deadline=None)
    @given(
        angle=st.floats(-np.pi, np.pi),
        dx=st.floats(-5, 5),
        dy=st.floats(-5, 5),
    )
    def test_rigid_motion_preserves_geometry(self, angle, dx, dy):
        x = random_valid_curve(np.random.default_rng(42), 18)
        rot = np.array(
            [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
        )
        y = x @ rot.T + np.array([dx, dy])
        kx, _ = discrete_curvature(x)
        ky, _ = discrete_curvature(y)
        np.testing.assert_allclose(ky, kx, rtol=1e-9, atol=1e-12)
        bx, lx, ax, _ = functionals(x, c0=2.0)
        by, ly, ay, _ = functionals(y, c0=2.0)
        np.testing.assert_allclose([by, ly, ay], [bx, lx, ax], rtol=1e-9, atol=1e-12)

    def test_reflection_flips_curvature_and_area(self, rng):
        x = random_valid_curve(rng, 18)
        y = x * np.array([1.0, -1.0])
        np.testing.assert_allclose(
            discrete_curvature(y)[0], -discrete_curvature(x)[0], rtol=1e-12
        )
        assert polygon_area(y) == pytest.approx(-polygon_area(x), rel=1e-12)

    def test_orientation_reversal(self, rng):
        x = random_valid_curve(rng, 18)
        y = x[::-1].copy()
        assert polygon_area(y) == pytest.approx(-polygon_area(x), rel=1e-12)
        kx, _ = discrete_curvature(x)
        ky, _ = discrete_curvature(y)
        np.testing.assert_allclose(np.sort(ky), np.sort(-kx), rtol=1e-12)


class TestPolygonalCurve:
    def test_too_few_vertices(self):
        with pytest.raises(BadSpec):
            PolygonalCurve(unit_square())

    def test_nan_rejected(self):
        x = regular_polygon(8)
        x[3, 0] = np.nan
        with pytest.raises(BadSpec):
            PolygonalCurve(x)

    def test_clockwise_rejected_by_default(self):
        with pytest.raises(BadSpec):
            PolygonalCurve(regular_polygon(8)[::-1])

    def test_clockwise_flipped_with_warning(self):
        with pytest.warns(UserWarning):
            curve = PolygonalCurve.from_vertices(
                regular_polygon(8)[::-1], on_clockwise="flip"
            )
        assert polygon_area(curve.vertices) > 0

    def test_vertices_read_only(self):
        curve = PolygonalCurve(regular_polygon(8))
        with pytest.raises(ValueError):
            curve.vertices[0, 0] = 99.0

    def test_flow_params_validation(self):
        with pytest.raises(BadSpec):
            FlowParams(c0=2.0, alpha=1.0, dt=0.0)
        with pytest.raises(BadSpec):
            FlowParams(c0=2.0, alpha=-1.0, dt=1e-4)


class TestGeometricCache:
    def test_unit_tangents_and_consistency(self, rng):
        x = random_valid_curve(rng, 24)
        cache = GeometricCache.compute(x, c0=2.0)
        np.testing.assert_allclose(np.hypot(cache.t[:, 0], cache.t[:, 1]), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.hypot(cache.T[:, 0], cache.T[:, 1]), 1.0, atol=1e-12)
        assert np.all(cache.r_hat > 0)
        b, length, area, _ = functionals(x, c0=2.0)
        assert (cache.B, cache.L, cache.A) == (b, length, area)
        assert cache.du == pytest.approx(1.0 / 24)

    def test_mesh_ratio_range(self, rng):
        assert 0 < mesh_ratio(random_valid_curve(rng, 16)) <= 1.0
        assert mesh_ratio(regular_polygon(32)) == pytest.approx(1.0)
