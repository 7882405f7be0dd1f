import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.exceptions import DomainError, InvalidInputError
from app.schemas.geometry_schema import ConvexBody
from app.services.geometry_service import GeometryService


class TestSupport:
    def test_support_point_on_axes(self, ellipse):
        assert_allclose(GeometryService.support_point(ellipse, [1.0, 0.0]), [4.0, 0.0], atol=1e-15)
        assert_allclose(GeometryService.support_point(ellipse, [0.0, -1.0]), [0.0, -3.0], atol=1e-15)

    def test_support_point_lies_on_boundary(self, ellipse, rng):
        for angle in rng.uniform(0, 2 * math.pi, size=50):
            point = GeometryService.support_point(ellipse, [math.cos(angle), math.sin(angle)])
            assert abs(GeometryService.membership_residual(ellipse, point)) <= 1e-12

    def test_support_value_matches_support_point(self, ellipse):
        u = np.array([0.6, 0.8])
        point = GeometryService.support_point(ellipse, u)
        assert GeometryService.support_value(ellipse, u) == pytest.approx(float(u @ point), abs=1e-12)

    @pytest.mark.parametrize("u", [[0.0, 0.0], [1.0, 1.0]])
    def test_support_point_rejects_non_unit(self, ellipse, u):
        with pytest.raises(InvalidInputError):
            GeometryService.support_point(ellipse, u)

    def test_polyhedron_support_without_vertices_uses_lp(self, ellipse):
        box = GeometryService.inscribe_box(ellipse)
        half = 4.0 / math.sqrt(2.0)
        assert GeometryService.support_value(box, [1.0, 0.0]) == pytest.approx(half, abs=1e-9)


class TestProjectExact:
    def test_interior_point_is_fixed(self, ellipse):
        z = np.array([1.0, -1.0])
        assert_allclose(GeometryService.project_exact(ellipse, z), z)

    def test_ball_closed_form(self):
        ball = ConvexBody.ball(2.0, 3)
        assert_allclose(GeometryService.project_exact(ball, [0.0, 0.0, 10.0]), [0.0, 0.0, 2.0], atol=1e-14)

    def test_axis_points_project_to_vertices(self, ellipse):
        assert_allclose(GeometryService.project_exact(ellipse, [9.0, 0.0]), [4.0, 0.0], atol=1e-10)
        assert_allclose(GeometryService.project_exact(ellipse, [0.0, -7.0]), [0.0, -3.0], atol=1e-10)

    def test_exterior_projection_satisfies_kkt(self, ellipse, rng):
        for z in rng.uniform(-10, 10, size=(100, 2)):
            x = GeometryService.project_exact(ellipse, z)
            assert GeometryService.membership_residual(ellipse, x) <= 1e-10
            assert GeometryService.kkt_residual_exact(ellipse, z, x) <= 1e-8

    def test_matches_boundary_sampling(self, ellipse, rng):
        theta = np.linspace(0.0, 2.0 * math.pi, 1_000_000, endpoint=False)
        boundary = np.column_stack([4.0 * np.cos(theta), 3.0 * np.sin(theta)])
        checked = 0
        while checked < 100:
            z = rng.uniform(-10.0, 10.0, size=2)
            if GeometryService.membership_residual(ellipse, z) <= 0.0:
                continue
            checked += 1
            x = GeometryService.project_exact(ellipse, z)
            distances = np.linalg.norm(boundary - z, axis=1)
            best = int(np.argmin(distances))
            assert abs(float(np.linalg.norm(x - z)) - float(distances[best])) <= 1e-5
            # sample spacing along the ellipse is at most 2.5e-5
            assert np.linalg.norm(x - boundary[best]) <= 1e-5 + 2.5e-5
            assert GeometryService.kkt_residual_exact(ellipse, z, x) <= 1e-8

    def test_nonexpansive_and_idempotent(self, ellipse, rng):
        points = rng.uniform(-10, 10, size=(60, 2))
        for a, b in zip(points[:30], points[30:]):
            pa = GeometryService.project_exact(ellipse, a)
            pb = GeometryService.project_exact(ellipse, b)
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-10
            assert_allclose(GeometryService.project_exact(ellipse, pa), pa, atol=1e-10)


class TestInscribed:
    def test_square_offsets(self, square):
        assert square.p == 4
        assert_allclose(square.b, np.full(4, 1.0 / math.sqrt(2.0)), atol=1e-15)
        assert_allclose(np.linalg.norm(square.B, axis=1), 1.0, atol=1e-15)

    def test_regular_vertices_on_boundary(self, ellipse):
        poly = GeometryService.inscribe_regular(ellipse, 7)
        assert poly.s == 7
        for vertex in poly.vertices:
            assert abs(GeometryService.membership_residual(ellipse, vertex)) <= 1e-12
        assert_allclose(poly.vertices[0], [4.0, 0.0])

    def test_regular_needs_two_dimensions(self, ellipsoid3):
        with pytest.raises(InvalidInputError):
            GeometryService.inscribe_regular(ellipsoid3, 6)

    def test_regular_needs_three_vertices(self, ellipse):
        with pytest.raises(InvalidInputError):
            GeometryService.inscribe_regular(ellipse, 2)

    def test_box_is_inscribed(self, ellipsoid3):
        box = GeometryService.inscribe_box(ellipsoid3)
        assert box.p == 6 and box.s == 0
        corner = ellipsoid3.semiaxes / math.sqrt(3.0)
        assert GeometryService.membership_residual(ellipsoid3, corner) == pytest.approx(0.0, abs=1e-12)

    def test_cross_polytope(self, ellipsoid3):
        poly = GeometryService.inscribe_cross_polytope(ellipsoid3)
        assert poly.p == 8 and poly.s == 6
        assert_allclose(np.linalg.norm(poly.B, axis=1), 1.0, atol=1e-14)
        for vertex in poly.vertices:
            assert abs(GeometryService.membership_residual(ellipsoid3, vertex)) <= 1e-12
        # every facet touches three axis vertices
        slack = poly.vertices @ poly.B.T - poly.b
        assert np.all(np.sum(np.abs(slack) <= 1e-12, axis=0) == 3)

    def test_greedy_2d_gaps_shrink(self, ellipse):
        poly = GeometryService.inscribe_greedy(ellipse, 12)
        assert poly.s == 12
        gaps = np.array(poly.construction_gaps)
        assert len(gaps) == 12 - 2
        assert np.all(np.diff(gaps) <= 1e-12)
        assert gaps[-1] < gaps[0]
        for vertex in poly.vertices:
            assert abs(GeometryService.membership_residual(ellipse, vertex)) <= 1e-10

    def test_greedy_competitive_with_regular(self, ellipse):
        greedy = GeometryService.hausdorff_estimate(ellipse, GeometryService.inscribe_greedy(ellipse, 12)).value
        regular = GeometryService.hausdorff_estimate(ellipse, GeometryService.inscribe_regular(ellipse, 12)).value
        assert greedy <= 1.5 * regular

    def test_greedy_3d(self, ellipsoid3):
        poly = GeometryService.inscribe_greedy(ellipsoid3, 14)
        assert poly.dim == 3 and poly.s == 14
        assert poly.construction_gaps[-1] < poly.construction_gaps[0]
        for vertex in poly.vertices:
            assert abs(GeometryService.membership_residual(ellipsoid3, vertex)) <= 1e-10

    def test_greedy_from_tetrahedron_in_unit_ball(self):
        ball = ConvexBody.ball(1.0, 3)
        tetrahedron = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3.0)
        poly = GeometryService.inscribe_greedy(ball, 8, seed=tetrahedron)
        assert poly.s == 8
        assert_allclose(np.linalg.norm(poly.vertices, axis=1), 1.0, atol=1e-12)
        gaps = np.array(poly.construction_gaps)
        assert len(gaps) == 8 - 4 + 1
        assert gaps[0] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert np.all(np.diff(gaps) <= 1e-12)
        assert gaps[-1] < gaps[0]

    def test_greedy_rejects_interior_seed(self, ellipse):
        seed = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]])
        with pytest.raises(InvalidInputError):
            GeometryService.inscribe_greedy(ellipse, 6, seed=seed)

    def test_greedy_rejects_degenerate_seed(self, ellipse):
        seed = np.array([[4.0, 0.0], [-4.0, 0.0], [4.0, 0.0]])
        with pytest.raises(InvalidInputError):
            GeometryService.inscribe_greedy(ellipse, 6, seed=seed)


class TestPolyhedronSchema:
    def test_rejects_non_unit_rows(self):
        with pytest.raises(InvalidInputError):
            GeometryService._build(np.array([[2.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
                                   np.ones(4), np.empty((0, 0)))

    def test_rejects_unbounded(self):
        with pytest.raises(InvalidInputError):
            GeometryService._build(np.array([[1.0, 0.0]]), np.array([1.0]), np.empty((0, 0)))

    def test_text_round_trip(self, ellipse):
        poly = GeometryService.inscribe_regular(ellipse, 6)
        parsed = GeometryService.polyhedron_from_text(GeometryService.polyhedron_to_text(poly))
        assert_allclose(parsed.B, poly.B, rtol=0, atol=0)
        assert_allclose(parsed.b, poly.b, rtol=0, atol=0)
        assert_allclose(parsed.vertices, poly.vertices, rtol=0, atol=0)

    def test_text_header_mismatch(self):
        with pytest.raises(InvalidInputError):
            GeometryService.polyhedron_from_text("2 2\n1 0 1\n0\n")


class TestHausdorff:
    def test_hexagon_in_unit_circle(self, unit_circle):
        poly = GeometryService.inscribe_regular(unit_circle, 6)
        estimate = GeometryService.hausdorff_estimate(unit_circle, poly)
        assert estimate.refined
        assert estimate.value == pytest.approx(1.0 - math.cos(math.pi / 6.0), abs=1e-9)

    @pytest.mark.parametrize("shape", ["regular", "greedy"])
    def test_direction_attains_the_gap(self, ellipse, ellipsoid3, shape):
        if shape == "regular":
            body, poly = ellipse, GeometryService.inscribe_regular(ellipse, 7)
        else:
            body, poly = ellipsoid3, GeometryService.inscribe_greedy(ellipsoid3, 10)
        estimate = GeometryService.hausdorff_estimate(body, poly)
        u = np.array(estimate.direction)
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)
        gap = GeometryService.support_value(body, u) - GeometryService.support_value(poly, u)
        assert gap == pytest.approx(estimate.value, abs=1e-9)

    @pytest.mark.parametrize("m", [8, 16, 32, 64])
    def test_inverse_square_rate(self, unit_circle, m):
        value = GeometryService.hausdorff_estimate(unit_circle, GeometryService.inscribe_regular(unit_circle, m)).value
        assert 4.0 <= value * m * m <= 5.5

    def test_decreases_with_vertices(self, ellipse):
        values = [
            GeometryService.hausdorff_estimate(ellipse, GeometryService.inscribe_regular(ellipse, m)).value
            for m in (3, 4, 6, 8, 10, 12)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_box_uses_facet_normals(self, ellipsoid3):
        estimate = GeometryService.hausdorff_estimate(ellipsoid3, GeometryService.inscribe_box(ellipsoid3))
        assert not estimate.refined
        assert estimate.resolution == 6
        assert_allclose(np.abs(estimate.direction), [1.0, 0.0, 0.0])
        assert estimate.value == pytest.approx(5.0 - 5.0 / math.sqrt(3.0), abs=1e-12)

    def test_rejects_vertex_outside(self, unit_circle):
        big = GeometryService.inscribe_regular(ConvexBody.ball(2.0, 2), 4)
        with pytest.raises(InvalidInputError):
            GeometryService.hausdorff_estimate(unit_circle, big)


class TestDeltaBound:
    def test_single_player_value(self):
        expected = 2.0 * (2.0 * math.pi / 3.0 + 0.5)
        assert GeometryService.delta_bound([0.5], [1.0], 1.0) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(5.18879, abs=1e-5)

    def test_zero_h(self):
        assert GeometryService.delta_bound([0.0, 0.0], [1.0, 2.0], 1.0) == 0.0

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            GeometryService.delta_bound([3.0], [1.0], 1.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            GeometryService.delta_bound([0.1, 0.2], [1.0], 1.0)

    def test_curvature(self, ellipse):
        assert GeometryService.curvature_nu(ConvexBody.ball(4.0, 2)) == pytest.approx(0.25)
        assert GeometryService.curvature_nu(ellipse) == pytest.approx(4.0 / 9.0)


def test_sample_interior_is_feasible(ellipse, rng):
    points = GeometryService.sample_interior(ellipse, 500, rng)
    assert points.shape == (500, 2)
    assert all(GeometryService.membership_residual(ellipse, p) <= 1e-12 for p in points)
    poly = GeometryService.inscribe_regular(ellipse, 5)
    inside = GeometryService.sample_interior(poly, 200, rng)
    assert np.all(inside @ poly.B.T <= poly.b + 1e-12)
