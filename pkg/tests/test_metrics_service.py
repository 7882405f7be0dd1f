import math

import numpy as np
import pytest

from app.exceptions import InsufficientDataError, InvalidInputError
from app.schemas.run_schema import Trajectory
from app.services.dynamics_service import DynamicsService
from app.services.geometry_service import GeometryService
from app.services.metrics_service import MetricsService


def _geometric_trajectory(h: float, samples: int) -> Trajectory:
    # distance to the origin halves every step
    direction = np.array([[0.6, 0.8]])
    k = np.arange(samples)
    x = (2.0 ** -k)[:, None, None] * direction[None]
    return Trajectory(times=h * k, x=x, zeta=x.copy())


class TestRateFit:
    def test_geometric_decay(self):
        h = 0.1
        fit = MetricsService.rate_fit(_geometric_trajectory(h, 40), np.zeros((1, 2)), t_tol=1e-12)
        assert fit.slope == pytest.approx(-math.log(2.0) / h, rel=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.samples >= 10

    def test_flat_tail_leaves_too_few_samples(self):
        with pytest.raises(InsufficientDataError):
            MetricsService.rate_fit(_geometric_trajectory(0.1, 40), np.zeros((1, 2)), t_tol=1e-3)

    @pytest.mark.slow
    def test_cournot_run_decays_exponentially(self, cournot, ring4):
        polys = [GeometryService.inscribe_regular(body, 8) for body in cournot.bodies]
        trajectory, report = DynamicsService.run(cournot, graph=ring4, beta1=0.1, beta2=1.0, polys=polys)
        assert report.converged
        fit = MetricsService.rate_fit(trajectory, report.x_final, t_tol=1e-3)
        assert fit.slope < 0
        assert fit.r_squared >= 0.9


class TestTrend:
    def test_rank_correlation(self):
        assert MetricsService.trend_rank_correlation([1, 2, 3, 4], [10, 20, 25, 40]) == pytest.approx(1.0)
        assert MetricsService.trend_rank_correlation([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_rank_correlation_needs_pairs(self):
        with pytest.raises(InsufficientDataError):
            MetricsService.trend_rank_correlation([1.0], [2.0])

    def test_published_flags(self):
        flags = {flag.m: flag for flag in MetricsService.published_flags({3: 1.0, 4: 8.491, 5: 0.7})}
        assert not flags[3].flagged
        assert flags[4].flagged
        assert flags[4].ratio == pytest.approx(10.0)
        assert flags[5].published is None and not flags[5].flagged


class TestPerturbation:
    def test_zero_without_approximation(self, cournot, rng):
        x = np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in cournot.bodies])
        assert MetricsService.perturbation_magnitude(cournot, cournot.bodies, x, x, 0.1) == 0.0

    @pytest.mark.parametrize("m", [3, 6, 12])
    def test_bounded_by_delta(self, cournot, rng, m):
        polys = [GeometryService.inscribe_regular(body, m) for body in cournot.bodies]
        delta = MetricsService.delta_for(cournot, MetricsService.hausdorff_vector(cournot, polys))
        assert math.isfinite(delta)
        for _ in range(200):
            x = np.array([GeometryService.sample_interior(poly, 1, rng)[0] for poly in polys])
            zeta = x + rng.normal(scale=2.0, size=x.shape)
            assert MetricsService.perturbation_magnitude(cournot, polys, x, zeta, 0.1) <= delta

    def test_finer_polygon_perturbs_less(self, cournot, rng):
        triangles = [GeometryService.inscribe_regular(body, 3) for body in cournot.bodies]
        octagons = [GeometryService.inscribe_regular(body, 8) for body in cournot.bodies]
        smaller = 0
        for _ in range(1000):
            x = np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in cournot.bodies])
            zeta = x + rng.normal(scale=2.0, size=x.shape)
            fine = MetricsService.perturbation_magnitude(cournot, octagons, x, zeta, 1.0)
            coarse = MetricsService.perturbation_magnitude(cournot, triangles, x, zeta, 1.0)
            smaller += fine <= coarse
        assert smaller >= 950

    def test_delta_infinite_outside_arc_domain(self, cournot):
        assert math.isinf(MetricsService.delta_for(cournot, [10.0] * cournot.N))


class TestEpsilon:
    def test_gaps_nonnegative(self, cournot, rng):
        x = np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in cournot.bodies])
        report = MetricsService.epsilon_measure(cournot, x)
        assert all(gap >= -1e-9 for gap in report.per_player_gaps)
        assert report.epsilon_hat == max(report.per_player_gaps)
        assert report.ne_distance is None and report.h_max is None

    def test_rejects_infeasible_profile(self, cournot):
        with pytest.raises(InvalidInputError):
            MetricsService.epsilon_measure(cournot, np.full((4, 2), 10.0))

    @pytest.mark.slow
    def test_coarser_polygons_give_larger_epsilon(self, cournot_boundary, ring4):
        reference = MetricsService.reference_equilibrium(cournot_boundary, ring4, 1.0, 1.0)
        exact = MetricsService.epsilon_measure(cournot_boundary, reference.x_final)
        assert exact.epsilon_hat <= 1e-4

        results = {}
        for m in (3, 12):
            polys = [GeometryService.inscribe_regular(body, m) for body in cournot_boundary.bodies]
            _, report = DynamicsService.run(cournot_boundary, graph=ring4, beta1=1.0, beta2=1.0, polys=polys, t_tol=1e-5)
            results[m] = MetricsService.epsilon_measure(
                cournot_boundary, report.x_final, reference=reference.x_final, polys=polys
            )
        assert results[3].epsilon_hat > results[12].epsilon_hat
        assert results[3].ne_distance > results[12].ne_distance
        assert results[3].delta_H > results[12].delta_H

    def test_reference_is_cached(self, cournot, ring4, monkeypatch):
        first = MetricsService.reference_equilibrium(cournot, ring4, 1.0, 1.0, h=0.05)

        def fail(*args, **kwargs):
            raise AssertionError("reference recomputed")

        monkeypatch.setattr(DynamicsService, "run", fail)
        assert MetricsService.reference_equilibrium(cournot, ring4, 1.0, 1.0, h=0.05) is first


def test_sigma_vanishes_on_consensus(cournot):
    x = np.random.default_rng(0).normal(size=(3, 4, 2))
    Q = x.mean(axis=1, keepdims=True)
    trajectory = Trajectory(times=np.arange(3.0), x=x, zeta=np.repeat(Q, 4, axis=1))
    np.testing.assert_allclose(MetricsService.sigma_trajectory(trajectory, cournot), 0.0, atol=1e-15)
