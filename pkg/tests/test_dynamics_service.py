import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.exceptions import InvalidInputError
from app.middleware.gain_gate import GainGate
from app.schemas.run_schema import SolverState, StepStats
from app.services.dynamics_service import DynamicsService
from app.services.game_service import GameService
from app.services.geometry_service import GeometryService
from app.services.network_service import NetworkService


@pytest.fixture
def octagons(cournot):
    return [GeometryService.inscribe_regular(body, 8) for body in cournot.bodies]


class TestInitialState:
    def test_center_start(self, cournot):
        state = DynamicsService.initial_state(cournot, cournot.bodies)
        assert_allclose(state.x, 0.0)
        assert_allclose(state.phi, 0.0)
        assert_allclose(state.zeta, GameService.local_aggregates(cournot, state.x))

    def test_random_start_is_feasible_and_seeded(self, cournot, octagons):
        a = DynamicsService.initial_state(cournot, octagons, init="random", seed=4)
        b = DynamicsService.initial_state(cournot, octagons, init="random", seed=4)
        assert_allclose(a.x, b.x)
        for poly, x_i in zip(octagons, a.x):
            assert np.all(poly.B @ x_i <= poly.b + 1e-10)

    def test_set_count_checked(self, cournot, octagons):
        with pytest.raises(InvalidInputError):
            DynamicsService.initial_state(cournot, octagons[:2])


class TestSteps:
    def test_approx_steps_stay_inside_polyhedrons(self, cournot_boundary, ring4):
        polys = [GeometryService.inscribe_regular(body, 6) for body in cournot_boundary.bodies]
        state = DynamicsService.initial_state(cournot_boundary, polys)
        stats = StepStats()
        for _ in range(200):
            state = DynamicsService.step_approx(cournot_boundary, polys, ring4, 0.1, 1.0, state, 0.05, stats)
            for poly, x_i in zip(polys, state.x):
                assert np.all(poly.B @ x_i <= poly.b + 1e-9)
        assert stats.projections == 200 * cournot_boundary.N

    def test_consensus_conserves_phi_sum(self, cournot, ring4):
        state = DynamicsService.initial_state(cournot, cournot.bodies, init="random", seed=0)
        for _ in range(100):
            state = DynamicsService.step_exact(cournot, ring4, 0.1, 1.0, state, 0.01)
            assert np.abs(state.phi.sum(axis=0)).max() <= 1e-12
            assert_allclose(state.zeta.mean(axis=0), GameService.aggregate(cournot, state.x), atol=1e-12)

    def test_exact_steps_stay_inside_bodies(self, cournot_boundary, ring4):
        state = DynamicsService.initial_state(cournot_boundary, cournot_boundary.bodies)
        for _ in range(100):
            state = DynamicsService.step_exact(cournot_boundary, ring4, 0.5, 1.0, state, 0.1)
        for body, x_i in zip(cournot_boundary.bodies, state.x):
            assert GeometryService.membership_residual(body, x_i) <= 1e-10

    def test_exact_and_approx_agree_on_polyhedral_sets(self, cournot_boundary, ring4):
        polys = [GeometryService.inscribe_regular(body, 8) for body in cournot_boundary.bodies]
        polytope_game = cournot_boundary.model_copy(update={"bodies": tuple(polys)})
        approx = exact = DynamicsService.initial_state(polytope_game, polys, init="random", seed=5)
        for _ in range(100):
            approx = DynamicsService.step_approx(polytope_game, polys, ring4, 0.5, 1.0, approx, 0.05, warm_start=False)
            exact = DynamicsService.step_exact(polytope_game, ring4, 0.5, 1.0, exact, 0.05)
            assert_allclose(approx.x, exact.x, atol=1e-10)
            assert_allclose(approx.zeta, exact.zeta, atol=1e-10)

    def test_equilibrium_is_a_fixed_point(self, cournot_boundary, ring4):
        _, report = DynamicsService.run(
            cournot_boundary, graph=ring4, beta1=1.0, beta2=1.0, mode="exact", h=0.05, t_tol=1e-9, max_steps=200_000
        )
        assert report.converged
        x = report.x_final
        zeta = np.repeat(GameService.aggregate(cournot_boundary, x)[None, :], cournot_boundary.N, axis=0)
        phi = zeta - GameService.local_aggregates(cournot_boundary, x)
        state = SolverState(t=0.0, x=x, phi=phi, zeta=zeta, y=x.copy())
        nxt = DynamicsService.step_exact(cournot_boundary, ring4, 1.0, 1.0, state, 0.01)
        assert_allclose(nxt.x, x, atol=1e-10)
        assert_allclose(nxt.zeta, zeta, atol=1e-10)

    def test_nonpositive_step(self, cournot, ring4):
        state = DynamicsService.initial_state(cournot, cournot.bodies)
        with pytest.raises(InvalidInputError):
            DynamicsService.step_exact(cournot, ring4, 0.1, 1.0, state, 0.0)


class TestRun:
    def test_exact_run_converges(self, cournot, ring4):
        trajectory, report = DynamicsService.run(cournot, graph=ring4, beta1=1.0, beta2=1.0, mode="exact")
        assert report.converged
        assert max(report.terminal_residuals) <= 1e-3
        assert trajectory.samples == report.steps + 1
        assert GameService.vi_residual(cournot, report.x_final) <= 1e-2
        sigma = np.abs(report.zeta_final - GameService.aggregate(cournot, report.x_final)).max()
        assert sigma <= cournot.N * 1e-3

    def test_approx_run_ends_inside_polyhedrons(self, cournot, ring4, octagons):
        _, report = DynamicsService.run(cournot, graph=ring4, beta1=1.0, beta2=1.0, polys=octagons)
        assert report.converged
        assert report.mode == "approx"
        for poly, x_i in zip(octagons, report.x_final):
            assert np.all(poly.B @ x_i <= poly.b + 1e-9)

    def test_certificate_attached(self, cournot, ring4):
        _, report = DynamicsService.run(cournot, graph=ring4, beta1=0.1, beta2=1.0, mode="exact", max_steps=3)
        assert report.certificate is not None
        assert report.certificate.ok
        assert report.certificate.beta1 == 0.1

    def test_step_budget_reports_nonconvergence(self, cournot, ring4):
        trajectory, report = DynamicsService.run(
            cournot, graph=ring4, beta1=0.1, beta2=1.0, mode="exact", max_steps=10, record_every=3
        )
        assert not report.converged
        assert report.steps == 10
        # initial state, steps 3, 6, 9 and the final step
        assert_allclose(trajectory.times, [0.0, 0.03, 0.06, 0.09, 0.10], atol=1e-12)

    def test_single_step_budget(self, cournot, ring4):
        trajectory, report = DynamicsService.run(cournot, graph=ring4, beta1=0.1, beta2=1.0, mode="exact", max_steps=1)
        assert not report.converged
        assert report.steps == 1
        assert_allclose(trajectory.times, [0.0, 0.01])

    def test_rk4_runs(self, cournot, ring4):
        _, report = DynamicsService.run(
            cournot, graph=ring4, beta1=0.1, beta2=1.0, mode="exact", integrator="rk4", max_steps=20
        )
        assert report.integrator == "rk4"
        assert report.steps == 20

    def test_reproducible(self, cournot, ring4, octagons):
        kwargs = dict(graph=ring4, beta1=0.5, beta2=1.0, polys=octagons, init="random", seed=11, max_steps=200)
        a, _ = DynamicsService.run(cournot, **kwargs)
        b, _ = DynamicsService.run(cournot, **kwargs)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.zeta, b.zeta)

    def test_warm_start_matches_cold_start(self, cournot_boundary, ring4):
        polys = [GeometryService.inscribe_regular(body, 8) for body in cournot_boundary.bodies]
        kwargs = dict(graph=ring4, beta1=1.0, beta2=1.0, polys=polys, max_steps=300, t_tol=1e-12)
        warm, _ = DynamicsService.run(cournot_boundary, warm_start=True, **kwargs)
        cold, _ = DynamicsService.run(cournot_boundary, warm_start=False, **kwargs)
        assert_allclose(warm.x, cold.x, atol=1e-8)
        assert_allclose(warm.zeta, cold.zeta, atol=1e-8)

    def test_approx_needs_polyhedrons(self, cournot, ring4):
        with pytest.raises(InvalidInputError):
            DynamicsService.run(cournot, graph=ring4, beta1=0.1, beta2=1.0)

    def test_graph_size_checked(self, cournot):
        with pytest.raises(InvalidInputError):
            DynamicsService.run(cournot, graph=NetworkService.ring(4 + 1), beta1=0.1, beta2=1.0, mode="exact")


def test_gain_gate_warns_and_continues(cournot, ring4, caplog):
    with caplog.at_level(logging.WARNING, logger="app.middleware.gain_gate"):
        certificate = GainGate.check(cournot, ring4, 3.0, 1.0)
    assert not certificate.ok
    assert "beta1=3.0" in caplog.text
