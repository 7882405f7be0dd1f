import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from app.exceptions import ConfigError, InvalidInputError
from app.models.registry import build_model
from app.schemas.game_schema import AggregativeGame, GameConstants
from app.schemas.geometry_schema import ConvexBody
from app.services.game_service import GameService
from app.services.geometry_service import GeometryService


def _profile(game, rng):
    return np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in game.bodies])


class TestAggregates:
    def test_aggregate_is_mean(self, cournot):
        x = np.arange(8.0).reshape(4, 2) / 10.0
        assert_allclose(GameService.aggregate(cournot, x), x.mean(axis=0))

    def test_flat_profile_accepted(self, cournot):
        x = np.arange(8.0) / 10.0
        assert_allclose(GameService.aggregate(cournot, x), x.reshape(4, 2).mean(axis=0))

    def test_wrong_size(self, cournot):
        with pytest.raises(InvalidInputError):
            GameService.aggregate(cournot, np.zeros(7))


class TestUMap:
    def test_cournot_closed_form(self, cournot):
        x_i = np.array([1.0, -2.0])
        zeta_i = np.array([0.5, 0.25])
        for i in range(cournot.N):
            expected = (1.0 + 0.01 / 4) * x_i + 0.5 * (13.0 - (i + 1)) - 4.0 + 0.01 * zeta_i
            assert_allclose(GameService.u_map(cournot, i, x_i, zeta_i), expected, atol=1e-14)

    def test_demand_response_closed_form(self, demand_response):
        x_i = np.array([1.0, 2.0, -1.0])
        zeta_i = np.array([0.1, 0.2, 0.3])
        i = 2
        target = 0.5 * (10 - (i + 1))
        expected = 2 * 0.05 * (x_i - target) + 0.001 * 10 * zeta_i + 1.0 + 0.001 * x_i
        assert_allclose(GameService.u_map(demand_response, i, x_i, zeta_i), expected, atol=1e-14)

    def test_shape_checked(self, cournot):
        with pytest.raises(InvalidInputError):
            GameService.u_map(cournot, 0, np.zeros(3), np.zeros(2))

    def test_pseudo_gradient_is_u_at_true_aggregate(self, cournot, rng):
        x = _profile(cournot, rng)
        Q = GameService.aggregate(cournot, x)
        assert_allclose(GameService.pseudo_gradient(cournot, x),
                        GameService.u_stack(cournot, x, np.tile(Q, (cournot.N, 1))), atol=1e-15)

    @pytest.mark.parametrize("fixture", ["cournot", "demand_response"])
    def test_pseudo_gradient_matches_finite_differences(self, fixture, request, rng):
        game = request.getfixturevalue(fixture)
        x = _profile(game, rng)
        F = GameService.pseudo_gradient(game, x)
        for i in range(game.N):
            assert_allclose(GameService.numeric_gradient(game, i, x), F[i], atol=1e-6)

    def test_payoff_only_game_uses_finite_differences(self, cournot, rng):
        payoff_only = AggregativeGame(
            name="cournot_fd",
            N=cournot.N, n=cournot.n, M=cournot.M,
            bodies=cournot.bodies,
            payoff=cournot.payoff,
            constants=cournot.constants,
        )
        x = _profile(cournot, rng)
        zeta = rng.normal(size=(cournot.N, cournot.M))
        assert_allclose(GameService.u_stack(payoff_only, x, zeta), GameService.u_stack(cournot, x, zeta), atol=1e-6)


class TestBestResponse:
    def test_unconstrained_minimizer(self, cournot):
        # with the others at zero, player 1 minimizes 0.5025 |y|^2 + 2 1'y
        x = np.zeros((4, 2))
        response = GameService.best_response(cournot, 0, x)
        assert_allclose(response, np.full(2, -2.0 / 1.005), atol=1e-6)

    def test_constrained_response_on_boundary(self, cournot_boundary, ellipse):
        response = GameService.best_response(cournot_boundary, 3, np.zeros((4, 2)))
        assert abs(GeometryService.membership_residual(ellipse, response)) <= 1e-8

    def test_response_improves_payoff(self, cournot, rng):
        x = _profile(cournot, rng)
        for i in range(cournot.N):
            deviated = x.copy()
            deviated[i] = GameService.best_response(cournot, i, x)
            assert GameService.payoff(cournot, i, deviated) <= GameService.payoff(cournot, i, x) + 1e-12

    def test_vi_residual_positive_off_equilibrium(self, cournot):
        x = np.zeros((4, 2))
        assert GameService.vi_residual(cournot, x) > 0.1


def test_estimate_constants_agree_with_declared(cournot):
    estimate = GameService.estimate_constants(cournot, samples=200, seed=0)
    assert estimate.divergent == ()
    assert estimate.c2 == pytest.approx(0.01, rel=1e-6)
    assert estimate.c3 == pytest.approx(1.0, rel=1e-9)
    assert estimate.kappa >= cournot.constants.kappa
    assert len(estimate.varsigma) == cournot.N


def test_estimate_constants_warns_on_divergence(cournot):
    inflated = cournot.model_copy(update={"constants": GameConstants(kappa=5.0, c1=1.0025, c2=0.01, c3=1.0)})
    estimate = GameService.estimate_constants(inflated, samples=50, seed=1)
    assert "kappa" in estimate.divergent


class TestModels:
    def test_cournot_constants_follow_parameters(self):
        game = build_model("cournot", {"N": 8, "slope": 0.02})
        assert game.constants.c1 == pytest.approx(1.0 + 0.02 / 8)
        assert game.constants.c2 == pytest.approx(0.02)
        assert game.parameters["intercept"] == 8.0
        assert len(game.bodies) == 8

    def test_demand_response_ball(self):
        game = build_model("demand_response", {"n": 5, "radius": 5.0})
        assert game.n == 5
        assert game.bodies[0].kind == "ball"
        assert game.constants.kappa == pytest.approx(0.101)

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            build_model("bertrand")

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            build_model("cournot", {"elasticity": 2.0})

    def test_body_count_validated(self, cournot):
        with pytest.raises(ValidationError):
            AggregativeGame(
                name="broken", N=3, n=2, M=2,
                bodies=(ConvexBody.ellipsoid([1.0, 1.0]),),
                payoff=cournot.payoff,
                constants=cournot.constants,
            )
