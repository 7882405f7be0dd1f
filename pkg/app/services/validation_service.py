import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from app.exceptions import SolverException
from app.models.cournot import build_cournot
from app.models.demand_response import build_demand_response
from app.schemas.geometry_schema import ConvexBody
from app.schemas.validation_schema import CheckResult
from app.services.game_service import GameService
from app.services.geometry_service import GeometryService
from app.services.metrics_service import MetricsService
from app.services.network_service import NetworkService
from app.services.polyproj_service import PolyprojService

logger = logging.getLogger(__name__)


def _unit_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((count, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _exterior_points(rng: np.random.Generator, count: int, scale: float) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(count, 2))


def check_support_points(rng, samples) -> str:
    body = ConvexBody.ellipsoid([4.0, 3.0])
    worst = max(abs(GeometryService.membership_residual(body, GeometryService.support_point(body, u)))
                for u in _unit_directions(rng, samples, 2))
    assert worst <= 1e-10, f"support point off the boundary by {worst:.3e}"
    return f"max boundary residual {worst:.2e}"


def check_support_dominance(rng, samples) -> str:
    body = ConvexBody.ellipsoid([4.0, 3.0])
    for m in (3, 4, 6, 8, 10, 12):
        poly = GeometryService.inscribe_regular(body, m)
        for u in _unit_directions(rng, samples, 2):
            gap = GeometryService.support_value(body, u) - GeometryService.support_value(poly, u)
            assert gap >= -1e-10, f"m={m}: polygon support exceeds the body by {-gap:.3e}"
    return "g_poly <= g_body for m in 3..12"


def check_exact_projection(rng, samples) -> str:
    body = ConvexBody.ellipsoid([4.0, 3.0])
    points = _exterior_points(rng, 2 * samples, 10.0)
    worst = 0.0
    for a, b in zip(points[:samples], points[samples:]):
        pa, pb = GeometryService.project_exact(body, a), GeometryService.project_exact(body, b)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-10, "projection expanded a pair"
        assert np.linalg.norm(GeometryService.project_exact(body, pa) - pa) <= 1e-10, "projection not idempotent"
        worst = max(worst, GeometryService.kkt_residual_exact(body, a, pa))
    assert worst <= 1e-8, f"KKT residual {worst:.3e}"
    return f"max KKT residual {worst:.2e}"


def check_qp_oracle(rng, samples) -> str:
    worst = 0.0
    for k in range(samples):
        semiaxes = rng.uniform(1.0, 5.0, size=2)
        poly = GeometryService.inscribe_regular(ConvexBody.ellipsoid(semiaxes), int(rng.integers(3, 13)))
        z = _exterior_points(rng, 1, 8.0)[0]
        solution = PolyprojService.project_polyhedron(poly, z)
        oracle = PolyprojService.project_by_enumeration(poly, z)
        worst = max(worst, float(np.linalg.norm(solution.point - oracle)))
    assert worst <= 1e-8, f"QP and enumeration differ by {worst:.3e}"
    return f"max deviation {worst:.2e}"


def check_hausdorff_rate(rng, samples) -> str:
    circle = ConvexBody.ball(1.0, 2)
    worst = 0.0
    for m in range(8, 65):
        value = GeometryService.hausdorff_estimate(circle, GeometryService.inscribe_regular(circle, m)).value
        worst = max(worst, value * m * m)
    assert worst <= 5.5, f"h(m) m^2 reached {worst:.4f}"
    return f"max h(m) m^2 = {worst:.4f}"


def check_ring_spectrum(rng, samples) -> str:
    for N in range(3, 13):
        lam = NetworkService.lambda_min_positive(NetworkService.ring(N))
        expected = 1.0 - math.cos(2.0 * math.pi / N)
        assert abs(lam - expected) <= 1e-10, f"ring({N}): {lam} vs {expected}"
    for N in (3, 4, 8):
        lam = NetworkService.lambda_min_positive(NetworkService.complete(N))
        assert abs(lam - N) <= 1e-10, f"complete({N}): {lam}"
    return "ring and complete spectra match closed forms"


def check_gain_gate(rng, samples) -> str:
    cournot = build_cournot().constants
    cert = NetworkService.gain_gate(NetworkService.ring(4), cournot.kappa, cournot.c1, cournot.c2, cournot.c3, 0.1, 1.0)
    assert cert.ok, "Cournot gains rejected"
    demand = build_demand_response().constants
    cert = NetworkService.gain_gate(NetworkService.ring(10), demand.kappa, demand.c1, demand.c2, demand.c3, 0.5, 2.0)
    assert cert.ok, "demand response gains rejected"
    boundary = 2.0 * cournot.kappa / cournot.c ** 2
    cert = NetworkService.gain_gate(NetworkService.ring(4), cournot.kappa, cournot.c1, cournot.c2, cournot.c3, boundary, 1.0)
    assert not cert.beta1_ok, "beta1 at the bound accepted"
    return "published gains accepted, boundary beta1 rejected"


def check_game_identities(rng, samples) -> str:
    worst_identity = worst_gradient = 0.0
    for game in (build_cournot(), build_demand_response()):
        for _ in range(max(1, samples // 10)):
            x = np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in game.bodies])
            Q = GameService.aggregate(game, x)
            U = GameService.u_stack(game, x, np.tile(Q, (game.N, 1)))
            F = GameService.pseudo_gradient(game, x)
            worst_identity = max(worst_identity, float(np.max(np.abs(U - F))))
            for i in range(game.N):
                numeric = GameService.numeric_gradient(game, i, x)
                scale = max(1.0, float(np.linalg.norm(F[i])))
                worst_gradient = max(worst_gradient, float(np.linalg.norm(numeric - F[i])) / scale)
    assert worst_identity <= 1e-12, f"U/F identity off by {worst_identity:.3e}"
    assert worst_gradient <= 1e-5, f"analytic gradient off by {worst_gradient:.3e}"
    return f"U/F {worst_identity:.1e}, gradients {worst_gradient:.1e}"


def check_delta_domination(rng, samples) -> str:
    game = build_cournot()
    violations = 0
    for m in (3, 4, 6, 8, 10, 12):
        polys = [GeometryService.inscribe_regular(body, m) for body in game.bodies]
        delta = MetricsService.delta_for(game, MetricsService.hausdorff_vector(game, polys))
        for _ in range(samples):
            x = np.array([GeometryService.sample_interior(poly, 1, rng)[0] for poly in polys])
            zeta = x + rng.normal(scale=2.0, size=x.shape)
            if MetricsService.perturbation_magnitude(game, polys, x, zeta, 0.1) > delta:
                violations += 1
    assert violations == 0, f"{violations} states exceed delta(H)"
    return "no violations"


CHECKS: List[Tuple[str, Callable]] = [
    ("support points on boundary", check_support_points),
    ("support dominance", check_support_dominance),
    ("exact projection", check_exact_projection),
    ("QP vs enumeration", check_qp_oracle),
    ("Hausdorff m^-2 rate", check_hausdorff_rate),
    ("graph spectra", check_ring_spectrum),
    ("gain gate", check_gain_gate),
    ("game identities", check_game_identities),
    ("delta domination", check_delta_domination),
]


class ValidationService:

    @staticmethod
    def run_suite(samples: int = 200, seed: int = 0) -> List[CheckResult]:
        """Run every sampled invariant check; failures are collected, not raised"""
        rng = np.random.default_rng(seed)
        results = []
        for name, check in CHECKS:
            try:
                detail = check(rng, samples)
                results.append(CheckResult(name=name, passed=True, detail=detail))
                logger.info(f"PASS {name}: {detail}")
            except (AssertionError, SolverException) as e:
                results.append(CheckResult(name=name, passed=False, detail=str(e)))
                logger.error(f"FAIL {name}: {e}")
        return results
