import logging
import threading
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress, spearmanr

from app.exceptions import DomainError, InsufficientDataError, InvalidInputError
from app.schemas.game_schema import AggregativeGame, FeasibleSet
from app.schemas.geometry_schema import ConvexBody, Polyhedron
from app.schemas.metrics_schema import EpsilonReport, RateFit, PublishedFlag
from app.schemas.network_schema import Digraph
from app.schemas.run_schema import RunReport, Trajectory
from app.services.dynamics_service import DynamicsService
from app.services.game_service import GameService
from app.services.geometry_service import GeometryService

logger = logging.getLogger(__name__)

REFERENCE_T_TOL = 1e-6
REFERENCE_MAX_STEPS = 2_000_000
MIN_FIT_SAMPLES = 10

# Published epsilon values for uniform m-gons in E_{4,3}
PUBLISHED_EPSILON = {3: 1.3470, 4: 0.8491, 6: 0.5187, 8: 0.2261, 10: 0.1069, 12: 0.0473}

_reference_cache: Dict[str, RunReport] = {}
_reference_lock = threading.Lock()


class MetricsService:
    """Approximation quality of converged runs"""

    @staticmethod
    def best_response_gaps(
        game: AggregativeGame,
        x_star,
        sets: Optional[Sequence[FeasibleSet]] = None,
        tol: float = 1e-8,
    ) -> np.ndarray:
        """J_i(x*) - min over sets[i] of J_i(., x*_{-i}) for every player"""
        x_star = GameService.stacked(game, x_star)
        sets = game.bodies if sets is None else sets
        gaps = np.empty(game.N)
        for i in range(game.N):
            response = GameService.best_response(game, i, x_star, tol=tol, feasible=sets[i])
            deviated = x_star.copy()
            deviated[i] = response
            gaps[i] = GameService.payoff(game, i, x_star) - GameService.payoff(game, i, deviated)
        return gaps

    @staticmethod
    def hausdorff_vector(game: AggregativeGame, polys: Sequence[Polyhedron]) -> Tuple[float, ...]:
        return tuple(
            GeometryService.hausdorff_estimate(body, poly).value for body, poly in zip(game.bodies, polys)
        )

    @staticmethod
    def delta_for(game: AggregativeGame, h_vector: Sequence[float]) -> float:
        """delta(H) with each player's curvature; +inf when the arc bound does not apply"""
        nu = [GeometryService.curvature_nu(body) for body in game.bodies]
        try:
            return GeometryService.delta_bound(h_vector, nu, game.constants.c3)
        except DomainError as e:
            logger.warning(f"delta(H) unavailable: {e.detail}")
            return float("inf")

    @staticmethod
    def epsilon_measure(
        game: AggregativeGame,
        x_star,
        tol: float = 1e-8,
        reference=None,
        polys: Optional[Sequence[Polyhedron]] = None,
    ) -> EpsilonReport:
        '''
        Best-response gaps over the original sets Omega_i at x_star.

        Args:
            game: the original game
            x_star: converged profile, feasible for Omega
            tol: best-response tolerance
            reference: exact equilibrium x*(Omega) for ne_distance
            polys: inscribed polyhedrons, for h_vector and delta(H)
        '''
        x_star = GameService.stacked(game, x_star)
        for i, body in enumerate(game.bodies):
            if isinstance(body, ConvexBody) and GeometryService.membership_residual(body, x_star[i]) > 1e-8:
                raise InvalidInputError(f"Profile of player {i} lies outside its feasible set")

        gaps = MetricsService.best_response_gaps(game, x_star, tol=tol)
        ne_distance = None
        if reference is not None:
            ne_distance = float(np.linalg.norm(x_star - GameService.stacked(game, reference)))
        h_vector = delta_H = None
        if polys is not None:
            h_vector = MetricsService.hausdorff_vector(game, polys)
            delta_H = MetricsService.delta_for(game, h_vector)

        return EpsilonReport(
            epsilon_hat=float(np.max(gaps)),
            per_player_gaps=tuple(float(g) for g in gaps),
            ne_distance=ne_distance,
            delta_H=delta_H,
            h_vector=h_vector,
        )

    @staticmethod
    def perturbation_magnitude(
        game: AggregativeGame,
        polys: Sequence[FeasibleSet],
        x,
        zeta,
        beta1: float,
    ) -> float:
        '''
        ||e(z)|| for the stacked difference d = P_D(x - beta1 U) - P_Omega(x - beta1 U)
        and its aggregate-weighted copy with blocks Jq_i d_i - (1/N) sum_j Jq_j d_j.
        '''
        x = GameService.stacked(game, x)
        zeta = GameService.stacked(game, zeta, game.M)
        d = np.empty_like(x)
        for i in range(game.N):
            target = x[i] - beta1 * GameService.u_map(game, i, x[i], zeta[i])
            d[i] = GeometryService.project_exact(polys[i], target) - GeometryService.project_exact(game.bodies[i], target)
        weighted = np.array([np.asarray(game.q_jac(i, x[i])) @ d[i] for i in range(game.N)])
        weighted -= weighted.mean(axis=0)
        return float(np.sqrt(np.sum(d ** 2) + np.sum(weighted ** 2)))

    @staticmethod
    def sigma_trajectory(trajectory: Trajectory, game: AggregativeGame) -> np.ndarray:
        """||zeta(t) - 1 (x) Q(x(t))|| per recorded sample"""
        norms = np.empty(trajectory.samples)
        for k in range(trajectory.samples):
            Q = GameService.aggregate(game, trajectory.x[k])
            norms[k] = float(np.linalg.norm(trajectory.zeta[k] - Q))
        return norms

    @staticmethod
    def rate_fit(trajectory: Trajectory, x_ref, t_tol: float = 1e-3) -> RateFit:
        '''
        Fit log ||x_k - x_ref|| against t over the middle 60% of the samples
        that precede the flat tail (distance <= 10 t_tol).

        Raises:
            InsufficientDataError: fewer than 10 samples remain
        '''
        x_ref = np.asarray(x_ref, dtype=float)
        distances = np.array([np.linalg.norm(trajectory.x[k] - x_ref.reshape(trajectory.x[k].shape))
                              for k in range(trajectory.samples)])
        below = np.flatnonzero(distances <= 10.0 * t_tol)
        usable = int(below[0]) if below.size else trajectory.samples
        lo = int(round(0.2 * usable))
        hi = int(round(0.8 * usable))
        if hi - lo < MIN_FIT_SAMPLES:
            raise InsufficientDataError(
                f"Only {max(hi - lo, 0)} samples above the flat tail; need {MIN_FIT_SAMPLES}"
            )
        times = trajectory.times[lo:hi]
        logs = np.log(distances[lo:hi])
        fit = linregress(times, logs)
        return RateFit(slope=float(fit.slope), intercept=float(fit.intercept),
                       r_squared=float(fit.rvalue ** 2), samples=hi - lo)

    @staticmethod
    def trend_rank_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
        """Spearman rank correlation"""
        if len(xs) != len(ys) or len(xs) < 2:
            raise InsufficientDataError("Rank correlation needs two equally long series of length >= 2")
        return float(spearmanr(xs, ys).statistic)

    @staticmethod
    def published_flags(results: Mapping[int, float], factor: float = 3.0) -> List[PublishedFlag]:
        """Compare measured epsilon per polygon size against the published values"""
        flags = []
        for m, measured in sorted(results.items()):
            published = PUBLISHED_EPSILON.get(m)
            if published is None:
                flags.append(PublishedFlag(m=m, measured=measured, published=None, ratio=None, flagged=False))
                continue
            ratio = measured / published
            flagged = not (1.0 / factor <= ratio <= factor)
            if flagged:
                logger.warning(f"m={m}: epsilon {measured:.4g} is outside a factor {factor:g} of {published}")
            flags.append(PublishedFlag(m=m, measured=measured, published=published, ratio=ratio, flagged=flagged))
        return flags

    @staticmethod
    def reference_equilibrium(
        game: AggregativeGame,
        graph: Digraph,
        beta1: float,
        beta2: float,
        h: float = 0.01,
    ) -> RunReport:
        """Exact-projection run at t_tol=1e-6, cached per (game, graph, gains, h)"""
        key = f"{game.name}|{sorted(game.parameters.items(), key=str)}|{graph.label}|{graph.weights.tobytes().hex()}|{beta1}|{beta2}|{h}"
        with _reference_lock:
            cached = _reference_cache.get(key)
        if cached is not None:
            return cached
        _, report = DynamicsService.run(
            game,
            graph=graph,
            beta1=beta1,
            beta2=beta2,
            mode="exact",
            h=h,
            t_tol=REFERENCE_T_TOL,
            max_steps=REFERENCE_MAX_STEPS,
            record_every=REFERENCE_MAX_STEPS,
        )
        if not report.converged:
            logger.warning("Reference equilibrium run did not reach t_tol=1e-6")
        with _reference_lock:
            _reference_cache[key] = report
        return report
