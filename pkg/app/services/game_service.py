import logging
from typing import Callable, Optional, Sequence

import numpy as np

from app.exceptions import InvalidInputError, NumericError
from app.schemas.game_schema import AggregativeGame, ConstantsEstimate, FeasibleSet
from app.services.geometry_service import GeometryService

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
BR_MAX_ITERATIONS = 1_000_000
BR_SAFETY = 1.2
LIPSCHITZ_PAIRS = 100


def _central_difference(fn: Callable[[np.ndarray], float], point: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    grad = np.empty_like(point)
    for k in range(point.shape[0]):
        e = np.zeros_like(point)
        e[k] = step
        grad[k] = (fn(point + e) - fn(point - e)) / (2.0 * step)
    return grad


class GameService:
    """Aggregates, the U map, pseudo-gradients and best responses of an aggregative game"""

    @staticmethod
    def stacked(game: AggregativeGame, x, width: Optional[int] = None) -> np.ndarray:
        """Return x as an (N, width) array; accepts the flat N*width form"""
        width = game.n if width is None else width
        arr = np.asarray(x, dtype=float)
        if arr.size != game.N * width:
            raise InvalidInputError(f"Expected {game.N * width} entries, got {arr.size}")
        return arr.reshape(game.N, width)

    @staticmethod
    def aggregate(game: AggregativeGame, x) -> np.ndarray:
        """Q(x) = (1/N) sum q_i(x_i)"""
        x = GameService.stacked(game, x)
        return np.mean([game.q(i, x[i]) for i in range(game.N)], axis=0)

    @staticmethod
    def local_aggregates(game: AggregativeGame, x) -> np.ndarray:
        x = GameService.stacked(game, x)
        return np.array([game.q(i, x[i]) for i in range(game.N)])

    @staticmethod
    def partial_x(game: AggregativeGame, i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        if game.grad_x is not None:
            return np.asarray(game.grad_x(i, x_i, Q), dtype=float)
        return _central_difference(lambda y: game.payoff(i, y, Q), x_i)

    @staticmethod
    def partial_Q(game: AggregativeGame, i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        if game.grad_Q is not None:
            return np.asarray(game.grad_Q(i, x_i, Q), dtype=float)
        return _central_difference(lambda R: game.payoff(i, x_i, R), Q)

    @staticmethod
    def u_map(game: AggregativeGame, i: int, x_i, zeta_i) -> np.ndarray:
        '''
        U_i(x_i, zeta_i) = grad_x f_i(x_i, Q) + (1/N) Jq_i(x_i)' grad_Q f_i(x_i, Q)
        evaluated at Q = zeta_i.
        '''
        x_i = np.asarray(x_i, dtype=float)
        zeta_i = np.asarray(zeta_i, dtype=float)
        if x_i.shape != (game.n,) or zeta_i.shape != (game.M,):
            raise InvalidInputError(
                f"u_map expects x_i of length {game.n} and zeta_i of length {game.M}"
            )
        jacobian = np.asarray(game.q_jac(i, x_i), dtype=float)
        return (GameService.partial_x(game, i, x_i, zeta_i)
                + jacobian.T @ GameService.partial_Q(game, i, x_i, zeta_i) / game.N)

    @staticmethod
    def u_stack(game: AggregativeGame, x, zeta) -> np.ndarray:
        x = GameService.stacked(game, x)
        zeta = GameService.stacked(game, zeta, game.M)
        return np.array([GameService.u_map(game, i, x[i], zeta[i]) for i in range(game.N)])

    @staticmethod
    def pseudo_gradient(game: AggregativeGame, x) -> np.ndarray:
        """F(x) = col(grad_{x_i} J_i(x)), returned as an (N, n) array"""
        x = GameService.stacked(game, x)
        Q = GameService.aggregate(game, x)
        return np.array([GameService.u_map(game, i, x[i], Q) for i in range(game.N)])

    @staticmethod
    def payoff(game: AggregativeGame, i: int, x) -> float:
        """J_i(x) = f_i(x_i, Q(x))"""
        x = GameService.stacked(game, x)
        return float(game.payoff(i, x[i], GameService.aggregate(game, x)))

    @staticmethod
    def _unilateral(game: AggregativeGame, i: int, x: np.ndarray):
        # J_i(., x_{-i}) and its gradient, with Q updated through q_i only
        base = GameService.aggregate(game, x) - game.q(i, x[i]) / game.N

        def cost(y: np.ndarray) -> float:
            return float(game.payoff(i, y, base + game.q(i, y) / game.N))

        def gradient(y: np.ndarray) -> np.ndarray:
            return GameService.u_map(game, i, y, base + game.q(i, y) / game.N)

        return cost, gradient

    @staticmethod
    def numeric_gradient(game: AggregativeGame, i: int, x) -> np.ndarray:
        """Central differences of J_i in x_i"""
        x = GameService.stacked(game, x)
        cost, _ = GameService._unilateral(game, i, x)
        return _central_difference(cost, x[i].copy())

    @staticmethod
    def _project(shape: FeasibleSet, z: np.ndarray) -> np.ndarray:
        return GeometryService.project_exact(shape, z)

    @staticmethod
    def best_response(
        game: AggregativeGame,
        i: int,
        x,
        tol: float = 1e-8,
        feasible: Optional[FeasibleSet] = None,
    ) -> np.ndarray:
        '''
        argmin of J_i(., x_{-i}) over Omega_i (or over `feasible` when given)
        by projected gradient descent with fixed step 1/(1.2 L).

        L is the largest gradient-difference ratio over 100 random pairs of
        feasible points. Iteration stops when the gradient mapping
        ||y - P(y - a g(y))|| / a drops to tol.

        Raises:
            NumericError: no convergence within 1e6 iterations
        '''
        x = GameService.stacked(game, x)
        shape = game.bodies[i] if feasible is None else feasible
        _, gradient = GameService._unilateral(game, i, x)

        rng = np.random.default_rng(i)
        if hasattr(shape, "vertices") and not shape.s:
            # no vertex list: sample around the current action
            points = x[i] + rng.standard_normal((2 * LIPSCHITZ_PAIRS, game.n))
        else:
            points = GeometryService.sample_interior(shape, 2 * LIPSCHITZ_PAIRS, rng)
        ratios = []
        for a, b in zip(points[:LIPSCHITZ_PAIRS], points[LIPSCHITZ_PAIRS:]):
            distance = np.linalg.norm(a - b)
            if distance > 0:
                ratios.append(np.linalg.norm(gradient(a) - gradient(b)) / distance)
        lipschitz = max(max(ratios, default=0.0), 1e-12) * BR_SAFETY
        step = 1.0 / lipschitz

        y = GameService._project(shape, x[i])
        for iteration in range(1, BR_MAX_ITERATIONS + 1):
            candidate = GameService._project(shape, y - step * gradient(y))
            residual = np.linalg.norm(candidate - y) / step
            y = candidate
            if residual <= tol:
                logger.debug(f"Best response of player {i} converged in {iteration} iterations")
                return y
            if not np.all(np.isfinite(y)):
                break
        logger.error(f"Best response of player {i} did not converge (step={step:.3e})")
        raise NumericError(f"Best response of player {i} did not converge")

    @staticmethod
    def vi_residual(
        game: AggregativeGame,
        x,
        sets: Optional[Sequence[FeasibleSet]] = None,
        theta: float = 1.0,
    ) -> float:
        """||x - P(x - theta F(x))||, zero exactly at a solution of VI(K, F)"""
        x = GameService.stacked(game, x)
        sets = game.bodies if sets is None else sets
        F = GameService.pseudo_gradient(game, x)
        moved = np.array([GameService._project(sets[i], x[i] - theta * F[i]) for i in range(game.N)])
        return float(np.linalg.norm(x - moved))

    @staticmethod
    def estimate_constants(game: AggregativeGame, samples: int = 1000, seed: int = 0) -> ConstantsEstimate:
        '''
        Sampled monotonicity and Lipschitz constants over the feasible product set.

        kappa: min (F(x)-F(y))'(x-y)/||x-y||^2
        c1: max ||U(x, z) - U(y, z)|| / ||x - y||
        c2: max ||U(x, z) - U(x, w)|| / ||z - w||
        c3: max ||q(x) - q(y)|| / ||x - y||
        varsigma_i: max ||grad_x J_i(x)|| (full gradient, all players)
        Declared constants diverging by more than 10% are logged.
        '''
        rng = np.random.default_rng(seed)

        def draw() -> np.ndarray:
            return np.array([GeometryService.sample_interior(body, 1, rng)[0] for body in game.bodies])

        kappa = np.inf
        c1 = c2 = c3 = 0.0
        varsigma = np.zeros(game.N)
        for _ in range(samples):
            x, y = draw(), draw()
            zeta = np.tile(GameService.aggregate(game, draw()), (game.N, 1))
            omega = np.tile(GameService.aggregate(game, draw()), (game.N, 1))
            dx = x - y
            distance = float(np.linalg.norm(dx))
            if distance > 0:
                dF = GameService.pseudo_gradient(game, x) - GameService.pseudo_gradient(game, y)
                kappa = min(kappa, float(np.sum(dF * dx)) / distance ** 2)
                dU = GameService.u_stack(game, x, zeta) - GameService.u_stack(game, y, zeta)
                c1 = max(c1, float(np.linalg.norm(dU)) / distance)
                dq = GameService.local_aggregates(game, x) - GameService.local_aggregates(game, y)
                c3 = max(c3, float(np.linalg.norm(dq)) / distance)
            gap = float(np.linalg.norm(zeta - omega))
            if gap > 0:
                dU = GameService.u_stack(game, x, zeta) - GameService.u_stack(game, x, omega)
                c2 = max(c2, float(np.linalg.norm(dU)) / gap)
            Q = GameService.aggregate(game, x)
            for i in range(game.N):
                coupling = GameService.partial_Q(game, i, x[i], Q) / game.N
                full = np.array([np.asarray(game.q_jac(j, x[j])).T @ coupling for j in range(game.N)])
                full[i] = GameService.u_map(game, i, x[i], Q)
                varsigma[i] = max(varsigma[i], float(np.linalg.norm(full)))

        declared = game.constants
        divergent = []
        for label, measured, stated in (("kappa", kappa, declared.kappa), ("c1", c1, declared.c1),
                                        ("c2", c2, declared.c2), ("c3", c3, declared.c3)):
            if abs(measured - stated) > 0.1 * stated:
                divergent.append(label)
                logger.warning(f"Sampled {label}={measured:.5g} differs from declared {stated:.5g} by more than 10%")

        return ConstantsEstimate(
            kappa=float(kappa), c1=c1, c2=c2, c3=c3,
            varsigma=tuple(float(v) for v in varsigma),
            samples=samples,
            divergent=tuple(divergent),
        )
