import logging
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import InvalidInputError, NumericError
from app.middleware.gain_gate import GainGate
from app.schemas.game_schema import AggregativeGame, FeasibleSet
from app.schemas.geometry_schema import ConvexBody, Polyhedron
from app.schemas.network_schema import Digraph, GainCertificate
from app.schemas.run_schema import (
    InitKind,
    Integrator,
    Mode,
    RunReport,
    SolverState,
    StepStats,
    Trajectory,
)
from app.services.game_service import GameService
from app.services.geometry_service import GeometryService
from app.services.network_service import NetworkService
from app.services.polyproj_service import PolyprojService

logger = logging.getLogger(__name__)

DEFAULT_STEP = 0.01
DEFAULT_T_TOL = 1e-3
DEFAULT_MAX_STEPS = 100_000

# (player, point, warm multipliers) -> (projection, multipliers or None)
Projector = Callable[[int, np.ndarray, Optional[np.ndarray]], Tuple[np.ndarray, Optional[np.ndarray]]]


def _projector(sets: Sequence[FeasibleSet], stats: StepStats, warm_start: bool) -> Projector:
    def project(i: int, z: np.ndarray, warm: Optional[np.ndarray]):
        shape = sets[i]
        started = time.perf_counter()
        if isinstance(shape, Polyhedron):
            solution = PolyprojService.project_polyhedron(shape, z, warm_start=warm if warm_start else None)
            stats.record(time.perf_counter() - started, solution.iterations)
            return solution.point, solution.multipliers
        point = GeometryService.project_exact(shape, z)
        stats.record(time.perf_counter() - started)
        return point, None
    return project


class DynamicsService:
    '''
    Distributed projected-gradient dynamics with dynamic average consensus:

        y_i   = P_i(x_i - beta1 U_i(x_i, zeta_i))
        x_i'  = y_i - x_i
        phi_i' = beta2 sum_j a_ij (zeta_j - zeta_i)
        zeta_i = phi_i + q_i(x_i)

    P_i is the QP projection onto an inscribed polyhedron (approx mode) or
    the exact projection onto the original set (exact mode).
    '''

    @staticmethod
    def initial_state(
        game: AggregativeGame,
        sets: Sequence[FeasibleSet],
        init: InitKind = "center",
        seed: Optional[int] = None,
    ) -> SolverState:
        """
        x(0) feasible for `sets`, phi(0) = 0, zeta(0) = q(x(0)), y(0) = x(0).

        center: the center of each original body (projected when a
        user-supplied polyhedron excludes it); random: uniform samples of the
        original bodies projected onto `sets`.
        """
        if len(sets) != game.N:
            raise InvalidInputError(f"Expected {game.N} feasible sets, got {len(sets)}")
        rng = np.random.default_rng(seed)
        x = np.empty((game.N, game.n))
        for i, (body, shape) in enumerate(zip(game.bodies, sets)):
            if init == "random":
                if isinstance(body, ConvexBody) or body.s:
                    start = GeometryService.sample_interior(body, 1, rng)[0]
                else:
                    start = rng.standard_normal(game.n)
            elif isinstance(body, ConvexBody):
                start = body.center.copy()
            elif body.s:
                start = body.vertices.mean(axis=0)
            else:
                start = np.zeros(game.n)
            x[i] = GeometryService.project_exact(shape, start)
        zeta = GameService.local_aggregates(game, x)
        return SolverState(t=0.0, x=x, phi=np.zeros_like(zeta), zeta=zeta, y=x.copy())

    @staticmethod
    def _check_finite(state: SolverState):
        for label in ("x", "phi", "zeta"):
            block = getattr(state, label)
            if not np.all(np.isfinite(block)):
                bad = np.argwhere(~np.isfinite(block))[0]
                logger.error(f"Non-finite {label} for player {bad[0]} at t={state.t:.6g}")
                raise NumericError(f"Non-finite {label}[{bad[0]}] at t={state.t:.6g}")

    @staticmethod
    def _euler(
        game: AggregativeGame,
        project: Projector,
        laplacian: np.ndarray,
        beta1: float,
        beta2: float,
        state: SolverState,
        h: float,
    ) -> SolverState:
        if h <= 0:
            raise InvalidInputError("Step size must be positive")
        warm = state.multipliers or [None] * game.N
        y = np.empty_like(state.x)
        multipliers: List[Optional[np.ndarray]] = []
        for i in range(game.N):
            target = state.x[i] - beta1 * GameService.u_map(game, i, state.x[i], state.zeta[i])
            y[i], duals = project(i, target, warm[i])
            multipliers.append(duals)
        x = state.x + h * (y - state.x)
        phi = state.phi - h * beta2 * (laplacian @ state.zeta)
        zeta = phi + GameService.local_aggregates(game, x)
        nxt = SolverState(t=state.t + h, x=x, phi=phi, zeta=zeta, y=y, multipliers=multipliers)
        DynamicsService._check_finite(nxt)
        return nxt

    @staticmethod
    def _rk4(
        game: AggregativeGame,
        project: Projector,
        laplacian: np.ndarray,
        beta1: float,
        beta2: float,
        state: SolverState,
        h: float,
    ) -> SolverState:
        # stage projections may leave the feasible set; diagnostic use only
        def field(x: np.ndarray, phi: np.ndarray):
            zeta = phi + GameService.local_aggregates(game, x)
            y = np.array([
                project(i, x[i] - beta1 * GameService.u_map(game, i, x[i], zeta[i]), None)[0]
                for i in range(game.N)
            ])
            return y - x, -beta2 * (laplacian @ zeta), y

        k1x, k1p, y = field(state.x, state.phi)
        k2x, k2p, _ = field(state.x + 0.5 * h * k1x, state.phi + 0.5 * h * k1p)
        k3x, k3p, _ = field(state.x + 0.5 * h * k2x, state.phi + 0.5 * h * k2p)
        k4x, k4p, _ = field(state.x + h * k3x, state.phi + h * k3p)
        x = state.x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        phi = state.phi + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        zeta = phi + GameService.local_aggregates(game, x)
        nxt = SolverState(t=state.t + h, x=x, phi=phi, zeta=zeta, y=y)
        DynamicsService._check_finite(nxt)
        return nxt

    @staticmethod
    def step_approx(
        game: AggregativeGame,
        polys: Sequence[Polyhedron],
        graph: Digraph,
        beta1: float,
        beta2: float,
        state: SolverState,
        h: float = DEFAULT_STEP,
        stats: Optional[StepStats] = None,
        warm_start: bool = True,
    ) -> SolverState:
        """One explicit Euler step with QP projections onto the inscribed polyhedrons"""
        project = _projector(polys, stats or StepStats(), warm_start)
        return DynamicsService._euler(game, project, NetworkService.laplacian(graph), beta1, beta2, state, h)

    @staticmethod
    def step_exact(
        game: AggregativeGame,
        graph: Digraph,
        beta1: float,
        beta2: float,
        state: SolverState,
        h: float = DEFAULT_STEP,
        stats: Optional[StepStats] = None,
    ) -> SolverState:
        """One explicit Euler step with exact projections onto the original sets"""
        project = _projector(game.bodies, stats or StepStats(), False)
        return DynamicsService._euler(game, project, NetworkService.laplacian(graph), beta1, beta2, state, h)

    @staticmethod
    @GainGate.certified
    def run(
        game: AggregativeGame,
        *,
        graph: Digraph,
        beta1: float,
        beta2: float,
        mode: Mode = "approx",
        polys: Optional[Sequence[Polyhedron]] = None,
        h: float = DEFAULT_STEP,
        t_tol: float = DEFAULT_T_TOL,
        max_steps: int = DEFAULT_MAX_STEPS,
        record_every: int = 1,
        integrator: Integrator = "euler",
        init: InitKind = "center",
        seed: Optional[int] = None,
        warm_start: bool = True,
        initial: Optional[SolverState] = None,
        certificate: Optional[GainCertificate] = None,
    ) -> Tuple[Trajectory, RunReport]:
        '''
        Integrate until ||x_{k+1} - x_k|| / h <= t_tol and ||zeta_{k+1} - zeta_k|| / h <= t_tol,
        or max_steps. Hitting max_steps returns converged=False.

        Wall time covers the stepping loop only. The trajectory keeps every
        record_every-th state plus the last one.
        '''
        if mode == "approx" and (polys is None or len(polys) != game.N):
            raise InvalidInputError("Approx mode needs one polyhedron per player")
        if graph.N != game.N:
            raise InvalidInputError(f"Graph has {graph.N} nodes but the game has {game.N} players")
        if h <= 0 or t_tol <= 0 or max_steps < 1 or record_every < 1:
            raise InvalidInputError("h, t_tol must be positive; max_steps, record_every at least 1")
        if h > 1:
            logger.warning(f"Step h={h} > 1 breaks feasibility of the convex-combination update")

        sets = polys if mode == "approx" else game.bodies
        stats = StepStats()
        project = _projector(sets, stats, warm_start)
        laplacian = NetworkService.laplacian(graph)
        advance = DynamicsService._euler if integrator == "euler" else DynamicsService._rk4

        state = initial if initial is not None else DynamicsService.initial_state(game, sets, init, seed)
        times, xs, zetas = [state.t], [state.x.copy()], [state.zeta.copy()]
        residuals = (np.inf, np.inf)
        converged = False
        steps = 0

        logger.info(f"Starting {mode}/{integrator} run of '{game.name}' on '{graph.label}' (h={h}, t_tol={t_tol})")
        started = time.perf_counter()
        while steps < max_steps:
            nxt = advance(game, project, laplacian, beta1, beta2, state, h)
            steps += 1
            residuals = (
                float(np.linalg.norm(nxt.x - state.x)) / h,
                float(np.linalg.norm(nxt.zeta - state.zeta)) / h,
            )
            state = nxt
            converged = residuals[0] <= t_tol and residuals[1] <= t_tol
            if steps % record_every == 0 or converged or steps == max_steps:
                times.append(state.t)
                xs.append(state.x.copy())
                zetas.append(state.zeta.copy())
            if converged:
                break
        wall_time = time.perf_counter() - started

        if converged:
            logger.info(f"Converged after {steps} steps ({wall_time:.3f}s)")
        else:
            logger.warning(f"No convergence within {max_steps} steps; residuals {residuals[0]:.3e}, {residuals[1]:.3e}")

        trajectory = Trajectory(times=np.array(times), x=np.array(xs), zeta=np.array(zetas))
        report = RunReport(
            mode=mode,
            integrator=integrator,
            converged=converged,
            steps=steps,
            wall_time=wall_time,
            x_final=state.x,
            zeta_final=state.zeta,
            qp_iterations_total=stats.qp_iterations,
            projection_time=stats.projection_time,
            terminal_residuals=residuals,
            certificate=certificate,
            seed=seed,
        )
        return trajectory, report
