import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app import settings
from app.dependencies.loaders import get_game, get_graph, get_polys
from app.exceptions import ConfigError, InvalidInputError
from app.models.registry import build_model
from app.schemas.config_schema import ApproxSpec, ExperimentConfig, GraphSpec
from app.schemas.game_schema import AggregativeGame
from app.schemas.geometry_schema import ConvexBody, HausdorffEstimate, Polyhedron
from app.schemas.metrics_schema import PublishedFlag
from app.schemas.network_schema import Digraph
from app.schemas.run_schema import RunReport, Trajectory
from app.services.dynamics_service import DynamicsService
from app.services.geometry_service import GeometryService
from app.services.metrics_service import MetricsService
from app.services.report_writer import EPSILON_COLUMNS, PROVENANCE_COLUMNS, ReportWriter

logger = logging.getLogger(__name__)

POLYGON_NAMES = {3: "triangle", 4: "rectangle", 6: "hexagon", 8: "octagon", 10: "decagon", 12: "dodecagon"}

# ellipsoids used with growing player counts
NETWORK_ELLIPSOIDS = {4: (5.0, 4.0, 3.0), 20: (9.0, 8.0, 7.0), 50: (14.0, 13.0, 12.0), 100: (23.0, 22.0, 21.0)}

COMPARE_COLUMNS = [
    "label", "mode", "N", "n", "graph", "repeats", "converged", "steps",
    "wall_time_s", "projection_time_per_step_s", "qp_iterations_total",
    *PROVENANCE_COLUMNS,
]


def _hausdorff(game: AggregativeGame, polys: Optional[Sequence[Polyhedron]]) -> Optional[List[HausdorffEstimate]]:
    if polys is None:
        return None
    seen: Dict[Tuple[int, int], HausdorffEstimate] = {}
    estimates = []
    for body, poly in zip(game.bodies, polys):
        key = (id(body), id(poly))
        if key not in seen:
            if not isinstance(body, ConvexBody):
                return None
            try:
                seen[key] = GeometryService.hausdorff_estimate(body, poly)
            except InvalidInputError as e:
                logger.warning(f"Hausdorff estimate skipped: {e.detail}")
                return None
        estimates.append(seen[key])
    return estimates


class ExperimentService:
    """Drives single runs, polygon sweeps and timing comparisons from an ExperimentConfig"""

    @staticmethod
    def run_single(
        config: ExperimentConfig,
        game: Optional[AggregativeGame] = None,
        graph: Optional[Digraph] = None,
        polys: Optional[Sequence[Polyhedron]] = None,
        approx: Optional[ApproxSpec] = None,
    ) -> Tuple[Trajectory, RunReport]:
        approx = approx or config.approx
        game = game or get_game(config)
        graph = graph or get_graph(config.graph, game.N)
        if polys is None and approx.mode != "exact":
            polys = get_polys(approx, game)
        solver = config.solver
        trajectory, report = DynamicsService.run(
            game,
            graph=graph,
            beta1=solver.beta1,
            beta2=solver.beta2,
            mode="exact" if approx.mode == "exact" else "approx",
            polys=polys,
            h=solver.h,
            t_tol=solver.t_tol,
            max_steps=solver.max_steps,
            record_every=solver.record_every,
            integrator=solver.integrator,
            init=solver.init,
            seed=solver.seed,
            warm_start=solver.warm_start,
        )
        return trajectory, report.model_copy(update={"hausdorff": _hausdorff(game, polys)})

    @staticmethod
    def sweep_polygons(
        config: ExperimentConfig,
        m_list: Sequence[int],
        trajectories_dir: Optional[Path] = None,
    ) -> Tuple[pd.DataFrame, Dict[str, Any], List[PublishedFlag]]:
        '''
        One approximate run per uniform m-gon, each scored against the cached
        exact equilibrium.

        Returns:
            frame with the epsilon columns (one row per m, ascending),
            summary (monotonicity, triangle/dodecagon ratio, rank correlation),
            published-value comparison flags
        '''
        if not m_list:
            raise ConfigError("The polygon list is empty")
        if any(m < 3 for m in m_list):
            raise ConfigError("Every polygon needs at least 3 vertices")
        game = get_game(config)
        if game.n != 2:
            raise ConfigError(f"Polygon sweeps need a two-dimensional model, '{game.name}' has n={game.n}")
        graph = get_graph(config.graph, game.N)
        solver = config.solver
        reference = MetricsService.reference_equilibrium(game, graph, solver.beta1, solver.beta2, solver.h)

        def one(m: int) -> Dict[str, Any]:
            polys = [GeometryService.inscribe_regular(body, m) for body in game.bodies]
            trajectory, report = ExperimentService.run_single(
                config, game=game, graph=graph, polys=polys, approx=ApproxSpec(mode="regular", count=m)
            )
            if trajectories_dir is not None:
                ReportWriter.write_trajectory(trajectory, Path(trajectories_dir) / f"trajectory_m{m}.csv")
            epsilon = MetricsService.epsilon_measure(game, report.x_final, reference=reference.x_final, polys=polys)
            logger.info(f"m={m}: epsilon={epsilon.epsilon_hat:.6g}, h_max={epsilon.h_max:.6g}")
            return {
                "polygon": POLYGON_NAMES.get(m, f"{m}-gon"),
                "s": m,
                "h_max": epsilon.h_max,
                "delta_H": epsilon.delta_H,
                "epsilon_hat": epsilon.epsilon_hat,
                "ne_distance": epsilon.ne_distance,
                "steps": report.steps,
                "wall_time_s": report.wall_time,
                "converged": report.converged,
                **ReportWriter.provenance_columns(report),
            }

        ordered = sorted(set(m_list))
        workers = max(1, min(settings.get_thread_cap(), len(ordered)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, ordered))
        frame = pd.DataFrame(rows)
        all_converged = bool(frame["converged"].all())
        frame = frame[EPSILON_COLUMNS]

        epsilons = frame["epsilon_hat"].to_numpy()
        summary: Dict[str, Any] = {
            "strictly_decreasing": bool(np.all(np.diff(epsilons) < 0)),
            "all_converged": all_converged,
            "triangle_dodecagon_ratio": None,
            "ne_distance_delta_rank_correlation": None,
        }
        by_m = {int(m): float(e) for m, e in zip(frame["s"], frame["epsilon_hat"])}
        if 3 in by_m and 12 in by_m and by_m[12] > 0:
            summary["triangle_dodecagon_ratio"] = float(by_m[3] / by_m[12])
        finite = frame[np.isfinite(frame["delta_H"].astype(float))]
        if len(finite) >= 2:
            summary["ne_distance_delta_rank_correlation"] = MetricsService.trend_rank_correlation(
                finite["delta_H"].tolist(), finite["ne_distance"].tolist()
            )
        if not summary["strictly_decreasing"]:
            logger.warning("Measured epsilon is not strictly decreasing in the vertex count")
        flags = MetricsService.published_flags(by_m)
        return frame, summary, flags

    @staticmethod
    def _timed_rows(
        config: ExperimentConfig,
        game: AggregativeGame,
        graph: Digraph,
        approx_labels: Sequence[str],
        repeats: int,
    ) -> List[Dict[str, Any]]:
        # timed runs stay sequential
        rows = []
        for label in approx_labels:
            try:
                approx = ApproxSpec.parse(label)
            except ValueError as e:
                raise ConfigError(str(e)) from e
            polys = None if approx.mode == "exact" else get_polys(approx, game)
            reports = [
                ExperimentService.run_single(config, game=game, graph=graph, polys=polys, approx=approx)[1]
                for _ in range(repeats)
            ]
            medians = pd.DataFrame({
                "steps": [r.steps for r in reports],
                "wall_time_s": [r.wall_time for r in reports],
                "projection_time_per_step_s": [r.mean_projection_time for r in reports],
                "qp_iterations_total": [r.qp_iterations_total for r in reports],
            }).median()
            rows.append({
                "label": approx.label,
                "mode": reports[0].mode,
                "N": game.N,
                "n": game.n,
                "graph": graph.label,
                "repeats": repeats,
                "converged": all(r.converged for r in reports),
                "steps": int(medians["steps"]),
                "wall_time_s": float(medians["wall_time_s"]),
                "projection_time_per_step_s": float(medians["projection_time_per_step_s"]),
                "qp_iterations_total": int(medians["qp_iterations_total"]),
                **ReportWriter.provenance_columns(reports[0]),
            })
            logger.info(f"{approx.label} on {graph.label}: median wall time {rows[-1]['wall_time_s']:.3f}s")
        return rows

    @staticmethod
    def compare(config: ExperimentConfig, approx_labels: Sequence[str], repeats: Optional[int] = None) -> pd.DataFrame:
        """Median timing per approximation on the configured model and graph"""
        if not approx_labels:
            raise ConfigError("compare needs at least one approximation")
        repeats = repeats or config.output.repeats
        game = get_game(config)
        graph = get_graph(config.graph, game.N)
        return pd.DataFrame(ExperimentService._timed_rows(config, game, graph, approx_labels, repeats),
                            columns=COMPARE_COLUMNS)

    @staticmethod
    def compare_dimensions(
        config: ExperimentConfig,
        dims: Sequence[int],
        approx_labels: Sequence[str] = ("box", "exact"),
        radius: float = 5.0,
        repeats: Optional[int] = None,
    ) -> pd.DataFrame:
        """Timing against the action dimension with ball-constrained players"""
        repeats = repeats or config.output.repeats
        rows = []
        for n in dims:
            params = {**config.model.params, "n": n, "radius": radius}
            game = build_model(config.model.name, params)
            graph = get_graph(config.graph, game.N)
            rows.extend(ExperimentService._timed_rows(config, game, graph, approx_labels, repeats))
        return pd.DataFrame(rows, columns=COMPARE_COLUMNS)

    @staticmethod
    def compare_networks(
        config: ExperimentConfig,
        players: Sequence[int],
        graph_types: Sequence[str],
        approx_labels: Sequence[str],
        repeats: Optional[int] = None,
    ) -> pd.DataFrame:
        """Timing against the player count and the graph family"""
        repeats = repeats or config.output.repeats
        rows = []
        for N in players:
            params = {**config.model.params, "N": N}
            if config.model.name == "demand_response" and N in NETWORK_ELLIPSOIDS and "radius" not in params:
                params["semiaxes"] = NETWORK_ELLIPSOIDS[N]
            game = build_model(config.model.name, params)
            for graph_type in graph_types:
                try:
                    spec = GraphSpec(type=graph_type, N=N, p=config.graph.p, seed=config.graph.seed)
                except ValidationError as e:
                    raise ConfigError(f"Invalid graph '{graph_type}' for N={N}: {e.errors()[0]['msg']}") from e
                graph = get_graph(spec, N)
                rows.extend(ExperimentService._timed_rows(config, game, graph, approx_labels, repeats))
        return pd.DataFrame(rows, columns=COMPARE_COLUMNS)
