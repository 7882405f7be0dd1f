import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.exceptions import ConfigError, InvalidInputError
from app.models.registry import build_model
from app.schemas.config_schema import ApproxSpec, ExperimentConfig, GraphSpec
from app.schemas.game_schema import AggregativeGame
from app.schemas.geometry_schema import ConvexBody, Polyhedron
from app.schemas.network_schema import Digraph
from app.services.geometry_service import GeometryService
from app.services.network_service import NetworkService

logger = logging.getLogger(__name__)


def get_game(config: ExperimentConfig) -> AggregativeGame:
    return build_model(config.model.name, config.model.params)


def get_graph(spec: GraphSpec, players: int) -> Digraph:
    N = spec.N or players
    if N != players:
        raise ConfigError(f"graph.N={N} does not match the model's {players} players")
    if spec.type == "ring":
        return NetworkService.ring(N)
    if spec.type == "complete":
        return NetworkService.complete(N)
    if spec.type == "er":
        return NetworkService.erdos_renyi(N, spec.p, spec.seed)
    try:
        matrix = np.loadtxt(spec.weights_file, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read weight matrix {spec.weights_file}: {e}") from e
    return NetworkService.from_weights(matrix, label=Path(spec.weights_file).stem)


def get_polys(spec: ApproxSpec, game: AggregativeGame) -> Optional[List[Polyhedron]]:
    '''
    Inscribed polyhedron per player for the requested approximation,
    None for exact mode.
    '''
    if spec.mode == "exact":
        return None
    if spec.mode == "halfspaces":
        try:
            text = Path(spec.file).read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read halfspace file {spec.file}: {e.strerror}") from e
        poly = GeometryService.polyhedron_from_text(text)
        if poly.dim != game.n:
            raise ConfigError(f"Halfspace file has dimension {poly.dim}, the game needs {game.n}")
        for i, body in enumerate(game.bodies):
            if poly.s and isinstance(body, ConvexBody):
                worst = max(GeometryService.membership_residual(body, v) for v in poly.vertices)
                if worst > 1e-8:
                    logger.warning(f"Halfspace polyhedron is not inscribed in player {i}'s set (residual {worst:.3e})")
        return [poly for _ in range(game.N)]

    polys = []
    built = {}
    for i, body in enumerate(game.bodies):
        if not isinstance(body, ConvexBody):
            raise ConfigError(f"Player {i} already has a polyhedral set; use approx=exact")
        if id(body) in built:
            polys.append(built[id(body)])
            continue
        try:
            if spec.mode == "regular":
                polys.append(GeometryService.inscribe_regular(body, spec.count))
            elif spec.mode == "greedy":
                polys.append(GeometryService.inscribe_greedy(body, spec.count))
            else:
                polys.append(GeometryService.inscribe_box(body))
        except InvalidInputError as e:
            raise ConfigError(f"approx={spec.label}: {e.detail}") from e
        built[id(body)] = polys[-1]
    logger.info(f"Built {spec.label} approximations with {polys[0].p} facets for {game.N} players")
    return polys
