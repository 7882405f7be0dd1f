import logging
from pathlib import Path

import click
import numpy as np

from app.commands.options import graph_options
from app.dependencies.loaders import get_graph
from app.exceptions import ConfigError
from app.schemas.config_schema import GraphSpec
from app.services.network_service import NetworkService

logger = logging.getLogger(__name__)


@click.command("check-graph")
@graph_options
def check_graph_command(graph, nodes, er_p, graph_seed, weights) -> int:
    """Print weight balance, strong connectivity and lambda of a graph"""
    if weights or graph == "weights":
        if not weights:
            raise ConfigError("--graph weights needs --weights FILE")
        try:
            matrix = np.loadtxt(weights, ndmin=2)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot read weight matrix {weights}: {e}") from e
        g = NetworkService.from_weights(matrix, label=Path(weights).stem)
    else:
        if nodes is None:
            raise ConfigError("--nodes is required for generated graphs")
        fields = {"type": graph or "ring", "N": nodes}
        if er_p is not None:
            fields["p"] = er_p
        if graph_seed is not None:
            fields["seed"] = graph_seed
        try:
            spec = GraphSpec(**fields)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        g = get_graph(spec, nodes)

    click.echo(f"graph: {g.label} (N={g.N}, edges={g.edge_count})")
    click.echo(f"weight-balanced: {NetworkService.is_weight_balanced(g)}")
    click.echo(f"strongly connected: {NetworkService.is_strongly_connected(g)}")
    spectrum = NetworkService.symmetrized_spectrum(g)
    click.echo("symmetrized spectrum: " + " ".join(f"{value:.6g}" for value in spectrum))
    click.echo(f"lambda: {NetworkService.lambda_min_positive(g):.12g}")
    return 0
