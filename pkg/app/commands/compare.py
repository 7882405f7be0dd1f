import logging
from pathlib import Path
from typing import Tuple

import click

from app.commands.options import experiment_options, parse_int_list, pass_config
from app.schemas.config_schema import ExperimentConfig
from app.services.experiment_service import ExperimentService
from app.services.report_writer import ReportWriter

logger = logging.getLogger(__name__)


@click.command("compare")
@experiment_options
@click.option("--mode", "modes", multiple=True, help="Approximation to time (repeatable); defaults to greedy:12 and exact")
@click.option("--dims", help="Comma separated dimensions: ball-constrained dimension sweep")
@click.option("--radius", type=float, default=5.0, show_default=True, help="Ball radius for --dims")
@click.option("--players", help="Comma separated player counts: network-size sweep")
@click.option("--graphs", default="ring", show_default=True, help="Graph families for --players")
@pass_config
def compare_command(
    config: ExperimentConfig,
    modes: Tuple[str, ...],
    dims: str,
    radius: float,
    players: str,
    graphs: str,
) -> int:
    """Median timing of polyhedral versus exact projections"""
    dimensions = parse_int_list(dims, "--dims")
    counts = parse_int_list(players, "--players")
    if dimensions:
        labels = list(modes) or ["box", "exact"]
        frame = ExperimentService.compare_dimensions(config, dimensions, labels, radius)
    elif counts:
        labels = list(modes) or ["greedy:12", "exact"]
        families = [name.strip() for name in graphs.split(",") if name.strip()]
        frame = ExperimentService.compare_networks(config, counts, families, labels)
    else:
        labels = list(modes) or ["greedy:12", "exact"]
        frame = ExperimentService.compare(config, labels)

    path = ReportWriter.write_frame(frame, Path(config.output.dir) / "compare.csv")
    click.echo(frame.to_string(index=False))
    click.echo(f"-> {path}")
    return 0 if bool(frame["converged"].all()) else 2
