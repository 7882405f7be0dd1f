import logging
from pathlib import Path

import click

from app.commands.options import experiment_options, parse_int_list, pass_config
from app.exceptions import ConfigError
from app.schemas.config_schema import ExperimentConfig
from app.services.experiment_service import ExperimentService
from app.services.report_writer import ReportWriter

logger = logging.getLogger(__name__)


@click.command("sweep-polygons")
@experiment_options
@click.option("--m-list", default="3,4,6,8,10,12", show_default=True, help="Comma separated vertex counts")
@click.option("--trajectories", is_flag=True, help="Also write one trajectory CSV per polygon")
@pass_config
def sweep_polygons_command(config: ExperimentConfig, m_list: str, trajectories: bool) -> int:
    """Epsilon, delta(H) and NE distance for uniform inscribed m-gons"""
    counts = parse_int_list(m_list, "--m-list")
    if not counts:
        raise ConfigError("--m-list is empty")
    out = Path(config.output.dir)
    frame, summary, flags = ExperimentService.sweep_polygons(config, counts, out if trajectories else None)

    hausdorff = dict(zip(frame["s"].astype(int), frame["hausdorff"]))
    footer = [f"{key}={value}" for key, value in summary.items()]
    footer += [
        f"published m={flag.m} measured={flag.measured:.6g} published={flag.published} flagged={flag.flagged}"
        + (f" hausdorff={hausdorff.get(flag.m, '')}" if flag.flagged else "")
        for flag in flags if flag.published is not None
    ]
    path = ReportWriter.write_frame(frame, out / "epsilon.csv", footer=footer)
    click.echo(frame.to_string(index=False))
    click.echo(f"strictly decreasing: {summary['strictly_decreasing']}  ->  {path}")
    return 0 if summary["all_converged"] else 2
