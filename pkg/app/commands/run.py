import logging
from pathlib import Path

import click
import pandas as pd

from app.commands.options import experiment_options, pass_config
from app.schemas.config_schema import ExperimentConfig
from app.services.experiment_service import ExperimentService
from app.services.report_writer import ReportWriter

logger = logging.getLogger(__name__)


@click.command("run")
@experiment_options
@click.option("--integrator", type=click.Choice(["euler", "rk4"]), help="rk4 is diagnostic only")
@click.option("--init", type=click.Choice(["center", "random"]), help="Initial actions")
@click.option("--record-every", type=int, help="Keep every K-th state in the trajectory")
@pass_config
def run_command(config: ExperimentConfig) -> int:
    """Integrate the dynamics once and write trajectory.csv and report.json"""
    logger.info(f"Run: model={config.model.name} graph={config.graph.type} approx={config.approx.label}")
    trajectory, report = ExperimentService.run_single(config)

    out = Path(config.output.dir)
    ReportWriter.write_trajectory(trajectory, out / "trajectory.csv")
    ReportWriter.write_report(report, out / "report.json", extra={"config": config.model_dump()})
    if report.mode == "exact":
        frame = pd.DataFrame(report.x_final, columns=[f"x{k + 1}" for k in range(report.x_final.shape[1])])
        frame.insert(0, "player", range(1, len(frame) + 1))
        ReportWriter.write_frame(frame, out / "reference_ne.csv")

    status = "converged" if report.converged else "did not converge"
    click.echo(f"{status} after {report.steps} steps in {report.wall_time:.3f}s "
               f"(residuals {report.terminal_residuals[0]:.3e}, {report.terminal_residuals[1]:.3e})")
    if report.certificate is not None and not report.certificate.ok:
        click.echo("warning: gain conditions not satisfied", err=True)
    return 0 if report.converged else 2
