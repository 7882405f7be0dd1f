import logging
import sys

import click

from app import settings
from app.commands.check_graph import check_graph_command
from app.commands.compare import compare_command
from app.commands.run import run_command
from app.commands.sweep_polygons import sweep_polygons_command
from app.commands.validate import validate_command
from app.exceptions import SolverException
from app.logging_config import configure_logging

logger = logging.getLogger(__name__)


class SolverCLI(click.Group):
    """
    Maps outcomes to exit codes: 0 success, 1 usage or config error,
    2 nonconvergence (returned by commands), 3 numeric failure.
    """

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(1)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        except SolverException as e:
            logger.error(f"{type(e).__name__}: {e.detail}")
            click.echo(f"Error: {e.detail}", err=True)
            sys.exit(e.exit_code)
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=SolverCLI)
@click.option("--log-level", default=None, help=f"Logging level (default {settings.LOG_LEVEL})")
@click.option("--json-logs/--plain-logs", default=None, help="JSON log lines on stderr")
def cli(log_level, json_logs):
    """Distributed Nash equilibrium seeking with inscribed polyhedral approximations"""
    configure_logging(log_level, json_logs)


cli.add_command(run_command)
cli.add_command(sweep_polygons_command)
cli.add_command(compare_command)
cli.add_command(check_graph_command)
cli.add_command(validate_command)


if __name__ == "__main__":
    cli()
