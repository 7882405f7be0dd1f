import click

from app.services.validation_service import ValidationService


@click.command("validate")
@click.option("--samples", type=int, default=200, show_default=True, help="Random samples per check")
@click.option("--seed", type=int, default=0, show_default=True)
def validate_command(samples: int, seed: int) -> int:
    """Run the sampled invariant suite; exit 3 on any failure"""
    results = ValidationService.run_suite(samples=samples, seed=seed)
    for result in results:
        click.echo(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    failed = sum(not result.passed for result in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 3
