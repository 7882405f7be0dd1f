from functools import wraps
from typing import Any, Callable, Dict, List, Optional

import click

from app.dependencies.config_loader import load_config
from app.exceptions import ConfigError
from app.schemas.config_schema import ExperimentConfig

# flag name -> dotted config key
FLAG_KEYS = {
    "model": "model.name",
    "graph": "graph.type",
    "nodes": "graph.N",
    "er_p": "graph.p",
    "graph_seed": "graph.seed",
    "weights": "graph.weights_file",
    "approx": "approx",
    "beta1": "solver.beta1",
    "beta2": "solver.beta2",
    "step": "solver.h",
    "tol": "solver.t_tol",
    "max_steps": "solver.max_steps",
    "seed": "solver.seed",
    "integrator": "solver.integrator",
    "init": "solver.init",
    "record_every": "solver.record_every",
    "out": "output.dir",
    "repeats": "output.repeats",
}


def graph_options(func: Callable) -> Callable:
    for option in reversed([
        click.option("--graph", type=click.Choice(["ring", "complete", "er", "weights"]), help="Communication graph family"),
        click.option("--nodes", type=int, help="Node count (defaults to the player count)"),
        click.option("--er-p", type=float, help="Erdos-Renyi edge probability"),
        click.option("--graph-seed", type=int, help="Erdos-Renyi seed"),
        click.option("--weights", type=click.Path(dir_okay=False), help="Whitespace weight matrix file (graph=weights)"),
    ]):
        func = option(func)
    return func


def experiment_options(func: Callable) -> Callable:
    """Options shared by every experiment command"""
    for option in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="Flat key-value experiment file"),
        click.option("--model", help="Builtin model: cournot | demand_response"),
        click.option("--approx", help="regular:m | greedy:s | box | halfspaces:<file> | exact"),
        click.option("--beta1", type=float, help="Projection gain"),
        click.option("--beta2", type=float, help="Consensus gain"),
        click.option("--step", type=float, help="Euler step size h"),
        click.option("--tol", type=float, help="Terminal tolerance t_tol"),
        click.option("--max-steps", type=int, help="Step budget"),
        click.option("--seed", type=int, help="Seed for random initialization"),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--repeats", type=int, help="Repetitions for timing comparisons"),
        click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
                     help="Any dotted config key, e.g. model.intercept=12"),
    ]):
        func = option(func)
    return graph_options(func)


def build_experiment_config(options: Dict[str, Any]) -> ExperimentConfig:
    overrides: Dict[str, Any] = {}
    for flag, key in FLAG_KEYS.items():
        if options.get(flag) is not None:
            overrides[key] = options[flag]
    for assignment in options.get("assignments") or ():
        key, sep, value = assignment.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got '{assignment}'")
        overrides[key.strip()] = value
    return load_config(options.get("config_path"), overrides)


def parse_int_list(text: Optional[str], label: str) -> List[int]:
    if text is None:
        return []
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"{label} must be a comma separated list of integers, got '{text}'") from e


def pass_config(func: Callable) -> Callable:
    """Resolve the shared options into an ExperimentConfig passed as `config`"""
    @wraps(func)
    def wrapper(**options):
        shared = {key: options.pop(key, None) for key in list(FLAG_KEYS) + ["config_path", "assignments"]}
        return func(config=build_experiment_config(shared), **options)
    return wrapper
