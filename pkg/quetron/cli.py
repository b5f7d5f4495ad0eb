"""CLI interface for quetron.

This module provides a command-line interface using Click for building the
quantum and kinetic models of a network, running the sweeps and writing
CSV and report artifacts. Exit codes: 0 on success, 1 when a bound check
fails, 2 on usage, configuration or I/O errors.
"""

import functools
import logging
import sys
from typing import Any, Callable, Dict, Optional

import click
import yaml
from pydantic import ValidationError

from quetron import __version__
from quetron.errors import QuetronError
from quetron.models import ExperimentConfig
from quetron.network import FAMILIES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BOUND_FAILURE = 1
EXIT_USAGE = 2


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log experiment progress")
@click.option("--quiet", "-q", is_flag=True, help="Hide progress bars")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker processes for grid sweeps")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML file with experiment options; command-line options take precedence")
@click.pass_context
def main(ctx: click.Context, verbose: bool, quiet: bool, workers: Optional[int], config_path: Optional[str]):
    """quetron - quantum versus kinetic models of excitation transfer networks."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["progress"] = not quiet
    ctx.obj["workers"] = workers
    ctx.obj["config_path"] = config_path


def network_options(func: Callable) -> Callable:
    """Options selecting a network: a spec file or a built-in family."""
    options = [
        click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), help="YAML network spec"),
        click.option("--family", type=click.Choice(FAMILIES), help="Built-in network family"),
        click.option("--n", type=click.IntRange(min=1), help="Number of sites"),
        click.option("--theta", type=float, help="Coupling scale Theta"),
        click.option("--gamma", type=float, help="Dephasing scale Gamma"),
        click.option("--e", type=float, help="Chain energy gap in units of Gamma"),
        click.option("--seed", type=int, help="Seed for random families"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def output_options(func: Callable) -> Callable:
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory")(func)
    return func


def grid_option(func: Callable) -> Callable:
    return click.option("--grid", type=(float, float, int), default=None,
                        help="Log-spaced grid: LOW HIGH COUNT")(func)


def _load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    if not isinstance(data, dict):
        raise click.UsageError(f"{path}: config file must contain a mapping")
    return data


def build_config(ctx: click.Context, command: str, options: Dict[str, Any]) -> ExperimentConfig:
    """Merge the config file, global options and command options into an ExperimentConfig."""
    values = _load_config_file(ctx.obj.get("config_path"))
    values["command"] = command
    if ctx.obj.get("workers") is not None:
        values["workers"] = ctx.obj["workers"]
    values.update({key: value for key, value in options.items() if value is not None and value is not False})
    return ExperimentConfig(**values)


def experiment(command: str) -> Callable:
    """Wrap a command body so errors map onto exit codes.

    The wrapped function receives (config, progress) and returns an exit code.
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        @click.pass_context
        def wrapper(ctx: click.Context, **options):
            try:
                config = build_config(ctx, command, options)
                code = func(config, ctx.obj["progress"])
            except (QuetronError, ValidationError) as exc:
                click.echo(f"Error: {exc}", err=True)
                sys.exit(EXIT_USAGE)
            except OSError as exc:
                click.echo(f"Error: cannot access {exc.filename or 'file'}: {exc.strerror or exc}", err=True)
                sys.exit(EXIT_USAGE)
            except yaml.YAMLError as exc:
                click.echo(f"Error parsing YAML: {exc}", err=True)
                sys.exit(EXIT_USAGE)
            sys.exit(code)
        return wrapper
    return decorator


def _echo_paths(paths) -> None:
    for path in paths:
        click.echo(f"Wrote {path}")


@main.command()
@network_options
@output_options
@click.option("--dump-m", is_flag=True, help="Write the generator M")
@click.option("--dump-n", is_flag=True, help="Write the exact kinetic matrix N")
@click.option("--dump-n0", is_flag=True, help="Write the leading kinetic matrix N0")
@click.option("--dump-nk", type=click.IntRange(min=0), help="Write series terms N_0 .. N_K")
@click.option("--t-max", type=float, help="Final time (default: ten slowest N0 decay times)")
@click.option("--steps", type=click.IntRange(min=2), help="Number of time samples")
@experiment("simulate")
def simulate(config: ExperimentConfig, progress: bool) -> int:
    """Evolve populations under M, N and N0 and dump matrices."""
    from quetron.experiments.simulate import run_simulate

    _echo_paths(run_simulate(config)["paths"])
    return EXIT_OK


@main.command("fmo-sweep")
@output_options
@grid_option
@experiment("fmo-sweep")
def fmo_sweep(config: ExperimentConfig, progress: bool) -> int:
    """Trapping efficiency of the FMO monomer across dephasing rates."""
    from quetron.experiments.fmo_sweep import run_fmo_sweep

    outcome = run_fmo_sweep(config, progress=progress)
    click.echo(f"Peak efficiency {outcome['peak_efficiency']:.4f} at gamma = {outcome['peak_gamma']:.4g} cm^-1")
    _echo_paths(outcome["paths"])
    return EXIT_OK


def _scaling(config: ExperimentConfig, progress: bool) -> int:
    from quetron.experiments.networks import run_ideal_or_chain

    outcome = run_ideal_or_chain(config, progress=progress)
    study = outcome["study"]
    for channel, fit in study.slopes.items():
        if fit is not None:
            click.echo(f"{channel}: slope {fit.slope:.3f}")
        elif channel in study.excluded:
            click.echo(f"{channel}: excluded, {study.excluded[channel]}")
        else:
            click.echo(f"{channel}: slope n/a")
    _echo_paths(outcome["paths"])
    return EXIT_OK


@main.command("ideal-network")
@network_options
@output_options
@grid_option
@experiment("ideal-network")
def ideal_network(config: ExperimentConfig, progress: bool) -> int:
    """Relaxation errors of a highly connected family along a Theta/Gamma grid."""
    if config.family is None and config.spec_path is None:
        config = config.model_copy(update={"family": "highly-ideal"})
    return _scaling(config, progress)


@main.command()
@network_options
@output_options
@grid_option
@experiment("chain")
def chain(config: ExperimentConfig, progress: bool) -> int:
    """Relaxation errors of a circular chain along a Theta/Gamma grid."""
    if config.family is None and config.spec_path is None:
        config = config.model_copy(update={"family": "chain-ideal"})
    return _scaling(config, progress)


@main.command("dim-scan")
@click.option("--family", type=click.Choice(["highly-ideal", "chain-ideal"]), default="highly-ideal",
              help="Network family")
@click.option("--n-range", type=(int, int, int), default=None, help="Sizes: LOW HIGH STEP")
@output_options
@experiment("dim-scan")
def dim_scan(config: ExperimentConfig, progress: bool) -> int:
    """N versus N0 relaxation error as the network grows (Theta = 0.01, Gamma = 1)."""
    from quetron.experiments.networks import run_dim_scan

    outcome = run_dim_scan(config, progress=progress)
    click.echo(f"delta_tau1_rel slope in n: {outcome['fit'].slope:.3f}")
    _echo_paths(outcome["paths"])
    return EXIT_OK


@main.command("bounds-report")
@network_options
@output_options
@experiment("bounds-report")
def bounds_report(config: ExperimentConfig, progress: bool) -> int:
    """Check every analytic bound on one network."""
    from quetron.experiments.audit import run_bounds_report

    outcome = run_bounds_report(config)
    report = outcome["report"]
    if report.precondition:
        click.echo(f"Precondition unmet: {report.precondition}; all checks skipped")
    for check in report.checks:
        click.echo(f"{check.name:28s} {check.status}")
    _echo_paths(outcome["paths"])
    return EXIT_BOUND_FAILURE if report.failed else EXIT_OK


@main.command()
@click.option("--draws", type=click.IntRange(min=1), help="Number of random networks")
@click.option("--seed", type=int, help="Master seed")
@click.option("--theta", type=float, help="Coupling scale Theta")
@click.option("--gamma", type=float, help="Dephasing scale Gamma")
@click.option("--n-range", type=(int, int, int), default=None, help="Sizes: LOW HIGH STEP (step ignored)")
@output_options
@experiment("audit")
def audit(config: ExperimentConfig, progress: bool) -> int:
    """Check every analytic bound on random connected networks."""
    from quetron.experiments.audit import run_audit

    outcome = run_audit(config, progress=progress)
    failures = outcome["failures"]
    click.echo(f"{len(outcome['result'].reports)} draws, {len(failures)} failed checks")
    for index, check in failures:
        click.echo(f"draw {index}: {check.name} measured {check.measured:.3e} > bound {check.bound:.3e}", err=True)
    _echo_paths(outcome["paths"])
    return EXIT_BOUND_FAILURE if failures else EXIT_OK


if __name__ == "__main__":
    main()
