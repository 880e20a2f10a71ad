import logging
import os

import click

from config import get_config
from wedgeflow import jobs, setup_logging
from wedgeflow.errors import EXIT_CODES, StructuralFailure, WedgeflowError

settings = get_config(os.getenv('WEDGEFLOW_ENV'))
logger = logging.getLogger('wedgeflow.cli')


def _echo_result(result):
    click.echo(f"{result.command}: {'ok' if result.passed else 'monitor failures'}")
    for key, value in result.summary.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        click.echo(f"  {key}: {value}")
    for path in result.files:
        click.echo(f"  wrote {path}")


def _invoke(ctx, fn, *args, **kwargs):
    """Run a job and map wedgeflow errors to exit codes."""
    try:
        result = fn(*args, **kwargs)
    except StructuralFailure as exc:
        logger.exception("structural failure")
        click.echo(f"structural failure: {exc}", err=True)
        ctx.exit(exc.exit_code)
    except WedgeflowError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        ctx.exit(exc.exit_code)
    _echo_result(result)
    ctx.exit(EXIT_CODES['ok'])


def _out_dir(out_dir, command):
    return out_dir or os.path.join(settings.OUT_DIR, command)


def _float_list(ctx, param, value):
    try:
        return [float(e) for e in value.split(',') if e.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from exc


config_option = click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
                             help='Run configuration file')
out_option = click.option('--out-dir', type=click.Path(file_okay=False), default=None,
                          help='Output directory (default $WEDGEFLOW_OUT_DIR/<command>)')
seed_option = click.option('--seed', type=int, default=None, help='Override tracking.seed')
strict_option = click.option('--strict', is_flag=True, help='Exit non-zero on any monitor violation')


@click.group()
@click.option('--log-level', default=None, help='Override WEDGEFLOW_LOG_LEVEL')
def cli(log_level):
    """Wave-front tracking for steady supersonic flow past a wedge."""
    setup_logging(log_level or settings.LOG_LEVEL, settings.LOG_DIR)


@cli.command()
@config_option
@out_option
@seed_option
@strict_option
@click.option('--xlsx', is_flag=True, help='Also write functionals.xlsx')
@click.pass_context
def simulate(ctx, config_path, out_dir, seed, strict, xlsx):
    """Track one configuration and write its output bundle."""
    _invoke(ctx, jobs.cmd_simulate, config_path, _out_dir(out_dir, 'simulate'), seed=seed, strict=strict,
            xlsx=xlsx, settings=settings)


@cli.command()
@config_option
@click.option('--config-other', 'other_path', required=True, type=click.Path(dir_okay=False),
              help='Configuration of the second inflow')
@out_option
@seed_option
@strict_option
@click.option('--xlsx', is_flag=True, help='Also write functionals.xlsx for both runs')
@click.pass_context
def couple(ctx, config_path, other_path, out_dir, seed, strict, xlsx):
    """Track two inflows and follow the Lyapunov functional between them."""
    _invoke(ctx, jobs.cmd_couple, config_path, other_path, _out_dir(out_dir, 'couple'), seed=seed,
            strict=strict, xlsx=xlsx, settings=settings)


@cli.command()
@config_option
@out_option
@seed_option
@strict_option
@click.option('--workers', type=int, default=None, help='Worker processes (default $WEDGEFLOW_WORKERS)')
@click.option('--seeds', type=int, default=1, show_default=True, help='Verification runs with the new constants')
@click.pass_context
def calibrate(ctx, config_path, out_dir, seed, strict, workers, seeds):
    """Measure interaction coefficients and derive functional constants."""
    _invoke(ctx, jobs.cmd_calibrate, config_path, _out_dir(out_dir, 'calibrate'), seed=seed, strict=strict,
            workers=workers or settings.WORKERS, seeds=seeds, settings=settings)


@cli.command()
@config_option
@out_option
@seed_option
@strict_option
@click.option('--eps', 'eps_list', default='1e-2,1e-3,1e-4', show_default=True, callback=_float_list,
              help='Decreasing comma-separated ε values')
@click.option('--station', type=float, default=None, help='Station x (default tracking.x_max)')
@click.option('--workers', type=int, default=None, help='Worker processes (default $WEDGEFLOW_WORKERS)')
@click.pass_context
def converge(ctx, config_path, out_dir, seed, strict, eps_list, station, workers):
    """Pairwise L1 distances across ε and the fitted convergence rate."""
    _invoke(ctx, jobs.cmd_converge, config_path, _out_dir(out_dir, 'converge'), eps_list, station=station,
            seed=seed, strict=strict, workers=workers or settings.WORKERS, settings=settings)


@cli.command()
@out_option
@click.option('--gamma', type=float, default=1.4, show_default=True)
@click.option('--tolerance', type=float, default=None, help='Default $WEDGEFLOW_ORACLE_TOLERANCE')
@click.pass_context
def oracle(ctx, out_dir, gamma, tolerance):
    """Self-test against oblique-shock and Prandtl-Meyer relations."""
    _invoke(ctx, jobs.cmd_oracle, _out_dir(out_dir, 'oracle'), gamma=gamma, tolerance=tolerance,
            settings=settings)


@cli.command()
@out_option
@click.option('--mach', 'machs', default='1.5,2,3,5', show_default=True, callback=_float_list)
@click.option('--gamma', type=float, default=1.4, show_default=True)
@click.pass_context
def detachment(ctx, out_dir, machs, gamma):
    """Critical vertex angle per Mach number."""
    _invoke(ctx, jobs.cmd_detachment, _out_dir(out_dir, 'detachment'), machs, gamma=gamma)


if __name__ == '__main__':
    cli()
