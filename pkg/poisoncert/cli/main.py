"""
poisoncert/cli/main.py
Main CLI entry point for poisoncert.

Exit codes: 0 success, 2 usage or invalid input, 3 solver failure,
4 an attack beat the certificate.
"""

from pathlib import Path

import click

from poisoncert.__version__ import __version__
from poisoncert.cli.commands.certify import certify
from poisoncert.cli.commands.common import guarded
from poisoncert.cli.commands.grid import grid
from poisoncert.cli.commands.meta import meta
from poisoncert.cli.commands.report import report
from poisoncert.cli.commands.simulate import simulate
from poisoncert.cli.display.rich_formatter import get_formatter
from poisoncert.config.settings import get_settings_manager
from poisoncert.utils.logging import configure_logging


@click.group()
@click.version_option(version=__version__, prog_name="poisoncert")
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.option('--config', 'config_file', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Settings YAML (default ~/.poisoncert/config.yaml)')
@click.pass_context
@guarded
def cli(ctx, verbose, config_file):
    """
    🛡️ poisoncert - certified robustness of online learners against data poisoning

    Computes upper bounds on what any dynamic poisoning adversary can achieve,
    verifies them, and checks them against simulated attacks.
    """
    configure_logging(verbose)
    manager = get_settings_manager()
    if config_file is not None:
        manager.use_file(config_file)
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose
    ctx.obj['settings'] = manager.get_settings()
    ctx.obj['config_file'] = manager.config_file


@cli.command()
@click.option('--save', is_flag=True, help='Write the effective settings to the config file')
@click.pass_context
@guarded
def config(ctx, save):
    """Show the effective configuration."""
    manager = get_settings_manager()
    settings = ctx.obj['settings']
    if save and not manager.save_settings(settings):
        ctx.exit(1)
    get_formatter().show_settings(settings, ctx.obj['config_file'])


# Add subcommands
cli.add_command(certify)
cli.add_command(grid)
cli.add_command(simulate)
cli.add_command(meta)
cli.add_command(report)


def main():
    """Main entry point for the CLI."""
    cli()


if __name__ == '__main__':
    main()
