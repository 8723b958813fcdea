"""
poisoncert/cli/commands/report.py
`poisoncert report`: merge run directories into one comparison table.
"""

import logging
from pathlib import Path

import click

from poisoncert.cli.commands.common import get_run_settings, guarded, run_options, thread_count
from poisoncert.cli.display.rich_formatter import get_formatter
from poisoncert.cli.report import merge_tables
from poisoncert.utils.exceptions import DataError

logger = logging.getLogger(__name__)


@click.command()
@click.argument('run_dirs', nargs=-1, required=True, type=click.Path(file_okay=False, path_type=Path))
@run_options(out_file=True, out_default=Path('comparison.csv'))
@click.pass_context
@guarded
def report(ctx, run_dirs, seed, out, threads):
    """
    Merge the table.csv of several runs.

    Tables are read concurrently and merged in argument order; merging draws
    no random numbers, so --seed only keeps the shared interface.

    Examples:
        poisoncert report runs/grid-1a2b3c4d runs/grid-5e6f7a8b --out merged.csv
    """
    workers = thread_count(threads, get_run_settings(ctx))
    logger.debug("merging %d runs with %s threads (seed %d unused)", len(run_dirs), workers or "auto", seed)
    try:
        merged = merge_tables(list(run_dirs), threads=workers)
    except (OSError, ValueError) as e:
        raise DataError(f"Cannot merge run tables: {e}") from e
    out.parent.mkdir(parents=True, exist_ok=True)
    merged.to_csv(out, index=False)
    get_formatter().show_lines("Merged report", [
        f"📊 {len(merged)} rows from {len(run_dirs)} runs",
        f"📁 {out}",
    ], style='success')
