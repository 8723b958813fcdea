"""
poisoncert/utils/logging.py
Logging setup shared by the CLI commands.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

_configured = False


def configure_logging(verbose: bool = False, console: Console = None) -> None:
    """Route the package loggers through a rich handler.

    Args:
        verbose: DEBUG level when set, INFO otherwise
        console: Console to write to (stderr console by default)
    """
    global _configured
    level = logging.DEBUG if verbose else logging.INFO
    logger = logging.getLogger("poisoncert")
    logger.setLevel(level)

    if _configured:
        for handler in logger.handlers:
            handler.setLevel(level)
        return

    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=verbose,
        rich_tracebacks=True,
        markup=False,
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    logger.propagate = False
    _configured = True
