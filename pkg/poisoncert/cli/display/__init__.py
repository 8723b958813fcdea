"""
poisoncert/cli/display/__init__.py
"""

from poisoncert.cli.display.rich_formatter import PoisonCertFormatter, get_formatter

__all__ = ["PoisonCertFormatter", "get_formatter"]
