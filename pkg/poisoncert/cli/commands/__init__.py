"""
poisoncert/cli/commands/__init__.py
"""

__all__ = []
