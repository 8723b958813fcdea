"""
poisoncert/cli/__init__.py
"""

__all__ = []
