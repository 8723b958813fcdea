"""
poisoncert/utils/__init__.py
"""
