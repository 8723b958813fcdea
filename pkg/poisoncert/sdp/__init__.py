"""
poisoncert/sdp/__init__.py
Small dense cone-program toolkit.
"""

from poisoncert.sdp.epigraph import (
    matrix_fractional_epigraph,
    matrix_fractional_program,
    matrix_fractional_value,
)
from poisoncert.sdp.expression import AffineExpr, bmat, concatenate
from poisoncert.sdp.program import ConeProgram, ProgramBuilder, PsdBlock, dump_program, load_program
from poisoncert.sdp.solver import Solution, solve

__all__ = [
    "AffineExpr",
    "ConeProgram",
    "ProgramBuilder",
    "PsdBlock",
    "Solution",
    "bmat",
    "concatenate",
    "dump_program",
    "load_program",
    "matrix_fractional_epigraph",
    "matrix_fractional_program",
    "matrix_fractional_value",
    "solve",
]
