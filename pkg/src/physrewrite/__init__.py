"""Constrained term rewriting for normalizing and grading physics equations."""

from .terms import App, NaN, Num, Param, Quote, Term, Var
from .parser import parse_equation, parse_expr
from .printer import to_text

__all__ = [
    "App", "NaN", "Num", "Param", "Quote", "Term", "Var",
    "parse_equation", "parse_expr", "to_text",
]
__version__ = "0.1.0"
