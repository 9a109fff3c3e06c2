"""Deciding the diagonal problem for higher-order recursion schemes."""

from .parser import parse_file, parse_scheme
from .syntax import Scheme, SchemeError

__all__ = ["Scheme", "SchemeError", "parse_file", "parse_scheme"]
