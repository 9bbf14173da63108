"""The small imperative language: trees, parser, printer, evaluator."""
from .ast import EvalError, Program
from .interp import BOTTOM, DEFAULT_BUDGET, EvalResult, evaluate
from .parser import ParseError, SemanticError, parse, parse_expr
from .printer import format_program, format_stmt

__all__ = [
    "BOTTOM", "DEFAULT_BUDGET", "EvalError", "EvalResult", "ParseError", "Program",
    "SemanticError", "evaluate", "format_program", "format_stmt", "parse", "parse_expr",
]
