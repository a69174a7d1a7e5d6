from .parser import parse, parse_files, tokenize
from .printer import format_statement, format_term, pretty_print
from .unit import AlgorithmTemplate, Equation, SourceUnit

__all__ = ["AlgorithmTemplate", "Equation", "SourceUnit", "format_statement", "format_term",
           "parse", "parse_files", "pretty_print", "tokenize"]
