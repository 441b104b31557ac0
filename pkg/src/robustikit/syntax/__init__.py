"""Concrete syntax: the ``.cpm`` model language and its printers."""

from .lexer import LexError, tokenize
from .parser import Diagnostic, DSLError, ParseError, SourceFile, load, load_file, parse, parse_expr
from .printer import expr_text, print_entities, print_entity

__all__ = [
    "DSLError",
    "Diagnostic",
    "LexError",
    "ParseError",
    "SourceFile",
    "expr_text",
    "load",
    "load_file",
    "parse",
    "parse_expr",
    "print_entities",
    "print_entity",
    "tokenize",
]
