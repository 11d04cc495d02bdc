"""Source dialects Cm (C-like) and Gm (Go-like) and their lowering to MIR."""

from .ast import DIALECTS, FuncDef, SourceAst
from .lower import lower_ast
from .parser import parse_syntax
from .typecheck import typecheck


def parse_source(text: str, dialect: str) -> FuncDef:
    """Parse and type-check one compilation unit; returns the typed AST."""
    return typecheck(parse_syntax(text, dialect))


def compile_source(text: str, dialect: str):
    """parse_source followed by lower_ast."""
    return lower_ast(parse_source(text, dialect), dialect)


__all__ = ["DIALECTS", "FuncDef", "SourceAst", "compile_source", "lower_ast", "parse_source"]
