"""The ``.qoc`` circuit language: parser, validator, interpreter, bundled programs."""

from importlib import resources

from .ast import Program, Span, format_expr, format_program
from .interpreter import ProgramBranch, QocRuntimeError, evaluate, interpret
from .parser import ParseError, QocError, ValidationError, parse, parse_unvalidated, tokenize, validate

BUNDLED = ("circuit1.qoc", "circuit2.qoc", "circuit3.qoc", "pipeline.qoc")


def bundled_source(name):
    """Text of a bundled program, e.g. ``bundled_source("circuit2.qoc")``."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled program {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files(__package__).joinpath("programs", name).read_text(encoding="utf-8")


def load_bundled(name):
    return parse(bundled_source(name))


__all__ = [
    "BUNDLED",
    "ParseError",
    "Program",
    "ProgramBranch",
    "QocError",
    "QocRuntimeError",
    "Span",
    "ValidationError",
    "bundled_source",
    "evaluate",
    "format_expr",
    "format_program",
    "interpret",
    "load_bundled",
    "parse",
    "parse_unvalidated",
    "tokenize",
    "validate",
]
