"""Front end: lex, parse, link, and type-check kernel sources.

typecheck lives in qgrt.frontend.typecheck (it depends on the platform
config module, which itself uses the type definitions from this package).
"""
from .lexer import Token, tokenize
from .parser import parse, parse_source
from .linker import LinkedProgram, resolve_imports
from .pretty import pretty

__all__ = [
    "Token", "tokenize", "parse", "parse_source",
    "LinkedProgram", "resolve_imports", "pretty",
]
