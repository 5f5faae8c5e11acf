from .lexer import LexError, Token, leading_javadoc, lex, tokenize
from .parser import ParseError, implied_delimiters, parse_method, parse_source
from .tree import COMPOSITE_KINDS, MethodAst, Node, SexprError, ast_to_sexpr, parse_sexpr

__all__ = [
    "COMPOSITE_KINDS",
    "LexError",
    "MethodAst",
    "Node",
    "ParseError",
    "SexprError",
    "Token",
    "ast_to_sexpr",
    "implied_delimiters",
    "leading_javadoc",
    "lex",
    "parse_method",
    "parse_sexpr",
    "parse_source",
    "tokenize",
]
