"""Maximal-munch lexer for Java method fragments."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import accumulate

KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized this
    throw throws transient try void volatile while true false null var
    """.split()
)

PRIMITIVE_TYPES = frozenset(
    "boolean byte char short int long float double void var".split()
)

# longest first so that maximal munch falls out of alternation order
OPERATORS = sorted(
    """
    >>>= <<= >>= >>> ... -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^=
    << >> = + - * / % ! ~ ? : < > & | ^
    """.split(),
    key=len,
    reverse=True,
)
PUNCTUATION = ("(", ")", "{", "}", "[", "]", ";", ",", ".", "@")

_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_FLOAT = re.compile(
    r"""(?:
        \d[\d_]*\.[\d_]*(?:[eE][+-]?\d+)?[fFdD]?
      | \.\d[\d_]*(?:[eE][+-]?\d+)?[fFdD]?
      | \d[\d_]*[eE][+-]?\d+[fFdD]?
      | \d[\d_]*[fFdD]
    )""",
    re.VERBOSE,
)
_INT = re.compile(r"0[xX][0-9a-fA-F_]+[lL]?|0[bB][01_]+[lL]?|\d[\d_]*[lL]?")
_SPACE = re.compile(r"\s+")


class LexError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 source


@dataclass(frozen=True)
class Comment:
    text: str
    offset: int
    end: int  # byte offset one past the comment


def _byte_offsets(source: str) -> list[int]:
    return [0, *accumulate(len(ch.encode("utf-8")) for ch in source)]


def lex(source: str) -> tuple[list[Token], list[Comment]]:
    """Return the token stream and every comment found (Javadoc or not)."""
    boff = _byte_offsets(source)
    tokens: list[Token] = []
    comments: list[Comment] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        m = _SPACE.match(source, i)
        if m:
            i = m.end()
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            comments.append(Comment(source[i:j], boff[i], boff[j]))
            i = j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise LexError(boff[i], "unterminated comment")
            comments.append(Comment(source[i : j + 2], boff[i], boff[j + 2]))
            i = j + 2
            continue
        if ch == '"' or ch == "'":
            j = _scan_quoted(source, i, ch, boff)
            kind = "string-literal" if ch == '"' else "char-literal"
            tokens.append(Token(kind, source[i:j], boff[i]))
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _FLOAT.match(source, i)
            m_int = _INT.match(source, i)
            if m and (m_int is None or m.end() > m_int.end()) and not source[i:].lower().startswith(("0x", "0b")):
                tokens.append(Token("float-literal", m.group(), boff[i]))
                i = m.end()
                continue
            if m_int:
                tokens.append(Token("int-literal", m_int.group(), boff[i]))
                i = m_int.end()
                continue
        m = _IDENT.match(source, i)
        if m:
            word = m.group()
            kind = "keyword" if word in KEYWORDS else "identifier"
            tokens.append(Token(kind, word, boff[i]))
            i = m.end()
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token("operator", op, boff[i]))
                i += len(op)
                break
        else:
            if ch in PUNCTUATION:
                tokens.append(Token("punctuation", ch, boff[i]))
                i += 1
            else:
                raise LexError(boff[i], f"illegal character {ch!r}")
    return tokens, comments


def _scan_quoted(source: str, start: int, quote: str, boff: list[int]) -> int:
    i = start + 1
    while i < len(source):
        ch = source[i]
        if ch == "\\":
            i += 2
            continue
        if ch == "\n":
            break
        if ch == quote:
            return i + 1
        i += 1
    what = "string" if quote == '"' else "char"
    raise LexError(boff[start], f"unterminated {what} literal")


def tokenize(source: str) -> list[Token]:
    """Lex ``source``; comments and whitespace are dropped."""
    return lex(source)[0]


def leading_javadoc(source: str) -> str:
    """The Javadoc comment directly in front of the first token, or ``""``."""
    tokens, comments = lex(source)
    first = tokens[0].offset if tokens else None
    raw = source.encode("utf-8")
    for c in reversed(comments):
        if first is not None and c.end > first:
            continue
        if not c.text.startswith("/**") or c.text == "/**/":
            return ""
        gap = raw[c.end : first if first is not None else len(raw)]
        return c.text if not gap.strip() else ""
    return ""
