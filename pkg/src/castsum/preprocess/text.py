"""Code-token normalization and Javadoc summary extraction."""

from __future__ import annotations

import re

from ..frontend.lexer import KEYWORDS, Token

NUM = "<NUM>"
STRING = "<STRING>"
GENERIC_TOKENS = (NUM, STRING)

_SUBTOKEN = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")
_WORDS = re.compile(r"[A-Za-z0-9]+")


class EmptySummary(ValueError):
    pass


def split_identifier(name: str) -> list[str]:
    """camelCase / snake_case / letter-digit split, lowercased."""
    out = []
    for part in re.split(r"[_$]+", name):
        out.extend(m.lower() for m in _SUBTOKEN.findall(part))
    return out


def normalize_code_tokens(tokens: list[Token]) -> list[str]:
    out: list[str] = []
    for tok in tokens:
        if tok.kind == "identifier":
            out.extend(split_identifier(tok.text))
        elif tok.kind in ("int-literal", "float-literal"):
            out.append(NUM)
        elif tok.kind in ("string-literal", "char-literal"):
            out.append(STRING)
        else:
            out.append(tok.text)
    return out


def normalize_ast_label(label: str, terminal: bool) -> list[str]:
    """Labels for the AST channel.

    Non-terminal labels are kept whole. A terminal expands to one label per
    subtoken: identifiers and flattened type texts are split like code
    tokens, literals become generic tokens, everything else is kept.
    """
    if not terminal:
        return [label]
    if label[:1] in ('"', "'"):
        return [STRING]
    if label[:1].isdigit() or (label[:1] == "." and label[1:2].isdigit()):
        return [NUM]
    if label in KEYWORDS or not _WORDS.search(label):
        return [label]
    subs = []
    for word in re.findall(r"[A-Za-z_$][A-Za-z0-9_$]*", label):
        subs.extend(split_identifier(word))
    return subs or [label]


_INLINE_TAG = re.compile(r"\{@\w+\s*([^}]*)\}")
_SENTENCE_END = re.compile(r"[.?!](?=\s|$)")
_SUMMARY_TOKEN = re.compile(r"[^\W_]+")


def extract_summary(javadoc: str) -> list[str]:
    """First-sentence summary tokens of a Javadoc block (or plain text)."""
    text = javadoc.strip()
    if text.startswith("/**"):
        text = text[3:]
    elif text.startswith("/*"):
        text = text[2:]
    if text.endswith("*/"):
        text = text[:-2]
    lines = []
    for line in text.splitlines():
        line = re.sub(r"^\s*\*+ ?", "", line).strip()
        if line.startswith("@"):
            break
        lines.append(line)
    body = " ".join(lines)
    body = _INLINE_TAG.sub(lambda m: m.group(1).strip(), body)
    body = re.sub(r"<[^>]+>", " ", body)  # HTML markup
    m = _SENTENCE_END.search(body)
    if m:
        body = body[: m.start()]
    tokens = _SUMMARY_TOKEN.findall(body.lower())
    if not tokens:
        raise EmptySummary("no summary sentence in Javadoc")
    return tokens
