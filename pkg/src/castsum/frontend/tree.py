"""Ordered labeled trees and their s-expression form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

COMPOSITE_KINDS = (
    "If", "For", "While", "DoWhile", "Switch", "Label", "SynchBlock", "Try", "TryWith",
)
NODE_CLASSES = (
    "composite-stmt", "simple-stmt", "signature-part", "expression-part", "terminal", "placeholder",
)


@dataclass
class Node:
    """One AST node. Equality compares label and shape only."""

    label: str
    children: list[Node] = field(default_factory=list)
    kind: str = field(default="expression-part", compare=False)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def preorder(self) -> Iterator[Node]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def terminals(self) -> list[str]:
        return [n.label for n in self.preorder() if n.kind == "terminal"]

    def size(self) -> int:
        return sum(1 for _ in self.preorder())

    def depth(self) -> int:
        """Depth in nodes; a single node has depth 1."""
        best = 0
        stack = [(self, 1)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in node.children)
        return best

    def copy(self) -> Node:
        return Node(self.label, [c.copy() for c in self.children], self.kind)


MethodAst = Node


def leaf(label: str, kind: str = "terminal") -> Node:
    return Node(label, [], kind)


def _escape(label: str) -> str:
    out = []
    for ch in label:
        if ch in "\\() \t\n\r":
            out.append("\\" + {"\t": "t", "\n": "n", "\r": "r"}.get(ch, ch))
        else:
            out.append(ch)
    return "".join(out)


def ast_to_sexpr(node: Node) -> str:
    parts: list[str] = []
    # iterative emission keeps very deep trees off the Python stack
    stack: list[object] = [node]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        assert isinstance(item, Node)
        parts.append("(" + _escape(item.label))
        stack.append(")")
        for c in reversed(item.children):
            stack.append(c)
            stack.append(" ")
    return "".join(parts)


class SexprError(ValueError):
    pass


def _guess_kind(label: str, has_children: bool) -> str:
    if label in COMPOSITE_KINDS and has_children:
        return "composite-stmt"
    if not has_children:
        return "terminal"
    return "expression-part"


def parse_sexpr(text: str) -> Node:
    """Read one tree written by :func:`ast_to_sexpr`.

    Node classes are not part of the format; they are re-inferred from
    labels, so only label-and-shape equality is guaranteed.
    """
    pos = 0
    n = len(text)
    unescape = {"t": "\t", "n": "\n", "r": "\r"}

    def read_label() -> str:
        nonlocal pos
        buf = []
        while pos < n and text[pos] not in " ()":
            if text[pos] == "\\":
                if pos + 1 >= n:
                    raise SexprError("dangling escape")
                buf.append(unescape.get(text[pos + 1], text[pos + 1]))
                pos += 2
            else:
                buf.append(text[pos])
                pos += 1
        return "".join(buf)

    stack: list[Node] = []
    root = None
    while pos < n:
        ch = text[pos]
        if ch == "(":
            pos += 1
            node = Node(read_label())
            if stack:
                stack[-1].children.append(node)
            elif root is not None:
                raise SexprError("more than one tree")
            else:
                root = node
            stack.append(node)
        elif ch == ")":
            if not stack:
                raise SexprError(f"unbalanced ')' at {pos}")
            node = stack.pop()
            node.kind = _guess_kind(node.label, bool(node.children))
            pos += 1
        elif ch == " ":
            pos += 1
        else:
            raise SexprError(f"unexpected {ch!r} at {pos}")
    if stack or root is None:
        raise SexprError("unbalanced or empty s-expression")
    return root
