"""Turning raw (code, summary) records into model-ready examples."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from ..frontend import LexError, ParseError, leading_javadoc, parse_method, tokenize
from ..frontend.tree import Node
from ..splitter import SplitResult, Subtree, split
from .text import EmptySummary, extract_summary, normalize_ast_label, normalize_code_tokens
from .vocab import Vocabulary

log = logging.getLogger(__name__)

MAX_CODE_LEN = 200
MAX_SUMMARY_LEN = 30
MAX_SUBTREES = 40
MAX_SUBTREE_NODES = 100


@dataclass
class Example:
    id: str
    code_tokens: list[str]
    split: SplitResult  # labels normalized for the AST channel
    summary_tokens: list[str]


def normalize_tree(node: Node) -> Node:
    """Apply AST-channel label normalization.

    A terminal that expands into several subtokens becomes a node labeled
    with the first subtoken whose children are the remaining ones.
    """
    if node.kind == "placeholder":
        return Node(node.label, [], "placeholder")
    is_terminal = not node.children and node.kind == "terminal"
    labels = normalize_ast_label(node.label, is_terminal)
    if is_terminal:
        return Node(labels[0], [Node(s, [], "terminal") for s in labels[1:]], "terminal")
    return Node(node.label, [normalize_tree(c) for c in node.children], node.kind)


def _renumber_placeholders(original: Subtree, tree: Node) -> list[tuple[int, int]]:
    # placeholders stay leaves under normalization, so match them by order
    targets = [child for _, child in sorted(original.placeholders)]
    idx = [i for i, n in enumerate(tree.preorder()) if n.kind == "placeholder"]
    return list(zip(idx, targets))


def normalize_split(result: SplitResult) -> SplitResult:
    subs = []
    for s in result.subtrees:
        tree = normalize_tree(s.tree)
        subs.append(Subtree(s.kind, tree, _renumber_placeholders(s, tree)))
    return SplitResult(subs, list(result.edges))


def make_example(
    ex_id: str,
    code: str,
    summary: str | None = None,
    *,
    max_code_len: int = MAX_CODE_LEN,
    max_summary_len: int = MAX_SUMMARY_LEN,
    require_summary: bool = True,
) -> Example:
    """Build one example; raises LexError/ParseError/EmptySummary on bad input.

    With ``require_summary=False`` a missing summary gives an empty token list,
    which is what inference on undocumented methods needs.
    """
    tokens = tokenize(code)
    ast = parse_method(tokens)
    if summary is None:
        summary = leading_javadoc(code)
    try:
        summary_tokens = extract_summary(summary)
    except EmptySummary:
        if require_summary:
            raise
        summary_tokens = []
    code_tokens = normalize_code_tokens(tokens)
    if len(code_tokens) > max_code_len:
        log.warning("%s: code truncated from %d to %d tokens", ex_id, len(code_tokens), max_code_len)
        code_tokens = code_tokens[:max_code_len]
    if len(summary_tokens) > max_summary_len:
        log.warning("%s: summary truncated from %d to %d tokens", ex_id, len(summary_tokens), max_summary_len)
        summary_tokens = summary_tokens[:max_summary_len]
    return Example(ex_id, code_tokens, normalize_split(split(ast)), summary_tokens)


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def examples_from_records(records: Iterable[dict], stats: dict | None = None) -> list[Example]:
    """Parse records; unparseable ones are skipped and counted in ``stats``."""
    stats = stats if stats is not None else {}
    stats.setdefault("kept", 0)
    stats.setdefault("skipped", 0)
    out = []
    for rec in records:
        try:
            out.append(make_example(str(rec["id"]), rec["code"], rec.get("summary")))
            stats["kept"] += 1
        except (LexError, ParseError, EmptySummary, KeyError, TypeError) as exc:
            stats["skipped"] += 1
            log.info("skipping record %s: %s", rec.get("id") if isinstance(rec, dict) else "?", exc)
    return out


def example_to_json(ex: Example) -> dict:
    return {
        "id": ex.id,
        "code_tokens": ex.code_tokens,
        "split": ex.split.to_json(),
        "summary_tokens": ex.summary_tokens,
    }


def example_from_json(obj: dict) -> Example:
    return Example(obj["id"], obj["code_tokens"], SplitResult.from_json(obj["split"]), obj["summary_tokens"])


# -- flat encoding for the model ------------------------------------------


@dataclass
class EncodedExample:
    id: str
    code_tokens: list[str]
    code_ids: list[int]
    # one entry per subtree in structure preorder: node label ids and parent
    # positions (-1 for the subtree root), both in node preorder
    node_ids: list[list[int]]
    node_parents: list[list[int]]
    struct_parents: list[int]
    summary_tokens: list[str]


def flatten_tree(tree: Node, max_nodes: int = MAX_SUBTREE_NODES) -> tuple[list[str], list[int]]:
    """Preorder labels and parent indices, keeping the first ``max_nodes`` nodes."""
    labels: list[str] = []
    parents: list[int] = []
    stack = [(tree, -1)]
    while stack and len(labels) < max_nodes:
        node, parent = stack.pop()
        me = len(labels)
        labels.append(node.label)
        parents.append(parent)
        stack.extend((c, me) for c in reversed(node.children))
    return labels, parents


def ast_label_sequences(ex: Example) -> Iterator[list[str]]:
    for s in ex.split.subtrees:
        yield flatten_tree(s.tree)[0]


def encode_example(
    ex: Example,
    ast_vocab: Vocabulary,
    code_vocab: Vocabulary,
    max_subtrees: int = MAX_SUBTREES,
    max_nodes: int = MAX_SUBTREE_NODES,
) -> EncodedExample:
    subtrees = ex.split.subtrees[:max_subtrees]
    if len(ex.split.subtrees) > max_subtrees:
        log.warning("%s: %d subtrees truncated to %d", ex.id, len(ex.split.subtrees), max_subtrees)
    parent_of = {c: p for p, c in ex.split.edges}
    struct_parents = [parent_of.get(i, -1) for i in range(len(subtrees))]
    node_ids, node_parents = [], []
    for s in subtrees:
        labels, parents = flatten_tree(s.tree, max_nodes)
        node_ids.append(ast_vocab.encode(labels))
        node_parents.append(parents)
    return EncodedExample(
        ex.id,
        list(ex.code_tokens),
        code_vocab.encode(ex.code_tokens),
        node_ids,
        node_parents,
        struct_parents,
        list(ex.summary_tokens),
    )
