"""Hierarchical AST splitting into overview/signature/statement/block subtrees.

A method AST is cut into one-level-deep pieces:

* ``OvT``: ``Root(MethSig-placeholder, MethBody(segment placeholders...))``
* ``SigT``: the full ``MethSig`` subtree
* ``StmtsT``: a ``StatementsBlock`` grouping a maximal run of simple
  statements that sit directly under ``MethBody``
* ``BlockT``: one composite statement with every nested composite
  statement replaced by a placeholder leaf

Subtrees are listed in preorder of the structure tree, which is also the
order the decoder sees them in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.tree import COMPOSITE_KINDS, Node, ast_to_sexpr, parse_sexpr

STATEMENTS_BLOCK = "StatementsBlock"
SUBTREE_KINDS = ("OvT", "SigT", "StmtsT", "BlockT")


class StitchError(ValueError):
    pass


@dataclass
class Subtree:
    kind: str
    tree: Node
    # (preorder index of the placeholder leaf, index of the subtree filling it)
    placeholders: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class SplitResult:
    subtrees: list[Subtree]
    edges: list[tuple[int, int]]

    @property
    def root_index(self) -> int:
        return 0

    def children_of(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.subtrees]
        for p, c in self.edges:
            kids[p].append(c)
        return kids

    def to_json(self) -> dict:
        return {
            "subtrees": [
                {
                    "kind": s.kind,
                    "sexpr": ast_to_sexpr(s.tree),
                    "placeholders": [list(p) for p in s.placeholders],
                }
                for s in self.subtrees
            ],
            "structure_edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, obj: dict) -> SplitResult:
        subtrees = []
        for s in obj["subtrees"]:
            tree = parse_sexpr(s["sexpr"])
            phs = [(int(a), int(b)) for a, b in s["placeholders"]]
            nodes = list(tree.preorder())
            for idx, _ in phs:
                if 0 <= idx < len(nodes):
                    nodes[idx].kind = "placeholder"
            subtrees.append(Subtree(s["kind"], tree, phs))
        return cls(subtrees, [(int(p), int(c)) for p, c in obj["structure_edges"]])


def _placeholder(label: str) -> Node:
    return Node(label, [], "placeholder")


def _is_composite(node: Node) -> bool:
    return node.kind == "composite-stmt" and node.label in COMPOSITE_KINDS


def segments(body: list[Node]) -> list[list[Node] | Node]:
    """Group statements into maximal simple runs (lists) and single composites."""
    out: list[list[Node] | Node] = []
    for stmt in body:
        if _is_composite(stmt):
            out.append(stmt)
        elif out and isinstance(out[-1], list):
            out[-1].append(stmt)
        else:
            out.append([stmt])
    return out


def canonicalize(ast: Node) -> Node:
    """Copy of ``ast`` with simple-statement runs under MethBody grouped."""
    sig, body = ast.children
    new_body = []
    for seg in segments(body.children):
        if isinstance(seg, list):
            new_body.append(Node(STATEMENTS_BLOCK, [s.copy() for s in seg], "simple-stmt"))
        else:
            new_body.append(seg.copy())
    return Node(ast.label, [sig.copy(), Node(body.label, new_body, body.kind)], ast.kind)


def split(ast: Node) -> SplitResult:
    """Split a parsed method into subtrees plus the structure tree."""
    if ast.label != "Root" or [c.label for c in ast.children] != ["MethSig", "MethBody"]:
        raise ValueError("split expects a Root(MethSig, MethBody) method AST")
    sig, body = ast.children

    subtrees: list[Subtree] = []
    edges: list[tuple[int, int]] = []

    # each pending entry: (parent subtree index, placeholder node, original subtree root, kind)
    ov_sig = _placeholder("MethSig")
    ov_children = []
    pending: list[tuple[Node, Node, str]] = [(ov_sig, sig, "SigT")]
    for seg in segments(body.children):
        if isinstance(seg, list):
            ph = _placeholder(STATEMENTS_BLOCK)
            pending.append((ph, Node(STATEMENTS_BLOCK, seg, "simple-stmt"), "StmtsT"))
        else:
            ph = _placeholder(seg.label)
            pending.append((ph, seg, "BlockT"))
        ov_children.append(ph)
    overview = Node("Root", [ov_sig, Node("MethBody", ov_children, body.kind)], ast.kind)
    subtrees.append(Subtree("OvT", overview))
    _attach(subtrees, edges, 0, pending)
    return SplitResult(subtrees, edges)


def _attach(subtrees, edges, parent_idx, pending) -> None:
    """Emit the subtrees for ``pending`` placeholders of one parent, depth first."""
    index = {id(n): i for i, n in enumerate(subtrees[parent_idx].tree.preorder())}
    for ph, original, kind in pending:
        child_idx = len(subtrees)
        subtrees[parent_idx].placeholders.append((index[id(ph)], child_idx))
        edges.append((parent_idx, child_idx))
        if kind == "SigT":
            subtrees.append(Subtree(kind, original.copy()))
            continue
        nested: list[tuple[Node, Node, str]] = []
        tree = _cut_nested(original, nested, is_root=True)
        subtrees.append(Subtree(kind, tree))
        _attach(subtrees, edges, child_idx, nested)


def _cut_nested(node: Node, nested: list, is_root: bool) -> Node:
    """Copy ``node``, replacing every composite descendant with a placeholder."""
    if not is_root and _is_composite(node):
        ph = _placeholder(node.label)
        nested.append((ph, node, "BlockT"))
        return ph
    return Node(node.label, [_cut_nested(c, nested, False) for c in node.children], node.kind)


def stitch(result: SplitResult) -> Node:
    """Fill every placeholder with its child subtree, recursively."""
    n = len(result.subtrees)
    if n == 0:
        raise StitchError("empty split result")

    def build(idx: int, seen: frozenset) -> Node:
        if idx in seen:
            raise StitchError(f"cycle through subtree {idx}")
        sub = result.subtrees[idx]
        fill = {}
        for node_idx, child in sub.placeholders:
            if not 0 <= child < n:
                raise StitchError(f"placeholder {node_idx} in subtree {idx} points at missing subtree {child}")
            fill[node_idx] = child
        counter = iter(range(1 << 62))

        def copy(node: Node) -> Node:
            k = next(counter)
            if k in fill:
                return build(fill[k], seen | {idx})
            return Node(node.label, [copy(c) for c in node.children], node.kind)

        out = copy(sub.tree)
        size = sub.tree.size()
        for node_idx in fill:
            if node_idx >= size:
                raise StitchError(f"placeholder index {node_idx} outside subtree {idx}")
        return out

    return build(0, frozenset())


def split_stats(result: SplitResult) -> dict:
    full = stitch(result)
    return {
        "subtree_count": len(result.subtrees),
        "max_subtree_nodes": max(s.tree.size() for s in result.subtrees),
        "max_subtree_depth": max(s.tree.depth() for s in result.subtrees),
        "full_tree_nodes": full.size(),
        "full_tree_depth": full.depth(),
    }


def structure_depth(result: SplitResult) -> int:
    kids = result.children_of()
    best, stack = 0, [(0, 1)]
    while stack:
        i, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in kids[i])
    return best
