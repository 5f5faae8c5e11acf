import json
from pathlib import Path

import pytest

from castsum.frontend import COMPOSITE_KINDS, parse_source
from castsum.preprocess import generate_corpus, nested_method
from castsum.splitter import (
    STATEMENTS_BLOCK,
    SplitResult,
    StitchError,
    canonicalize,
    split,
    split_stats,
    stitch,
    structure_depth,
)

FIG1 = (Path(__file__).parent / "fixtures" / "fig1_method.java").read_text(encoding="utf-8")
PLACEHOLDER_LABELS = {STATEMENTS_BLOCK, "MethSig", *COMPOSITE_KINDS}


def check_invariants(result: SplitResult):
    kinds = [s.kind for s in result.subtrees]
    assert kinds[0] == "OvT"
    assert kinds.count("OvT") == 1 and kinds.count("SigT") == 1
    placeholders = [(i, node, child) for i, s in enumerate(result.subtrees) for node, child in s.placeholders]
    assert len(placeholders) == len(result.subtrees) - 1
    # placeholders and non-root subtrees are in bijection, matching the edges
    assert sorted(c for _, _, c in placeholders) == list(range(1, len(result.subtrees)))
    assert sorted((p, c) for p, _, c in placeholders) == sorted(result.edges)
    for i, node_idx, child in placeholders:
        node = list(result.subtrees[i].tree.preorder())[node_idx]
        assert node.is_leaf and node.label in PLACEHOLDER_LABELS
        assert node.label == result.subtrees[child].tree.label or (
            node.label == "MethSig" and result.subtrees[child].kind == "SigT"
        )
    for s in result.subtrees:
        if s.kind == "BlockT":
            assert s.tree.label in COMPOSITE_KINDS
    # subtrees are numbered in structure-tree preorder
    order, stack = [], [0]
    kids = result.children_of()
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(reversed(kids[i]))
    assert order == list(range(len(result.subtrees)))


def test_fig1_subtrees():
    result = split(parse_source(FIG1))
    check_invariants(result)
    assert [s.kind for s in result.subtrees] == ["OvT", "SigT", "StmtsT", "BlockT", "BlockT", "StmtsT"]
    assert [s.tree.label for s in result.subtrees[3:5]] == ["For", "If"]
    assert sorted(result.edges) == [(0, 1), (0, 2), (0, 3), (0, 5), (3, 4)]
    assert len(result.subtrees[2].tree.children) == 4
    assert split_stats(result)["subtree_count"] == 6
    # the loop keeps its simple statement inline and a placeholder for the If
    loop_labels = [n.label for n in result.subtrees[3].tree.preorder()]
    assert "LocalVarDecl" in loop_labels and "If" in loop_labels


def test_fig1_round_trip_through_json():
    ast = parse_source(FIG1)
    result = split(ast)
    assert stitch(result) == canonicalize(ast)
    again = SplitResult.from_json(json.loads(json.dumps(result.to_json())))
    assert stitch(again) == canonicalize(ast)
    assert set(result.to_json()) == {"subtrees", "structure_edges"}
    assert set(result.to_json()["subtrees"][0]) == {"kind", "sexpr", "placeholders"}


def test_single_return():
    ast = parse_source("void f() { return; }")
    result = split(ast)
    check_invariants(result)
    assert [s.kind for s in result.subtrees] == ["OvT", "SigT", "StmtsT"]
    assert sorted(result.edges) == [(0, 1), (0, 2)]
    stitched = stitch(result)
    body = stitched.children[1]
    assert [c.label for c in body.children] == [STATEMENTS_BLOCK]
    stats = split_stats(result)
    assert stats["subtree_count"] == 3
    assert stats["max_subtree_depth"] <= stats["full_tree_depth"]


def test_three_deep_nesting():
    ast = parse_source("void f(boolean a) { while (a) { for (;;) { if (a) { a = false; } } } }")
    result = split(ast)
    check_invariants(result)
    blocks = [s.tree.label for s in result.subtrees if s.kind == "BlockT"]
    assert blocks == ["While", "For", "If"]
    assert structure_depth(result) == 4
    stats = split_stats(result)
    assert stats["max_subtree_depth"] < stats["full_tree_depth"]
    # cutting out the nested levels leaves each BlockT no deeper than a lone If
    lone = split(parse_source("void f(boolean a) { if (a) { a = false; } }"))
    assert max(s.tree.depth() for s in result.subtrees if s.kind == "BlockT") <= max(
        s.tree.depth() for s in lone.subtrees if s.kind == "BlockT"
    ) + 1


def test_else_if_chain_one_block_per_if():
    ast = parse_source("void f(int a) { if (a == 1) { a = 0; } else if (a == 2) { a = 1; } else { a = 2; } }")
    result = split(ast)
    assert [s.tree.label for s in result.subtrees if s.kind == "BlockT"] == ["If", "If"]
    assert "Else" in [n.label for n in result.subtrees[2].tree.preorder()]


@pytest.mark.parametrize("seed", [1, 2])
def test_round_trip_property(seed):
    for src, _ in generate_corpus(seed, 60):
        ast = parse_source(src)
        result = split(ast)
        check_invariants(result)
        stitched = stitch(result)
        canon = canonicalize(ast)
        assert stitched == canon
        assert [n.label for n in stitched.preorder()] == [n.label for n in canon.preorder()]
        stats = split_stats(result)
        assert stats["max_subtree_depth"] <= stats["full_tree_depth"]


def test_depth_control_family():
    full, sub = [], []
    for k in (2, 4, 6, 8, 10):
        stats = split_stats(split(parse_source(nested_method(k))))
        full.append(stats["full_tree_depth"])
        sub.append(stats["max_subtree_depth"])
    steps = {b - a for a, b in zip(full, full[1:])}
    assert len(steps) == 1 and steps.pop() > 0
    assert len(set(sub)) == 1


def test_dangling_placeholder_detected():
    obj = split(parse_source(FIG1)).to_json()
    obj["subtrees"][0]["placeholders"][0][1] = 99
    with pytest.raises(StitchError):
        stitch(SplitResult.from_json(obj))


def test_placeholder_node_out_of_range():
    obj = split(parse_source(FIG1)).to_json()
    obj["subtrees"][0]["placeholders"][0][0] = 500
    with pytest.raises(StitchError):
        stitch(SplitResult.from_json(obj))
