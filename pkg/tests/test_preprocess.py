import hashlib
import json
import logging

import pytest

from castsum.frontend import parse_source, tokenize
from castsum.preprocess import (
    BOS,
    ast_label_sequences,
    EOS,
    PAD,
    UNK,
    EmptySummary,
    Vocabulary,
    build_vocab,
    encode_example,
    example_from_json,
    example_to_json,
    examples_from_records,
    extract_summary,
    generate_corpus,
    make_example,
    normalize_code_tokens,
    split_identifier,
    to_record,
)
from castsum.preprocess.dataset import normalize_tree
from castsum.preprocess.text import GENERIC_TOKENS, normalize_ast_label
from castsum.splitter import stitch


class TestNormalization:
    def test_camel_case(self):
        assert split_identifier("getFirstItemIndex") == ["get", "first", "item", "index"]

    def test_snake_case(self):
        assert split_identifier("MAX_VALUE") == ["max", "value"]

    def test_acronyms_and_digits(self):
        assert split_identifier("parseHTTPResponse") == ["parse", "http", "response"]
        assert split_identifier("utf8String") == ["utf", "8", "string"]

    def test_literals(self):
        assert normalize_code_tokens(tokenize("42")) == ["<NUM>"]
        assert normalize_code_tokens(tokenize('"a b"')) == ["<STRING>"]
        assert normalize_code_tokens(tokenize("'c' 1.5")) == ["<STRING>", "<NUM>"]

    def test_operators_kept(self):
        assert normalize_code_tokens(tokenize("a += b;")) == ["a", "+=", "b", ";"]

    def test_no_uppercase_or_underscore(self):
        for src, _ in generate_corpus(4, 50, invented_rate=0.3):
            for tok in normalize_code_tokens(tokenize(src)):
                if tok in GENERIC_TOKENS:
                    continue
                assert tok == tok.lower() and "_" not in tok

    def test_ast_labels(self):
        assert normalize_ast_label("MethodCall", terminal=False) == ["MethodCall"]
        assert normalize_ast_label("getName", terminal=True) == ["get", "name"]
        assert normalize_ast_label("List<String>", terminal=True) == ["list", "string"]
        assert normalize_ast_label("42", terminal=True) == ["<NUM>"]
        assert normalize_ast_label("return", terminal=True) == ["return"]
        assert normalize_ast_label("==", terminal=True) == ["=="]

    def test_identifier_chain(self):
        tree = normalize_tree(parse_source("void getItemCount() { return; }"))
        name = tree.children[0].children[1]
        assert name.label == "MethodName"
        head = name.children[0]
        assert head.label == "get" and [c.label for c in head.children] == ["item", "count"]


class TestSummary:
    def test_first_sentence(self):
        assert extract_summary("/** Returns the index. @param i the position */") == ["returns", "the", "index"]

    def test_fig1_summary(self):
        doc = "/** Loop through each of the columns in the given table, migrating each as a resource or relation. */"
        toks = extract_summary(doc)
        assert len(toks) == 17 and toks[:2] == ["loop", "through"]

    def test_tag_only(self):
        with pytest.raises(EmptySummary):
            extract_summary("/** @deprecated */")

    def test_tag_line_stops(self):
        doc = "/**\n * Opens the file\n * @param f the file. More.\n */"
        assert extract_summary(doc) == ["opens", "the", "file"]

    def test_inline_tags_and_html(self):
        doc = "/** Returns the {@code size} of the <b>list</b>. */"
        assert extract_summary(doc) == ["returns", "the", "size", "of", "the", "list"]

    def test_dotted_names_do_not_end_sentence(self):
        assert extract_summary("/** Calls java.util.List here. Then more. */") == [
            "calls", "java", "util", "list", "here",
        ]


class TestVocabulary:
    CORPUS = [["a", "b", "a"], ["c", "a", "b"]]

    def test_frequency_order(self):
        v = build_vocab(self.CORPUS, "code", cap=6)
        assert (v.id("a"), v.id("b"), v.id("c")) == (4, 5, 6)
        assert v.itos[:4] == ["<pad>", "<unk>", "<s>", "</s>"]
        assert (PAD, UNK, BOS, EOS) == (0, 1, 2, 3)

    def test_cap(self):
        v = build_vocab(self.CORPUS, "code", cap=2)
        assert v.encode(["c", "a"]) == [UNK, 4]

    def test_tie_break(self):
        v = build_vocab([["zeta", "alpha"]], "summary", cap=5)
        assert v.id("alpha") < v.id("zeta")

    def test_round_trip_and_io(self, tmp_path):
        v = build_vocab(self.CORPUS, "ast", cap=10)
        toks = ["a", "b", "c"]
        assert v.decode(v.encode(toks)) == toks
        v.save(tmp_path / "v.json")
        assert Vocabulary.load(tmp_path / "v.json") == v
        obj = json.loads((tmp_path / "v.json").read_text())
        assert set(obj) == {"channel", "tokens"}

    def test_reserved_never_counted(self):
        v = build_vocab([["<unk>", "<pad>", "x"]], "code", cap=10)
        assert len(v) == 5 and v.id("x") == 4


class TestCorpus:
    def test_one_method_parses(self):
        (src, doc), = list(generate_corpus(7, 1))
        parse_source(src)
        assert extract_summary(doc)

    def test_deterministic_bytes(self):
        def digest():
            h = hashlib.sha256()
            for src, doc in generate_corpus(7, 100):
                h.update(src.encode())
                h.update(doc.encode())
            return h.hexdigest()

        assert digest() == digest()

    def test_nesting_rate(self):
        nested = 0
        for src, _ in generate_corpus(7, 100):
            body = parse_source(src).children[1]
            for stmt in body.children:
                if stmt.kind == "composite-stmt" and any(
                    n.kind == "composite-stmt" for n in stmt.preorder() if n is not stmt
                ):
                    nested += 1
                    break
        assert nested >= 30

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            list(generate_corpus(1, 0))


class TestExamples:
    def test_make_example_from_record(self):
        src, doc = next(iter(generate_corpus(2, 1)))
        rec = to_record(0, src, doc)
        (ex,) = examples_from_records([rec])
        assert ex.id == "m00000"
        assert ex.summary_tokens == extract_summary(doc)
        assert stitch(ex.split).label == "Root"
        assert example_from_json(json.loads(json.dumps(example_to_json(ex)))).split.to_json() == ex.split.to_json()

    def test_bad_records_skipped(self):
        stats = {}
        good = to_record(0, *next(iter(generate_corpus(2, 1))))
        out = examples_from_records([good, {"id": "x", "code": "void f( {"}, {"id": "y"}], stats)
        assert len(out) == 1 and stats == {"kept": 1, "skipped": 2}

    def test_summary_field_wins(self):
        ex = make_example("a", "void f() { return; }", "Does nothing.")
        assert ex.summary_tokens == ["does", "nothing"]
        with pytest.raises(EmptySummary):
            make_example("b", "void f() { return; }")
        assert make_example("c", "void f() { return; }", require_summary=False).summary_tokens == []

    def test_truncation_warns(self, caplog):
        body = " ".join(f"x{i} = {i};" for i in range(60))
        with caplog.at_level(logging.WARNING):
            ex = make_example("long", f"void f() {{ {body} }}", "Sets things.", max_code_len=50)
        assert len(ex.code_tokens) == 50
        assert "truncated" in caplog.text

    def test_encode_example(self):
        exs = examples_from_records([to_record(i, s, d) for i, (s, d) in enumerate(generate_corpus(3, 4))])
        av = build_vocab((seq for e in exs for seq in ast_label_sequences(e)), "ast")
        cv = build_vocab((e.code_tokens for e in exs), "code")
        enc = encode_example(exs[0], av, cv)
        assert len(enc.node_ids) == len(enc.struct_parents) == len(exs[0].split.subtrees)
        assert enc.struct_parents[0] == -1
        assert all(p[0] == -1 and all(q < i for i, q in enumerate(p) if i) for p in enc.node_parents)
        assert cv.decode(enc.code_ids) == exs[0].code_tokens
