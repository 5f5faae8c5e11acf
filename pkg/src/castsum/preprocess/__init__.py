from .corpus import generate_corpus, nested_method, to_record
from .dataset import (
    EncodedExample,
    Example,
    ast_label_sequences,
    encode_example,
    example_from_json,
    example_to_json,
    examples_from_records,
    make_example,
    read_jsonl,
    write_jsonl,
)
from .text import EmptySummary, extract_summary, normalize_code_tokens, split_identifier
from .vocab import BOS, EOS, PAD, UNK, Vocabulary, build_vocab

__all__ = [
    "BOS",
    "EOS",
    "EmptySummary",
    "EncodedExample",
    "Example",
    "PAD",
    "UNK",
    "Vocabulary",
    "ast_label_sequences",
    "build_vocab",
    "encode_example",
    "example_from_json",
    "example_to_json",
    "examples_from_records",
    "extract_summary",
    "generate_corpus",
    "make_example",
    "nested_method",
    "normalize_code_tokens",
    "read_jsonl",
    "split_identifier",
    "to_record",
    "write_jsonl",
]
