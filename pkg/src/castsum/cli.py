"""Command-line pipeline: gen, preprocess, split, train, summarize, eval.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .frontend import LexError, ParseError, SexprError, parse_source
from .metrics import CorpusTooSmall, evaluate, percent_view
from .model import LengthError, ShapeError
from .nn import CheckpointError
from .preprocess import (
    EmptySummary,
    Vocabulary,
    example_from_json,
    example_to_json,
    examples_from_records,
    generate_corpus,
    make_example,
    read_jsonl,
    to_record,
    write_jsonl,
)
from .splitter import StitchError, split, split_stats
from .train import RunConfig, build_vocabularies, encode_all, generate, load_model, train

log = logging.getLogger("castsum")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- subcommands ------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be at least 1, got {args.n}")
    seed = _seed(args.seed)
    pairs = generate_corpus(seed, args.n, invented_rate=args.invented_rate)
    write_jsonl(args.out, (to_record(i, src, doc) for i, (src, doc) in enumerate(pairs)))
    print(f"wrote {args.n} methods to {args.out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    config = RunConfig.load(args.config, ast_cap=args.ast_cap, code_cap=args.code_cap, summary_cap=args.summary_cap)
    stats: dict = {}
    examples = examples_from_records(read_jsonl(args.input), stats)
    if not examples:
        raise DataError(f"{args.input}: no usable methods ({stats['skipped']} skipped)")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.vocab_from:
        vocabs = _load_vocabs(Path(args.vocab_from))
    else:
        vocabs = build_vocabularies(
            examples, {"ast": config.ast_cap, "code": config.code_cap, "summary": config.summary_cap}
        )
    for name, v in vocabs.items():
        v.save(out / f"vocab.{name}.json")
    write_jsonl(out / "examples.jsonl", (example_to_json(e) for e in examples))
    write_jsonl(out / "refs.jsonl", ({"id": e.id, "summary": " ".join(e.summary_tokens)} for e in examples))
    print(json.dumps({"kept": stats["kept"], "skipped": stats["skipped"], **{f"vocab_{k}": len(v) for k, v in vocabs.items()}}))
    return EXIT_OK


def cmd_split(args) -> int:
    methods, skipped = [], 0
    for rec in read_jsonl(args.input):
        try:
            result = split(parse_source(rec["code"]))
        except (LexError, ParseError, KeyError, TypeError) as exc:
            skipped += 1
            log.warning("skipping record %s: %s", rec.get("id") if isinstance(rec, dict) else "?", exc)
            continue
        methods.append({"id": str(rec.get("id", len(methods))), **result.to_json(), "stats": split_stats(result)})
    per = [m["stats"] for m in methods]
    summary = {
        "methods": len(methods),
        "skipped": skipped,
        "mean_subtrees": sum(s["subtree_count"] for s in per) / len(per) if per else 0.0,
        "max_subtree_depth": max((s["max_subtree_depth"] for s in per), default=0),
        "max_full_tree_depth": max((s["full_tree_depth"] for s in per), default=0),
        "max_subtree_nodes": max((s["max_subtree_nodes"] for s in per), default=0),
    }
    dump = {"stats": summary, "methods": methods}
    text = json.dumps(dump, ensure_ascii=False, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(json.dumps(summary))
    else:
        print(text)
    return EXIT_OK


def cmd_train(args) -> int:
    overrides = {
        k: getattr(args, k)
        for k in (
            "seed", "lr", "batch_size", "max_epochs", "patience", "d_model", "n_heads", "enc_layers",
            "dec_layers", "d_ff", "k_clip", "dropout", "weight_decay",
        )
    }
    overrides["no_copy"] = True if args.no_copy else None
    overrides["no_aggregation"] = True if args.no_aggregation else None
    overrides["data_dir"] = args.data_dir
    overrides["valid_path"] = args.valid_dir
    overrides["out_dir"] = args.out_dir
    try:
        config = RunConfig.load(args.config, **overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if config.data_dir is None or config.out_dir is None:
        raise UsageError("train needs --data-dir and --out-dir (or data_dir/out_dir in the config)")
    data_dir = Path(config.data_dir)
    vocabs = _load_vocabs(data_dir)
    train_data = encode_all(_load_examples(data_dir), vocabs)
    valid_data = encode_all(_load_examples(Path(config.valid_path)), vocabs) if config.valid_path else None

    def echo(rec):
        bleu = f" bleu {100 * rec.valid_bleu:.2f}" if rec.valid_bleu is not None else ""
        mark = " *" if rec.checkpoint else ""
        print(f"epoch {rec.epoch:3d} train {rec.train_loss:.4f} valid {rec.valid_loss:.4f}{bleu}{mark}", flush=True)

    result = train(config, train_data, vocabs, valid_data, out_dir=config.out_dir, resume=args.resume, on_epoch=echo)
    print(f"best epoch {result.best_epoch} valid loss {result.best_valid_loss:.4f} -> {result.best_path}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    model, vocabs, meta = load_model(args.checkpoint)
    run = meta.get("run_config", {})
    mode = args.decode or run.get("decode", "greedy")
    width = args.beam_width or run.get("beam_width", 4)
    records = list(read_jsonl(args.input))
    examples = []
    for rec in records:
        try:
            examples.append(make_example(str(rec["id"]), rec["code"], rec.get("summary"), require_summary=False))
        except (LexError, ParseError, KeyError, TypeError) as exc:
            raise DataError(f"{args.input}: record {rec.get('id', '?')}: {exc}") from exc
    outputs = generate(model, encode_all(examples, vocabs), vocabs["summary"], mode=mode, beam_width=width) if examples else []
    write_jsonl(args.out, ({"id": e.id, "summary": " ".join(o.tokens)} for e, o in zip(examples, outputs)))
    print(f"wrote {len(outputs)} summaries to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    hyps = {str(r["id"]): r["summary"] for r in read_jsonl(args.hyps)}
    refs = {str(r["id"]): r["summary"] for r in read_jsonl(args.refs)}
    missing = sorted(set(refs) - set(hyps))
    extra = sorted(set(hyps) - set(refs))
    if missing or extra:
        raise DataError(f"id mismatch between hypotheses and references: missing {missing}, extra {extra}")
    if not refs:
        raise DataError("no references to score")
    ids = list(refs)
    report = evaluate([(hyps[i].split(), refs[i].split()) for i in ids], ids)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    shown = percent_view(report)
    cider = f"{shown['cider']:.4f}" if shown["cider"] is not None else "n/a"
    print(
        f"BLEU {shown['bleu']:.2f}  METEOR {shown['meteor']:.2f}  ROUGE-L {shown['rouge_l']:.2f}  "
        f"CIDEr {cider}  (n={shown['n']})"
    )
    return EXIT_OK


# -- helpers ----------------------------------------------------------------------


def _seed(value: int | None) -> int:
    return RunConfig.load(seed=value).seed


def _load_vocabs(directory: Path) -> dict[str, Vocabulary]:
    return {name: Vocabulary.load(directory / f"vocab.{name}.json") for name in ("ast", "code", "summary")}


def _load_examples(directory: Path):
    try:
        return [example_from_json(obj) for obj in read_jsonl(directory / "examples.jsonl")]
    except (KeyError, SexprError) as exc:
        raise DataError(f"{directory / 'examples.jsonl'}: malformed example ({exc})") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="castsum", description="AST-split code summarization pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic Java corpus")
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--invented-rate", type=float, default=0.0, help="share of invented, out-of-dictionary nouns")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    pp = sub.add_parser("preprocess", help="parse, split and tokenize a corpus; build vocabularies")
    pp.add_argument("--input", required=True)
    pp.add_argument("--out-dir", required=True)
    pp.add_argument("--config")
    pp.add_argument("--vocab-from", help="reuse the vocabularies of an earlier preprocess run")
    pp.add_argument("--ast-cap", type=int)
    pp.add_argument("--code-cap", type=int)
    pp.add_argument("--summary-cap", type=int)
    pp.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("split", help="dump split subtrees for each method")
    s.add_argument("--input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_split)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--config")
    t.add_argument("--data-dir")
    t.add_argument("--valid-dir")
    t.add_argument("--out-dir")
    t.add_argument("--resume")
    for flag, typ in (
        ("--seed", int), ("--lr", float), ("--batch-size", int), ("--max-epochs", int), ("--patience", int),
        ("--d-model", int), ("--n-heads", int), ("--enc-layers", int), ("--dec-layers", int), ("--d-ff", int),
        ("--k-clip", int), ("--dropout", float), ("--weight-decay", float),
    ):
        t.add_argument(flag, type=typ)
    t.add_argument("--no-copy", action="store_true", help="ablation without the copy mechanism")
    t.add_argument("--no-aggregation", action="store_true", help="ablation without structure-tree aggregation")
    t.set_defaults(func=cmd_train)

    sm = sub.add_parser("summarize", help="generate summaries with a trained checkpoint")
    sm.add_argument("--checkpoint", required=True)
    sm.add_argument("--input", required=True)
    sm.add_argument("--out", required=True)
    sm.add_argument("--decode", choices=("greedy", "beam"))
    sm.add_argument("--beam-width", type=int)
    sm.set_defaults(func=cmd_summarize)

    e = sub.add_parser("eval", help="score summaries against references")
    e.add_argument("--hyps", required=True)
    e.add_argument("--refs", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"castsum {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, OSError, ValueError, EmptySummary, LengthError, CorpusTooSmall) as exc:
        if isinstance(exc, (StitchError, ShapeError)):
            print(f"castsum {args.command}: internal error: {exc}", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"castsum {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (AssertionError, RuntimeError) as exc:
        print(f"castsum {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
