import hashlib
import json
from pathlib import Path

import pytest

from castsum.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from castsum.nn import load_checkpoint, save_checkpoint
from castsum.preprocess import read_jsonl, write_jsonl

FIXTURES = Path(__file__).parent / "fixtures"
FIG1 = (FIXTURES / "fig1_method.java").read_text(encoding="utf-8")
TINY = {"d_model": 16, "n_heads": 2, "enc_layers": 1, "dec_layers": 1, "d_ff": 32, "dropout": 0.0,
        "k_clip": 4, "lr": 1e-3, "batch_size": 4, "max_epochs": 3, "patience": 5}


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    corpus, data, run = root / "corpus.jsonl", root / "data", root / "run"
    (root / "cfg.json").write_text(json.dumps(TINY))
    assert main(["gen", "--seed", "5", "--n", "12", "--out", str(corpus)]) == EXIT_OK
    assert main(["preprocess", "--input", str(corpus), "--out-dir", str(data)]) == EXIT_OK
    assert main(["train", "--config", str(root / "cfg.json"), "--data-dir", str(data), "--out-dir", str(run)]) == EXIT_OK
    return root


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["gen", "--seed", "7", "--n", "100", "--out", str(a)]) == EXIT_OK
    assert main(["gen", "--seed", "7", "--n", "100", "--out", str(b)]) == EXIT_OK
    assert sha(a) == sha(b)


def test_gen_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CAST_SEED", "7")
    main(["gen", "--n", "5", "--out", str(tmp_path / "env.jsonl")])
    main(["gen", "--seed", "7", "--n", "5", "--out", str(tmp_path / "flag.jsonl")])
    assert sha(tmp_path / "env.jsonl") == sha(tmp_path / "flag.jsonl")


def test_gen_zero_is_usage_error(tmp_path):
    assert main(["gen", "--seed", "1", "--n", "0", "--out", str(tmp_path / "x.jsonl")]) == EXIT_USAGE


def test_missing_required_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--seed", "1"])
    assert exc.value.code == EXIT_USAGE


def test_gen_then_preprocess_keeps_everything(tmp_path, capsys):
    main(["gen", "--seed", "7", "--n", "100", "--out", str(tmp_path / "c.jsonl")])
    capsys.readouterr()
    assert main(["preprocess", "--input", str(tmp_path / "c.jsonl"), "--out-dir", str(tmp_path / "d")]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["kept"] == 100 and stats["skipped"] == 0
    assert len(list(read_jsonl(tmp_path / "d" / "examples.jsonl"))) == 100
    assert main(["split", "--input", str(tmp_path / "c.jsonl"), "--out", str(tmp_path / "s.json")]) == EXIT_OK
    assert json.loads((tmp_path / "s.json").read_text())["stats"]["methods"] == 100


def test_split_dump(tmp_path):
    src = tmp_path / "in.jsonl"
    write_jsonl(src, [
        {"id": "fig1", "code": FIG1},
        {"id": "ret", "code": "int one() { return 1; }"},
        {"id": "bad", "code": "void broken( {"},
    ])
    assert main(["split", "--input", str(src), "--out", str(tmp_path / "out.json")]) == EXIT_OK
    dump = json.loads((tmp_path / "out.json").read_text())
    counts = {m["id"]: len(m["subtrees"]) for m in dump["methods"]}
    assert counts == {"fig1": 6, "ret": 3}
    assert dump["stats"]["skipped"] == 1 and dump["stats"]["methods"] == 2


def test_preprocess_with_no_usable_records(tmp_path):
    write_jsonl(tmp_path / "in.jsonl", [{"id": "x", "code": "nonsense ("}])
    assert main(["preprocess", "--input", str(tmp_path / "in.jsonl"), "--out-dir", str(tmp_path / "d")]) == EXIT_DATA


def test_train_writes_log_and_checkpoint(pipeline):
    lines = [json.loads(l) for l in (pipeline / "run" / "train_log.jsonl").read_text().splitlines()]
    header, records = lines[0], lines[1:]
    assert header["config"]["d_model"] == 16 and header["config"]["max_epochs"] == 3
    assert [r["epoch"] for r in records] == [1, 2, 3]
    best = min(records, key=lambda r: r["valid_loss"])
    assert best["checkpoint"].endswith("best.ckpt")
    _, meta = load_checkpoint(pipeline / "run" / "best.ckpt")
    assert meta["epoch"] == best["epoch"]


def test_train_ablation_manifests(pipeline, tmp_path):
    cfg, data = str(pipeline / "cfg.json"), str(pipeline / "data")
    assert main(["train", "--config", cfg, "--data-dir", data, "--out-dir", str(tmp_path / "c"), "--max-epochs", "1",
                 "--no-copy"]) == EXIT_OK
    assert main(["train", "--config", cfg, "--data-dir", data, "--out-dir", str(tmp_path / "a"), "--max-epochs", "1",
                 "--no-aggregation"]) == EXIT_OK
    full, _ = load_checkpoint(pipeline / "run" / "best.ckpt")
    no_copy, _ = load_checkpoint(tmp_path / "c" / "best.ckpt")
    no_agg, _ = load_checkpoint(tmp_path / "a" / "best.ckpt")
    assert any(n.startswith("copy.") for n in full) and not any(n.startswith("copy.") for n in no_copy)
    assert {"ast.WS", "ast.WB"} <= set(full) and not {"ast.WS", "ast.WB"} & set(no_agg)


def test_train_bad_config(pipeline, tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"d_model": 10, "n_heads": 4}))
    code = main(["train", "--config", str(tmp_path / "bad.json"), "--data-dir", str(pipeline / "data"),
                 "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_USAGE
    (tmp_path / "typo.json").write_text(json.dumps({"dmodel": 16}))
    assert main(["train", "--config", str(tmp_path / "typo.json"), "--data-dir", str(pipeline / "data"),
                 "--out-dir", str(tmp_path / "o")]) == EXIT_USAGE


def test_resume_with_mismatched_model_reports_diff(pipeline, tmp_path, capsys):
    code = main(["train", "--config", str(pipeline / "cfg.json"), "--data-dir", str(pipeline / "data"),
                 "--out-dir", str(tmp_path / "o"), "--d-ff", "64", "--resume", str(pipeline / "run" / "best.ckpt")])
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert "expected [64, 16], found [32, 16]" in err


def test_summarize_is_deterministic(pipeline, tmp_path):
    args = ["summarize", "--checkpoint", str(pipeline / "run" / "best.ckpt"), "--input", str(pipeline / "corpus.jsonl")]
    assert main(args + ["--out", str(tmp_path / "a.jsonl")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.jsonl")]) == EXIT_OK
    assert sha(tmp_path / "a.jsonl") == sha(tmp_path / "b.jsonl")
    out = list(read_jsonl(tmp_path / "a.jsonl"))
    assert [r["id"] for r in out] == [r["id"] for r in read_jsonl(pipeline / "corpus.jsonl")]
    assert main(args[:-2] + ["--input", str(pipeline / "corpus.jsonl"), "--decode", "beam", "--beam-width", "2",
                             "--out", str(tmp_path / "beam.jsonl")]) == EXIT_OK
    # full pipeline: eval of the greedy output against the references
    assert main(["eval", "--hyps", str(tmp_path / "a.jsonl"), "--refs", str(pipeline / "data" / "refs.jsonl"),
                 "--out", str(tmp_path / "report.json")]) == EXIT_OK
    assert set(json.loads((tmp_path / "report.json").read_text())) >= {"bleu", "meteor", "rouge_l", "cider"}


def test_summarize_empty_input(pipeline, tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["summarize", "--checkpoint", str(pipeline / "run" / "best.ckpt"), "--input",
                 str(tmp_path / "empty.jsonl"), "--out", str(tmp_path / "out.jsonl")]) == EXIT_OK
    assert (tmp_path / "out.jsonl").read_text() == ""


def test_summarize_unknown_tensor(pipeline, tmp_path, capsys):
    tensors, meta = load_checkpoint(pipeline / "run" / "best.ckpt")
    tensors["dec.extra_head"] = tensors["dec.out.bias"]
    save_checkpoint(tmp_path / "odd.ckpt", tensors, **{k: v for k, v in meta.items() if k not in ("version", "tensors")})
    code = main(["summarize", "--checkpoint", str(tmp_path / "odd.ckpt"), "--input", str(pipeline / "corpus.jsonl"),
                 "--out", str(tmp_path / "o.jsonl")])
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert "format v1" in err and "dec.extra_head" in err
    assert not (tmp_path / "o.jsonl").exists()


def test_eval_identity(pipeline, tmp_path, capsys):
    refs = str(pipeline / "data" / "refs.jsonl")
    assert main(["eval", "--hyps", refs, "--refs", refs, "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert "BLEU 100.00" in capsys.readouterr().out
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["bleu"] == 1.0 and report["rouge_l"] == 1.0


def test_eval_misaligned_ids(tmp_path, capsys):
    write_jsonl(tmp_path / "h.jsonl", [{"id": "a", "summary": "x"}, {"id": "c", "summary": "y"}])
    write_jsonl(tmp_path / "r.jsonl", [{"id": "a", "summary": "x"}, {"id": "b", "summary": "y"}])
    code = main(["eval", "--hyps", str(tmp_path / "h.jsonl"), "--refs", str(tmp_path / "r.jsonl"),
                 "--out", str(tmp_path / "rep.json")])
    assert code != EXIT_OK
    assert "missing ['b'], extra ['c']" in capsys.readouterr().err
    assert not (tmp_path / "rep.json").exists()


@pytest.mark.parametrize(
    "name, metric, expected, tol",
    [("bleu", "bleu", 0.71653, 1e-4), ("rouge", "rouge_l", 2 / 3, 1e-4), ("meteor", "meteor", (0.9375 + 0.5) / 2, 1e-6),
     ("cider", "cider", 10.0, 1e-6)],
)
def test_eval_metric_fixtures(tmp_path, name, metric, expected, tol):
    out = tmp_path / "r.json"
    assert main(["eval", "--hyps", str(FIXTURES / f"metrics_{name}.hyps.jsonl"),
                 "--refs", str(FIXTURES / f"metrics_{name}.refs.jsonl"), "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())[metric] == pytest.approx(expected, abs=tol)
