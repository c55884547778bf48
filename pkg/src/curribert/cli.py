"""Command-line interface: corpus stats, vocab, training, evaluation, reports.

Exit codes: 0 success, 1 runtime error (message on stderr), 2 usage error.
Machine-readable results go to stdout as JSON; progress notes go to stderr.
The CASE_THREADS environment variable (positive integer) caps BLAS thread
pools; it is applied before numpy loads, which is why it happens at import.
"""

from __future__ import annotations

import os

_THREAD_CAP_ERROR: str | None = None


def _apply_thread_cap() -> None:
    global _THREAD_CAP_ERROR
    raw = os.environ.get("CASE_THREADS")
    if raw is None:
        return
    if not raw.isdigit() or int(raw) < 1:
        _THREAD_CAP_ERROR = f"CASE_THREADS must be a positive integer, got {raw!r}"
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        os.environ.setdefault(var, raw)


_apply_thread_cap()

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import corpus_stats, ingest
from .evaluation import (
    DEFAULT_SIZE_ROWS,
    SizeRow,
    evaluate_model,
    load_labeled_dataset,
    size_report,
)
from .model import Model, ModelConfig, PRESETS, predict
from .prompting import make_bundle, render_prompt
from .tokenizer import Vocabulary, build_vocab
from .training import FinetuneConfig, PretrainConfig, finetune, pretrain

CONFIG_DEFAULTS = {
    "preset": "small-toy",
    "mask_prob": 0.15,
    "window_len": 500,
    "overlap": 50,
    "lr": 1e-5,
    "effective_batch": 128,
    "micro_batch": 32,
    "pretrain_epochs": 60,
    "finetune_epochs": 3,
    "finetune_batch": 32,
    "dropout_prob": 0.1,
    "max_positions": 512,
}


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None
    inputs: dict
    outputs: dict
    tool_version: str

    def write_next_to(self, out_path: str | Path) -> None:
        path = Path(str(out_path) + ".manifest.json")
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "tool_version": self.tool_version,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_config(path: str | Path | None, overrides: dict | None = None) -> dict:
    """Defaults, overridden by the JSON config file, overridden by flags."""
    cfg = dict(CONFIG_DEFAULTS)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: malformed JSON config: {e}") from e
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        for key in loaded:
            if key not in CONFIG_DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
        cfg.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in CONFIG_DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = value
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    if not 0.0 < cfg["mask_prob"] < 1.0:
        raise ValueError("mask_prob out of range")
    if cfg["lr"] <= 0:
        raise ValueError("lr out of range")
    if cfg["window_len"] < 1:
        raise ValueError("window_len out of range")
    if not 0 <= cfg["overlap"] < cfg["window_len"]:
        raise ValueError("overlap out of range")
    for key in ("effective_batch", "micro_batch", "pretrain_epochs", "finetune_epochs", "finetune_batch"):
        if cfg[key] < 1:
            raise ValueError(f"{key} out of range")
    if cfg["effective_batch"] % cfg["micro_batch"] != 0:
        raise ValueError("micro_batch must divide effective_batch")
    if not 0.0 <= cfg["dropout_prob"] < 1.0:
        raise ValueError("dropout_prob out of range")
    if cfg["max_positions"] < 3:
        raise ValueError("max_positions out of range")
    if cfg["preset"] not in PRESETS:
        raise ValueError(f"unknown preset {cfg['preset']!r}; available: {sorted(PRESETS)}")


def _resolve_vocab(checkpoint_path: str, vocab_flag: str | None, expected_hash: str) -> Vocabulary:
    """Find the tokenizer for a checkpoint and verify the content hash."""
    vocab_path = Path(vocab_flag) if vocab_flag else Path(str(checkpoint_path) + ".vocab.txt")
    if not vocab_path.exists():
        raise FileNotFoundError(
            f"vocabulary file not found at {vocab_path}; pass --vocab explicitly"
        )
    vocab = Vocabulary.load(vocab_path)
    actual = vocab.content_hash()
    if actual != expected_hash:
        raise ValueError(
            f"vocab hash mismatch: checkpoint expects {expected_hash}, "
            f"{vocab_path} has {actual}"
        )
    return vocab


def _cmd_stats(args) -> int:
    docs = ingest(args.corpus, format=args.format)
    print(json.dumps(corpus_stats(docs).to_dict()))
    return 0


def _cmd_build_vocab(args) -> int:
    docs = ingest(args.corpus, format=args.format)
    vocab = build_vocab(docs, args.vocab_size)
    vocab.save(args.out)
    RunManifest(
        subcommand="build-vocab",
        config={"vocab_size": args.vocab_size, "format": args.format},
        seed=None,
        inputs={"corpus": str(args.corpus)},
        outputs={"vocab": str(args.out)},
        tool_version=__version__,
    ).write_next_to(args.out)
    print(json.dumps({"vocab": str(args.out), "size": len(vocab), "hash": vocab.content_hash()}))
    return 0


def _cmd_pretrain(args) -> int:
    cfg = load_config(
        args.config,
        {
            "preset": args.preset,
            "lr": args.lr,
            "mask_prob": args.mask_prob,
            "window_len": args.window_len,
            "overlap": args.overlap,
            "effective_batch": args.effective_batch,
            "micro_batch": args.micro_batch,
            "pretrain_epochs": args.epochs,
            "dropout_prob": args.dropout_prob,
            "max_positions": args.max_positions,
        },
    )
    docs = ingest(args.corpus, format=args.format)
    vocab = Vocabulary.load(args.vocab)
    model_config = ModelConfig(
        vocab_size=len(vocab),
        max_positions=cfg["max_positions"],
        dropout_prob=cfg["dropout_prob"],
        **PRESETS[cfg["preset"]],
    )
    pretrain_config = PretrainConfig(
        mask_prob=cfg["mask_prob"],
        epochs=cfg["pretrain_epochs"],
        lr=cfg["lr"],
        effective_batch=cfg["effective_batch"],
        micro_batch=cfg["micro_batch"],
        window_len=cfg["window_len"],
        overlap=cfg["overlap"],
        seed=args.seed,
    )
    loss_log = str(args.out) + ".losses.jsonl"
    Path(loss_log).unlink(missing_ok=True)
    model, log = pretrain(docs, vocab, model_config, pretrain_config, loss_log_path=loss_log)
    save_checkpoint(model, vocab.content_hash(), args.out)
    vocab.save(str(args.out) + ".vocab.txt")
    RunManifest(
        subcommand="pretrain",
        config=cfg,
        seed=args.seed,
        inputs={"corpus": str(args.corpus), "vocab": str(args.vocab)},
        outputs={"checkpoint": str(args.out), "loss_log": loss_log},
        tool_version=__version__,
    ).write_next_to(args.out)
    print(json.dumps({"checkpoint": str(args.out), "final_loss": log[-1]["loss"], "epochs": len(log)}))
    return 0


def _cmd_finetune(args) -> int:
    cfg = load_config(
        args.config,
        {"lr": args.lr, "finetune_epochs": args.epochs, "finetune_batch": args.batch},
    )
    model, expected_hash = load_checkpoint(args.checkpoint)
    vocab = _resolve_vocab(args.checkpoint, args.vocab, expected_hash)
    train_set = load_labeled_dataset(args.train)
    finetune_config = FinetuneConfig(
        epochs=cfg["finetune_epochs"],
        batch=cfg["finetune_batch"],
        lr=cfg["lr"],
        seed=args.seed,
    )
    loss_log = str(args.out) + ".losses.jsonl"
    Path(loss_log).unlink(missing_ok=True)
    model, log = finetune(model, train_set, vocab, finetune_config, loss_log_path=loss_log)
    save_checkpoint(model, vocab.content_hash(), args.out)
    vocab.save(str(args.out) + ".vocab.txt")
    RunManifest(
        subcommand="finetune",
        config=cfg,
        seed=args.seed,
        inputs={"checkpoint": str(args.checkpoint), "train": str(args.train)},
        outputs={"checkpoint": str(args.out), "loss_log": loss_log},
        tool_version=__version__,
    ).write_next_to(args.out)
    result = {"checkpoint": str(args.out), "final_loss": log[-1]["loss"]}
    if args.val:
        val_set = load_labeled_dataset(args.val)
        result["val"] = evaluate_model(model, vocab, val_set).to_dict()
    print(json.dumps(result))
    return 0


def _cmd_evaluate(args) -> int:
    model, expected_hash = load_checkpoint(args.checkpoint)
    vocab = _resolve_vocab(args.checkpoint, args.vocab, expected_hash)
    test_set = load_labeled_dataset(args.test)
    report = evaluate_model(model, vocab, test_set).to_dict()
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    RunManifest(
        subcommand="evaluate",
        config={},
        seed=None,
        inputs={"checkpoint": str(args.checkpoint), "test": str(args.test)},
        outputs={"report": str(args.report)},
        tool_version=__version__,
    ).write_next_to(args.report)
    print(json.dumps(report))
    return 0


def _cmd_predict(args) -> int:
    model, expected_hash = load_checkpoint(args.checkpoint)
    vocab = _resolve_vocab(args.checkpoint, args.vocab, expected_hash)
    if args.text is not None:
        print(json.dumps(predict(model, vocab, args.text)))
        return 0
    with open(args.input, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                print(json.dumps(predict(model, vocab, line)))
    return 0


def _cmd_render_prompt(args) -> int:
    train_set = load_labeled_dataset(args.train)
    bundle = make_bundle(train_set, args.query, args.disorder, np.random.default_rng(args.seed))
    print(render_prompt(bundle))
    return 0


def _cmd_report_sizes(args) -> int:
    if args.rows is None:
        rows = list(DEFAULT_SIZE_ROWS)
    else:
        raw = json.loads(Path(args.rows).read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise ValueError(f"{args.rows}: expected a JSON list of rows")
        rows = [
            SizeRow(
                name=r["name"],
                words=float(r["words"]),
                published_ratio=r.get("published_ratio"),
            )
            for r in raw
        ]
    print(json.dumps(size_report(rows), indent=2))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curribert",
        description="Small-corpus MLM pre-training and disorder-flagging fine-tuning.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stats", help="print corpus statistics as JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["plain-dir", "jsonl"], default="plain-dir")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("build-vocab", help="learn a subword vocabulary from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["plain-dir", "jsonl"], default="plain-dir")
    p.set_defaults(func=_cmd_build_vocab)

    p = sub.add_parser("pretrain", help="masked-language-model pre-training")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["plain-dir", "jsonl"], default="plain-dir")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--mask-prob", type=float, default=None)
    p.add_argument("--window-len", type=int, default=None)
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--effective-batch", type=int, default=None)
    p.add_argument("--micro-batch", type=int, default=None)
    p.add_argument("--dropout-prob", type=float, default=None)
    p.add_argument("--max-positions", type=int, default=None)
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint for binary flagging")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--val", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("evaluate", help="evaluate a fine-tuned checkpoint on a test set")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--vocab", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("predict", help="flag one text or a file of texts")
    p.add_argument("--checkpoint", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", default=None)
    group.add_argument("--input", default=None)
    p.add_argument("--vocab", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("render-prompt", help="render the one-shot yes/no prompt")
    p.add_argument("--train", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--disorder", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_render_prompt)

    p = sub.add_parser("report-sizes", help="relative pre-training corpus size report")
    p.add_argument("--rows", default=None)
    p.set_defaults(func=_cmd_report_sizes)

    return parser


def main(argv: list[str] | None = None) -> int:
    if _THREAD_CAP_ERROR is not None:
        print(f"error: {_THREAD_CAP_ERROR}", file=sys.stderr)
        return 1
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
