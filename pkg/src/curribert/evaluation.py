"""Confusion-matrix metrics, dataset IO, splitting, and relative-size reporting."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Model, predict
from .tokenizer import Vocabulary
from .training import LabeledExample

REFERENCE_WORD_COUNT = 7_567_108


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    n: int
    unparsed_count: int | None = None

    def to_dict(self) -> dict:
        d = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "n": self.n,
        }
        if self.unparsed_count is not None:
            d["unparsed_count"] = self.unparsed_count
        return d


def _ratio(num: float, den: float) -> float:
    # 0/0 is defined as 0 so all-negative predictors score 0, not NaN.
    return num / den if den else 0.0


def compute_metrics(preds: Sequence[int], labels: Sequence[int]) -> EvalReport:
    """Precision, recall, f1, accuracy from binary predictions and labels."""
    preds = list(preds)
    labels = list(labels)
    if len(preds) != len(labels):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(labels)} labels")
    if not preds:
        raise ValueError("empty input")
    for v in preds + labels:
        if v not in (0, 1):
            raise ValueError(f"predictions and labels must be 0 or 1, got {v!r}")
    tp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 1)
    tn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 0)
    n = len(preds)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    accuracy = (tp + tn) / n
    return EvalReport(
        tp=tp, fp=fp, fn=fn, tn=tn,
        precision=precision, recall=recall, f1=f1, accuracy=accuracy, n=n,
    )


def evaluate_model(model: Model, vocab: Vocabulary, test_set: Sequence[LabeledExample]) -> EvalReport:
    """Predict every example and aggregate into an EvalReport."""
    if not test_set:
        raise ValueError("empty test set")
    preds = [predict(model, vocab, ex.text)["label"] for ex in test_set]
    return compute_metrics(preds, [ex.label for ex in test_set])


def load_labeled_dataset(path: str | Path) -> list[LabeledExample]:
    """Read labeled texts from CSV (header text,label) or JSONL ({"text","label"})."""
    path = Path(path)
    suffix = path.suffix.lower()
    examples: list[LabeledExample] = []
    if suffix == ".csv":
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or not {"text", "label"} <= set(reader.fieldnames):
                raise ValueError(f"{path}: CSV must have a header with text and label columns")
            for i, row in enumerate(reader, start=2):
                examples.append(_parse_example(row, f"{path}:{i}"))
    elif suffix == ".jsonl":
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ValueError(f"{path}:{i}: malformed JSON: {e}") from e
                examples.append(_parse_example(row, f"{path}:{i}"))
    else:
        raise ValueError(f"unsupported dataset format {suffix!r}; expected .csv or .jsonl")
    if not examples:
        raise ValueError(f"{path}: no examples found")
    return examples


def _parse_example(row: dict, where: str) -> LabeledExample:
    try:
        text = row["text"]
        label = int(row["label"])
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"{where}: each row needs text and a 0/1 label ({e})") from e
    if label not in (0, 1):
        raise ValueError(f"{where}: label must be 0 or 1, got {label}")
    if not str(text).split():
        raise ValueError(f"{where}: empty text")
    return LabeledExample(text=str(text), label=label)


def load_tagged_dataset(path: str | Path, positive_tag: str) -> list[LabeledExample]:
    """Read a CSV with text,tags columns; label is 1 iff positive_tag is present."""
    path = Path(path)
    examples: list[LabeledExample] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"text", "tags"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: CSV must have a header with text and tags columns")
        for row in reader:
            tags = {t.strip().lower() for t in (row["tags"] or "").split(",") if t.strip()}
            examples.append(
                LabeledExample(text=row["text"], label=int(positive_tag.lower() in tags))
            )
    if not examples:
        raise ValueError(f"{path}: no examples found")
    return examples


def stratified_split(
    examples: Sequence[LabeledExample],
    test_frac: float = 0.2,
    seed: int = 0,
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Per-class shuffle and split, so both splits keep the class ratio."""
    if not 0.0 < test_frac < 1.0:
        raise ValueError(f"test_frac out of range: {test_frac}")
    rng = np.random.default_rng(seed)
    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    for cls in (0, 1):
        members = [ex for ex in examples if ex.label == cls]
        order = rng.permutation(len(members))
        n_test = int(round(len(members) * test_frac))
        for j, idx in enumerate(order):
            (test if j < n_test else train).append(members[idx])
    return train, test


def relative_size(words_other: float, words_ours: float = REFERENCE_WORD_COUNT) -> float:
    """Pre-training corpus size ratio, rounded to 2 decimals."""
    if words_other <= 0 or words_ours <= 0:
        raise ValueError("word counts must be positive")
    return round(words_other / words_ours, 2)


@dataclass
class SizeRow:
    name: str
    words: float
    published_ratio: float | None = None


# Published pre-training corpus sizes (approximate word counts) next to the
# ratios those publications report against a 7,567,108-word reference corpus.
# The MentalBERT row's published ratio is a factor of 10 below words/reference,
# so the report flags it instead of matching it.
DEFAULT_SIZE_ROWS = (
    SizeRow("ours", REFERENCE_WORD_COUNT, 1.00),
    SizeRow("ClinicalBERT", 18.10e9, 2378.48),
    SizeRow("BioBERT", 18.15e9, 2377.81),
    SizeRow("Psych-Search", 8.13e9, 1073.98),
    SizeRow("MentalBERT", 2.87e9, 37.93),
)


def size_report(
    rows: Sequence[SizeRow],
    reference_words: float = REFERENCE_WORD_COUNT,
    tolerance: float = 0.01,
) -> list[dict]:
    """Relative-size rows; flags rows whose published ratio disagrees with division."""
    out = []
    for row in rows:
        ratio = relative_size(row.words, reference_words)
        entry: dict = {"name": row.name, "words": row.words, "ratio": ratio}
        if row.published_ratio is not None:
            entry["published_ratio"] = row.published_ratio
            entry["discrepancy"] = (
                abs(ratio - row.published_ratio) > tolerance * abs(row.published_ratio)
            )
        out.append(entry)
    return out
