"""Corpus ingestion, normalization, statistics, and token windowing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str


@dataclass(frozen=True)
class CorpusStats:
    word_count: int
    sentence_count: int
    doc_count: int

    def to_dict(self) -> dict:
        return {
            "word_count": self.word_count,
            "sentence_count": self.sentence_count,
            "doc_count": self.doc_count,
        }


@dataclass(frozen=True)
class TokenWindow:
    """A contiguous slice of a tokenized document, at most ``window_len`` ids long."""

    ids: tuple[int, ...]
    doc_id: str
    start: int


def ingest(path: str | Path, format: str = "plain-dir") -> list[RawDocument]:
    """Load a corpus from a directory of *.txt files or a JSONL file.

    plain-dir: one document per file, ordered lexicographically by filename,
    doc_id = filename without extension. jsonl: one object per line with
    "id" and "text" fields, line order preserved.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus path not found: {path}")
    if format == "plain-dir":
        if not path.is_dir():
            raise ValueError(f"plain-dir corpus must be a directory: {path}")
        docs = []
        for txt in sorted(path.glob("*.txt"), key=lambda p: p.name):
            try:
                text = txt.read_text(encoding="utf-8")
            except UnicodeDecodeError as e:
                raise ValueError(f"{txt.name} is not valid UTF-8: {e}") from e
            docs.append(RawDocument(doc_id=txt.stem, text=text))
    elif format == "jsonl":
        if not path.is_file():
            raise ValueError(f"jsonl corpus must be a file: {path}")
        docs = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ValueError(f"malformed jsonl at line {lineno}: {e}") from e
                if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                    raise ValueError(
                        f"malformed jsonl at line {lineno}: expected object with 'id' and 'text'"
                    )
                docs.append(RawDocument(doc_id=str(obj["id"]), text=str(obj["text"])))
    else:
        raise ValueError(f"unknown corpus format: {format!r}")

    if not docs:
        raise ValueError(f"no documents found in {path}")
    seen: set[str] = set()
    for d in docs:
        if not d.doc_id:
            raise ValueError("empty doc_id")
        if d.doc_id in seen:
            raise ValueError(f"duplicate doc_id: {d.doc_id!r}")
        seen.add(d.doc_id)
    return docs


def normalize(text: str) -> str:
    """Lowercase and collapse all whitespace runs to single spaces."""
    return " ".join(text.lower().split())


def _sentence_count(text: str) -> int:
    # A sentence ends at '.', '?' or '!' followed by whitespace or end of text;
    # a trailing unterminated segment with at least one word counts once.
    count = 0
    tail_start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch in ".?!" and (i + 1 == n or text[i + 1].isspace()):
            count += 1
            tail_start = i + 1
    if text[tail_start:].split():
        count += 1
    return count


def corpus_stats(docs: Sequence[RawDocument]) -> CorpusStats:
    """Whitespace word count and terminator-delimited sentence count over all docs."""
    words = sum(len(d.text.split()) for d in docs)
    sentences = sum(_sentence_count(d.text) for d in docs)
    return CorpusStats(word_count=words, sentence_count=sentences, doc_count=len(docs))


def make_windows(
    ids: Sequence[int],
    window_len: int = 500,
    overlap: int = 50,
    doc_id: str = "",
) -> list[TokenWindow]:
    """Cut a token-id sequence into overlapping windows.

    Windows start at offsets 0, s, 2s, ... with stride s = window_len - overlap;
    each takes min(window_len, remaining) tokens. A trailing window is emitted
    only if it covers at least one token the previous window did not.
    """
    if window_len < 1:
        raise ValueError(f"window_len must be >= 1, got {window_len}")
    if not 0 <= overlap < window_len:
        raise ValueError(f"overlap must satisfy 0 <= overlap < window_len, got {overlap}")
    ids = list(ids)
    n = len(ids)
    stride = window_len - overlap
    windows: list[TokenWindow] = []
    prev_end = 0
    k = 0
    while True:
        start = k * stride
        if start >= n:
            break
        end = min(start + window_len, n)
        if k > 0 and end <= prev_end:
            break
        windows.append(TokenWindow(ids=tuple(ids[start:end]), doc_id=doc_id, start=start))
        prev_end = end
        k += 1
    return windows
