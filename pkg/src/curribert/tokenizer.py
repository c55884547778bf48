"""Subword vocabulary induction and greedy longest-match encoding/decoding.

The vocabulary is induced by frequency-ranked pair merges over whitespace
words (BPE-style) and rendered as WordPiece-compatible pieces: a non-initial
piece carries the "##" continuation prefix. Encoding is deterministic greedy
longest-match-first; a word with any unmatchable remainder becomes a single
[UNK].
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path
from typing import Sequence

from .corpus import RawDocument, normalize

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
NUM_SPECIALS = len(SPECIAL_TOKENS)
CONTINUATION_PREFIX = "##"


class Vocabulary:
    """Ordered subword inventory; ids are dense, specials pinned to 0..4."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:NUM_SPECIALS]) != SPECIAL_TOKENS:
            raise ValueError(f"first {NUM_SPECIALS} tokens must be {SPECIAL_TOKENS}")
        if any(not t for t in tokens):
            raise ValueError("empty token in vocabulary")
        self.tokens = tokens
        self.id_of = {t: i for i, t in enumerate(tokens)}
        if len(self.id_of) != len(tokens):
            dup = [t for t, c in Counter(tokens).items() if c > 1]
            raise ValueError(f"duplicate tokens in vocabulary: {dup[:5]}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def text_bytes(self) -> bytes:
        """The exact on-disk token-file content (one token per line)."""
        return ("\n".join(self.tokens) + "\n").encode("utf-8")

    def content_hash(self) -> str:
        return hashlib.sha256(self.text_bytes()).hexdigest()

    def save(self, path: str | Path) -> None:
        """Write the token file plus a `<path>.json` sidecar header."""
        path = Path(path)
        path.write_bytes(self.text_bytes())
        header = {"version": 1, "size": len(self.tokens), "specials": list(SPECIAL_TOKENS)}
        Path(str(path) + ".json").write_text(
            json.dumps(header, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"vocabulary file not found: {path}")
        tokens = path.read_text(encoding="utf-8").splitlines()
        sidecar = Path(str(path) + ".json")
        if sidecar.is_file():
            header = json.loads(sidecar.read_text(encoding="utf-8"))
            if header.get("version") != 1:
                raise ValueError(f"unsupported vocabulary version: {header.get('version')}")
            if header.get("size") != len(tokens):
                raise ValueError(
                    f"vocabulary size mismatch: header says {header.get('size')}, "
                    f"file has {len(tokens)} tokens"
                )
        return cls(tokens)


def _merge_pair(pieces: list[str], pair: tuple[str, str], merged: str) -> list[str]:
    out = []
    i = 0
    while i < len(pieces):
        if i + 1 < len(pieces) and (pieces[i], pieces[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(pieces[i])
            i += 1
    return out


def _merged_surface(pair: tuple[str, str]) -> str:
    first, second = pair
    if not second.startswith(CONTINUATION_PREFIX):
        raise ValueError(f"non-initial piece without continuation prefix: {second!r}")
    return first + second[len(CONTINUATION_PREFIX):]


def build_vocab(docs: Sequence[RawDocument], target_size: int) -> Vocabulary:
    """Induce a vocabulary of exactly target_size entries from a corpus.

    Layout: 5 specials, single characters, their "##"-forms, then one token per
    pair merge, merges applied by descending corpus frequency (ties: lexicographic
    order of the merged string, then of the pair). Deterministic for a fixed corpus.
    """
    word_freq: Counter[str] = Counter()
    for doc in docs:
        word_freq.update(normalize(doc.text).split())
    if not word_freq:
        raise ValueError("empty corpus: no words after normalization")

    chars = sorted({c for w in word_freq for c in w})
    floor = NUM_SPECIALS + 2 * len(chars)
    if target_size < floor:
        raise ValueError(
            f"target_size too small: need at least {floor} "
            f"(5 specials + {len(chars)} chars + their continuation forms)"
        )

    tokens = list(SPECIAL_TOKENS) + chars + [CONTINUATION_PREFIX + c for c in chars]
    known = set(tokens)
    segs = {
        w: [w[0]] + [CONTINUATION_PREFIX + c for c in w[1:]]
        for w in word_freq
    }

    while len(tokens) < target_size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for w, pieces in segs.items():
            f = word_freq[w]
            for a, b in zip(pieces, pieces[1:]):
                pair_freq[(a, b)] += f
        if not pair_freq:
            raise ValueError(
                f"corpus too small for target_size {target_size}: "
                f"merges exhausted at {len(tokens)} tokens"
            )
        best = min(pair_freq, key=lambda p: (-pair_freq[p], _merged_surface(p), p))
        merged = _merged_surface(best)
        for w, pieces in segs.items():
            if best[0] in pieces:
                segs[w] = _merge_pair(pieces, best, merged)
        if merged not in known:
            tokens.append(merged)
            known.add(merged)

    return Vocabulary(tokens)


def _segment(word: str, vocab: Vocabulary) -> list[int] | None:
    """Greedy longest-match-first segmentation; None if any remainder is unmatchable."""
    ids: list[int] = []
    i = 0
    n = len(word)
    while i < n:
        j = n
        match = None
        while j > i:
            piece = word[i:j] if i == 0 else CONTINUATION_PREFIX + word[i:j]
            pid = vocab.id_of.get(piece)
            if pid is not None and pid >= NUM_SPECIALS:
                match = pid
                break
            j -= 1
        if match is None:
            return None
        ids.append(match)
        i = j
    return ids


def encode(text: str, vocab: Vocabulary, add_specials: bool = False) -> list[int]:
    """Normalize, split on whitespace, segment each word greedily."""
    ids: list[int] = []
    for word in normalize(text).split():
        pieces = _segment(word, vocab)
        ids.extend(pieces if pieces is not None else [UNK_ID])
    if add_specials:
        ids = [CLS_ID] + ids + [SEP_ID]
    return ids


def decode(ids: Sequence[int], vocab: Vocabulary) -> str:
    """Drop structural specials, glue "##" pieces, join words with spaces."""
    words: list[str] = []
    for i in ids:
        if not 0 <= i < len(vocab):
            raise ValueError(f"token id {i} out of range for vocabulary of size {len(vocab)}")
        if i in (PAD_ID, CLS_ID, SEP_ID, MASK_ID):
            continue
        tok = vocab.tokens[i]
        if tok.startswith(CONTINUATION_PREFIX) and words:
            words[-1] += tok[len(CONTINUATION_PREFIX):]
        else:
            words.append(tok[len(CONTINUATION_PREFIX):] if tok.startswith(CONTINUATION_PREFIX) else tok)
    return " ".join(words)
