"""Seeded synthetic two-domain benchmark: a pre-training corpus and a labeled task.

The lexicon is an invented inventory of pronounceable nonce words split into
two disjoint topic inventories plus shared fillers. Each topic carries a fixed
circular order over its own words (shuffled once); documents walk that circle
from a random offset, so every word has a deterministic successor. Masked-token
prediction is therefore learnable to low loss: the circle pins a masked word
given its neighbours, while same-circle co-occurrence pushes same-topic words
toward shared representations. Task texts mix both inventories plus fillers
with a majority topic; the label is the majority, which rewards aggregated
evidence over single keywords. All generation is deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import RawDocument
from .training import LabeledExample

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

LEXICON_SEED = 7
CORPUS_SEED = 101
TASK_SEED = 202


@dataclass
class SynthConfig:
    topic_words: int = 60
    filler_words: int = 80
    n_docs: int = 46
    sentences_per_doc: int = 20
    sentence_words_lo: int = 8
    sentence_words_hi: int = 13
    task_examples: int = 400
    task_words_lo: int = 14
    task_words_hi: int = 20
    majority_prob: float = 0.68
    filler_prob: float = 0.25


def _all_words(rng: np.random.Generator) -> list[str]:
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    words = [a + b for a in syllables for b in syllables]
    return [words[i] for i in rng.permutation(len(words))]


def lexicon(config: SynthConfig | None = None) -> tuple[list[str], list[str], list[str]]:
    """Disjoint (topic_a, topic_b, filler) word inventories; fixed across runs."""
    config = config or SynthConfig()
    words = _all_words(np.random.default_rng(LEXICON_SEED))
    n, m = config.topic_words, config.filler_words
    return words[:n], words[n : 2 * n], words[2 * n : 2 * n + m]


def cycles(config: SynthConfig | None = None) -> tuple[list[str], list[str]]:
    """Fixed circular order over each topic's own words; fillers stay out."""
    config = config or SynthConfig()
    topic_a, topic_b, _ = lexicon(config)
    rng = np.random.default_rng(LEXICON_SEED + 1)
    cycle_a = [topic_a[i] for i in rng.permutation(len(topic_a))]
    cycle_b = [topic_b[i] for i in rng.permutation(len(topic_b))]
    return cycle_a, cycle_b


def make_pretrain_corpus(
    seed: int = CORPUS_SEED, config: SynthConfig | None = None
) -> list[RawDocument]:
    """Single-topic documents walking that topic's circle, roughly 50 KB of text."""
    config = config or SynthConfig()
    cycle_a, cycle_b = cycles(config)
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(config.n_docs):
        cycle = cycle_a if d % 2 == 0 else cycle_b
        pos = int(rng.integers(len(cycle)))
        sentences = []
        for _ in range(config.sentences_per_doc):
            n = int(rng.integers(config.sentence_words_lo, config.sentence_words_hi + 1))
            picks = [cycle[(pos + k) % len(cycle)] for k in range(n)]
            pos = (pos + n) % len(cycle)
            sentences.append(" ".join(picks) + " .")
        docs.append(RawDocument(doc_id=f"doc{d:03d}", text=" ".join(sentences)))
    return docs


def make_task(seed: int = TASK_SEED, config: SynthConfig | None = None) -> list[LabeledExample]:
    """Balanced labeled texts; the label is the majority topic of the text."""
    config = config or SynthConfig()
    topic_a, topic_b, filler = lexicon(config)
    rng = np.random.default_rng(seed)
    examples = []
    half = config.task_examples // 2
    labels = [1] * half + [0] * (config.task_examples - half)
    for label in labels:
        major, minor = (topic_a, topic_b) if label == 1 else (topic_b, topic_a)
        n = int(rng.integers(config.task_words_lo, config.task_words_hi + 1))
        picks = []
        for _ in range(n):
            r = rng.random()
            if r < config.filler_prob:
                pool = filler
            elif r < config.filler_prob + (1.0 - config.filler_prob) * config.majority_prob:
                pool = major
            else:
                pool = minor
            picks.append(pool[int(rng.integers(len(pool)))])
        examples.append(LabeledExample(text=" ".join(picks), label=label))
    return examples


def corpus_bytes(docs: list[RawDocument]) -> int:
    return sum(len(d.text.encode("utf-8")) for d in docs)
