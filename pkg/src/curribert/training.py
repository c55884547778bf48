"""MLM pre-training and classification fine-tuning loops.

Both loops are deterministic per seed in single-threaded mode: the top-level
seed spawns independent child streams (init, shuffle, masking, dropout), so
data order and corruption noise are separately reproducible. Loss is
normalized by the supervised-position count of the whole effective batch,
which makes gradient accumulation over micro-batches exactly equivalent to
one large batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import IGNORE_INDEX, Tensor
from .corpus import RawDocument, make_windows
from .model import Model, ModelConfig, classify, encode as encode_model, init_params, mlm_logits, reinit_classifier_head, truncate_ids
from .optim import AdamConfig, AdamState, adam_step
from .tokenizer import CLS_ID, MASK_ID, NUM_SPECIALS, PAD_ID, SEP_ID, Vocabulary, encode as encode_text


@dataclass
class PretrainConfig:
    mask_prob: float = 0.15
    epochs: int = 60
    lr: float = 1e-5
    effective_batch: int = 128
    micro_batch: int = 32
    window_len: int = 500
    overlap: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mask_prob < 1.0:
            raise ValueError(f"mask_prob out of range: {self.mask_prob}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.effective_batch < 1 or self.micro_batch < 1:
            raise ValueError("batch sizes must be positive")
        if self.effective_batch % self.micro_batch != 0:
            raise ValueError(
                f"micro_batch {self.micro_batch} must divide effective_batch {self.effective_batch}"
            )
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.overlap >= self.window_len:
            raise ValueError("overlap must be smaller than window_len")


@dataclass
class FinetuneConfig:
    epochs: int = 3
    batch: int = 32
    lr: float = 1e-5
    seed: int = 0
    positive_class_tag: str = ""

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")


@dataclass
class MlmBatch:
    input_ids: np.ndarray
    labels: np.ndarray
    attention_mask: np.ndarray


@dataclass
class LabeledExample:
    text: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def add_specials(ids: Sequence[int]) -> list[int]:
    return [CLS_ID, *ids, SEP_ID]


def corrupt_for_mlm(
    ids: Sequence[int],
    vocab: Vocabulary,
    rng: np.random.Generator,
    mask_prob: float = 0.15,
) -> tuple[np.ndarray, np.ndarray]:
    """BERT-style corruption of one token sequence (specials already attached).

    Each non-special position is selected with prob mask_prob; of the selected,
    80% become [MASK], 10% a uniform random non-special id, 10% stay unchanged.
    Labels carry the original id at selected positions and IGNORE elsewhere.
    """
    original = np.asarray(ids, dtype=np.int64)
    n = original.size
    # Fixed draw count per row keeps the stream independent of the outcome.
    select_u = rng.random(n)
    coin = rng.random(n)
    random_ids = rng.integers(NUM_SPECIALS, len(vocab), size=n)

    eligible = original >= NUM_SPECIALS
    selected = eligible & (select_u < mask_prob)

    input_ids = original.copy()
    input_ids[selected & (coin < 0.8)] = MASK_ID
    swap = selected & (coin >= 0.8) & (coin < 0.9)
    input_ids[swap] = random_ids[swap]
    labels = np.where(selected, original, IGNORE_INDEX)
    return input_ids, labels


def pad_mlm_rows(rows: list[tuple[np.ndarray, np.ndarray]]) -> MlmBatch:
    t = max(r[0].size for r in rows)
    b = len(rows)
    input_ids = np.full((b, t), PAD_ID, dtype=np.int64)
    labels = np.full((b, t), IGNORE_INDEX, dtype=np.int64)
    mask = np.zeros((b, t), dtype=np.int64)
    for i, (ids, labs) in enumerate(rows):
        n = ids.size
        input_ids[i, :n] = ids
        labels[i, :n] = labs
        mask[i, :n] = 1
    return MlmBatch(input_ids=input_ids, labels=labels, attention_mask=mask)


def build_mlm_batch(
    examples: list[list[int]],
    vocab: Vocabulary,
    rng: np.random.Generator,
    mask_prob: float = 0.15,
    max_resamples: int = 100,
) -> MlmBatch:
    """Corrupt and pad a batch, resampling if no position ends up supervised."""
    for _ in range(max_resamples):
        rows = [corrupt_for_mlm(ids, vocab, rng, mask_prob) for ids in examples]
        batch = pad_mlm_rows(rows)
        if (batch.labels != IGNORE_INDEX).any():
            return batch
    raise ValueError("could not draw a batch with at least one supervised position")


def corpus_to_examples(
    docs: Sequence[RawDocument],
    vocab: Vocabulary,
    window_len: int,
    overlap: int,
) -> list[list[int]]:
    """Tokenize documents and cut sliding windows, each wrapped in [CLS]/[SEP]."""
    examples = []
    for doc in docs:
        ids = encode_text(doc.text, vocab)
        if not ids:
            continue
        for w in make_windows(tuple(ids), window_len, overlap, doc.doc_id):
            examples.append(add_specials(w.ids))
    return examples


def _mlm_forward_loss(
    model: Model, batch: MlmBatch, dropout_rng: np.random.Generator | None
) -> tuple[Tensor, int]:
    hidden = encode_model(model, batch.input_ids, batch.attention_mask, dropout_rng)
    logits = mlm_logits(model, hidden)
    return ad.masked_cross_entropy_sum(logits, batch.labels)


def mlm_mean_loss(model: Model, batches: Sequence[MlmBatch]) -> float:
    """Dropout-free mean MLM loss over all supervised positions in the batches."""
    total, count = 0.0, 0
    for batch in batches:
        loss_sum, c = _mlm_forward_loss(model, batch, None)
        total += float(loss_sum.data)
        count += c
    if count == 0:
        raise ValueError("no supervised positions")
    return total / count


def _append_jsonl(path: str | Path | None, record: dict) -> None:
    if path is None:
        return
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record) + "\n")


def train_step_accumulated(
    model: Model,
    micro_batches: Sequence[MlmBatch],
    state: AdamState,
    adam: AdamConfig,
    dropout_rng: np.random.Generator | None,
) -> tuple[float, int]:
    """One optimizer step over an effective batch given as micro-batches.

    Every micro-loss is divided by the total supervised count of the whole
    effective batch before backward, so the accumulated gradient equals the
    single-batch gradient exactly.
    """
    counts = [int((b.labels != IGNORE_INDEX).sum()) for b in micro_batches]
    total_count = sum(counts)
    if total_count == 0:
        raise ValueError("no supervised positions")
    ad.zero_grads(model.params.values())
    total_loss = 0.0
    for batch in micro_batches:
        loss_sum, _ = _mlm_forward_loss(model, batch, dropout_rng)
        ad.backward(ad.scale(loss_sum, 1.0 / total_count))
        total_loss += float(loss_sum.data)
    adam_step(model.params, state, adam)
    return total_loss, total_count


def pretrain(
    docs: Sequence[RawDocument],
    vocab: Vocabulary,
    model_config: ModelConfig,
    config: PretrainConfig,
    loss_log_path: str | Path | None = None,
) -> tuple[Model, list[dict]]:
    """MLM pre-training over sliding windows; returns the model and epoch losses."""
    if len(vocab) != model_config.vocab_size:
        raise ValueError(
            f"vocab size {len(vocab)} does not match model vocab_size {model_config.vocab_size}"
        )
    if model_config.max_positions < config.window_len + 2:
        raise ValueError("max_positions must cover window_len plus [CLS]/[SEP]")
    examples = corpus_to_examples(docs, vocab, config.window_len, config.overlap)
    if not examples:
        raise ValueError("empty corpus: no token windows to train on")

    init_ss, shuffle_ss, mask_ss, dropout_ss = np.random.SeedSequence(config.seed).spawn(4)
    model = Model(config=model_config, params=init_params(model_config, init_ss))
    shuffle_rng = np.random.default_rng(shuffle_ss)
    mask_rng = np.random.default_rng(mask_ss)
    dropout_rng = np.random.default_rng(dropout_ss) if model_config.dropout_prob > 0 else None

    state = AdamState()
    adam = AdamConfig(lr=config.lr)
    log: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(examples))
        epoch_loss, epoch_count = 0.0, 0
        for start in range(0, len(examples), config.effective_batch):
            chunk = [examples[i] for i in order[start : start + config.effective_batch]]
            micros = [
                build_mlm_batch(chunk[j : j + config.micro_batch], vocab, mask_rng, config.mask_prob)
                for j in range(0, len(chunk), config.micro_batch)
            ]
            loss, count = train_step_accumulated(model, micros, state, adam, dropout_rng)
            epoch_loss += loss
            epoch_count += count
        entry = {"epoch": epoch, "loss": epoch_loss / epoch_count}
        log.append(entry)
        _append_jsonl(loss_log_path, entry)
    return model, log


def examples_to_classification_batch(
    examples: Sequence[LabeledExample],
    vocab: Vocabulary,
    max_positions: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pad a batch of labeled texts into (input_ids, attention_mask, labels)."""
    rows = []
    for ex in examples:
        ids = encode_text(ex.text, vocab, add_specials=True)
        if len(ids) <= 2:
            raise ValueError("example text empty after normalization")
        rows.append(truncate_ids(ids, max_positions))
    t = max(len(r) for r in rows)
    input_ids = np.full((len(rows), t), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(rows), t), dtype=np.int64)
    for i, r in enumerate(rows):
        input_ids[i, : len(r)] = r
        mask[i, : len(r)] = 1
    labels = np.asarray([ex.label for ex in examples], dtype=np.int64)
    return input_ids, mask, labels


def finetune(
    model: Model,
    train_set: Sequence[LabeledExample],
    vocab: Vocabulary,
    config: FinetuneConfig,
    loss_log_path: str | Path | None = None,
) -> tuple[Model, list[dict]]:
    """Full fine-tuning with a freshly initialized classification head."""
    if len(vocab) != model.config.vocab_size:
        raise ValueError(
            f"vocab size {len(vocab)} does not match model vocab_size {model.config.vocab_size}"
        )
    labels_present = {ex.label for ex in train_set}
    if labels_present != {0, 1}:
        raise ValueError("training set must contain both classes")

    head_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(config.seed).spawn(3)
    reinit_classifier_head(model, head_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss) if model.config.dropout_prob > 0 else None

    state = AdamState()
    adam = AdamConfig(lr=config.lr)
    log: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train_set))
        epoch_loss, epoch_n = 0.0, 0
        for start in range(0, len(train_set), config.batch):
            batch = [train_set[i] for i in order[start : start + config.batch]]
            input_ids, mask, labels = examples_to_classification_batch(
                batch, vocab, model.config.max_positions
            )
            ad.zero_grads(model.params.values())
            hidden = encode_model(model, input_ids, mask, dropout_rng)
            logits = classify(model, hidden)
            loss_sum, count = ad.masked_cross_entropy_sum(logits, labels)
            ad.backward(ad.scale(loss_sum, 1.0 / count))
            adam_step(model.params, state, adam)
            epoch_loss += float(loss_sum.data)
            epoch_n += count
        entry = {"epoch": epoch, "loss": epoch_loss / epoch_n}
        log.append(entry)
        _append_jsonl(loss_log_path, entry)
    return model, log
