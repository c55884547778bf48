"""Transformer encoder with a tied MLM head and a CLS classification head.

Post-layer-norm BERT layout: token + learned position embeddings, N blocks of
(multi-head self-attention, add&norm, GELU feed-forward, add&norm). The MLM
output projection reuses the token-embedding matrix; the classifier is a
2-layer MLP (affine, tanh, affine) over the position-0 hidden state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .tokenizer import NUM_SPECIALS, SEP_ID, Vocabulary, encode as encode_text

PRESETS = {
    "small-toy": dict(num_layers=2, hidden_size=64, num_heads=2, ff_size=256),
    "base-toy": dict(num_layers=4, hidden_size=128, num_heads=4, ff_size=512),
}

INIT_STD = 0.02
ATTENTION_MASK_BIAS = -1e9


@dataclass
class ModelConfig:
    num_layers: int
    hidden_size: int
    num_heads: int
    ff_size: int
    vocab_size: int
    max_positions: int = 512
    dropout_prob: float = 0.1
    precision: str = "f32"

    def __post_init__(self):
        if self.num_layers < 1 or self.hidden_size < 1 or self.num_heads < 1 or self.ff_size < 1:
            raise ValueError("model dimensions must be positive")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError(
                f"hidden_size {self.hidden_size} not divisible by num_heads {self.num_heads}"
            )
        if self.vocab_size < NUM_SPECIALS:
            raise ValueError(f"vocab_size must be at least {NUM_SPECIALS}")
        if self.max_positions < 3:
            raise ValueError("max_positions too small for [CLS] x [SEP]")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError(f"dropout_prob out of range: {self.dropout_prob}")
        if self.precision not in ("f32", "f64"):
            raise ValueError(f"precision must be f32 or f64, got {self.precision}")

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "hidden_size": self.hidden_size,
            "num_heads": self.num_heads,
            "ff_size": self.ff_size,
            "vocab_size": self.vocab_size,
            "max_positions": self.max_positions,
            "dropout_prob": self.dropout_prob,
            "precision": self.precision,
        }

    @classmethod
    def from_preset(cls, name: str, vocab_size: int, **overrides) -> "ModelConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        return cls(vocab_size=vocab_size, **PRESETS[name], **overrides)


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, Tensor] = field(default_factory=dict)


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Ordered name -> shape map; the order fixes init draws and checkpoint layout."""
    h, ff, v, p = config.hidden_size, config.ff_size, config.vocab_size, config.max_positions
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (v, h),
        "pos_emb": (p, h),
    }
    for i in range(config.num_layers):
        pre = f"layer{i}"
        for proj in ("q", "k", "v", "o"):
            shapes[f"{pre}.attn.w{proj}"] = (h, h)
            shapes[f"{pre}.attn.b{proj}"] = (h,)
        shapes[f"{pre}.attn_norm.gamma"] = (h,)
        shapes[f"{pre}.attn_norm.beta"] = (h,)
        shapes[f"{pre}.ffn.w1"] = (h, ff)
        shapes[f"{pre}.ffn.b1"] = (ff,)
        shapes[f"{pre}.ffn.w2"] = (ff, h)
        shapes[f"{pre}.ffn.b2"] = (h,)
        shapes[f"{pre}.ffn_norm.gamma"] = (h,)
        shapes[f"{pre}.ffn_norm.beta"] = (h,)
    shapes["mlm.w"] = (h, h)
    shapes["mlm.b"] = (h,)
    shapes["mlm.norm.gamma"] = (h,)
    shapes["mlm.norm.beta"] = (h,)
    shapes["mlm.out_bias"] = (v,)
    shapes["cls.w1"] = (h, h)
    shapes["cls.b1"] = (h,)
    shapes["cls.w2"] = (h, 2)
    shapes["cls.b2"] = (2,)
    return shapes


def truncated_normal(rng: np.random.Generator, shape: tuple[int, ...], std: float) -> np.ndarray:
    """N(0, std) with draws clipped to +-2 std.

    Clipping keeps the empirical stddev near the nominal value (0.959 std);
    rejection resampling would shrink it to 0.880 std.
    """
    return np.clip(rng.normal(0.0, std, size=shape), -2.0 * std, 2.0 * std)


def _is_weight(name: str) -> bool:
    base = name.rsplit(".", 1)[-1]
    return base.startswith("w") or name in ("tok_emb", "pos_emb")


def init_params(config: ModelConfig, seed: int) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    dtype = config.dtype
    params: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        if _is_weight(name):
            data = truncated_normal(rng, shape, INIT_STD)
        elif name.endswith("gamma"):
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = ad.parameter(data, dtype=dtype)
    return params


def init_model(config: ModelConfig, seed: int) -> Model:
    """Fresh model; weights truncated-normal(0, 0.02), biases 0, norm gamma 1."""
    return Model(config=config, params=init_params(config, seed))


def reinit_classifier_head(model: Model, seed: int) -> None:
    """Replace cls.* in place with a fresh draw (fine-tuning starts the head over)."""
    rng = np.random.default_rng(seed)
    dtype = model.config.dtype
    for name, shape in parameter_shapes(model.config).items():
        if not name.startswith("cls."):
            continue
        data = truncated_normal(rng, shape, INIT_STD) if _is_weight(name) else np.zeros(shape)
        model.params[name] = ad.parameter(data, dtype=dtype)


def _affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return ad.add(ad.matmul(x, w), b)


def _maybe_dropout(x: Tensor, p: float, rng: np.random.Generator | None) -> Tensor:
    if rng is None or p <= 0.0:
        return x
    return ad.dropout(x, p, rng)


def _attention(
    model: Model,
    hidden: Tensor,
    mask_bias: Tensor,
    layer: int,
    rng: np.random.Generator | None,
) -> Tensor:
    cfg = model.config
    p = model.params
    pre = f"layer{layer}"
    b, t = hidden.shape[0], hidden.shape[1]
    a = cfg.num_heads
    dh = cfg.hidden_size // a

    def split_heads(x: Tensor) -> Tensor:
        return ad.transpose(ad.reshape(x, (b, t, a, dh)), (0, 2, 1, 3))

    q = split_heads(_affine(hidden, p[f"{pre}.attn.wq"], p[f"{pre}.attn.bq"]))
    k = split_heads(_affine(hidden, p[f"{pre}.attn.wk"], p[f"{pre}.attn.bk"]))
    v = split_heads(_affine(hidden, p[f"{pre}.attn.wv"], p[f"{pre}.attn.bv"]))

    scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    scores = ad.add(scores, mask_bias)
    probs = ad.softmax(scores, axis=-1)
    probs = _maybe_dropout(probs, cfg.dropout_prob, rng)
    ctx = ad.reshape(ad.transpose(ad.matmul(probs, v), (0, 2, 1, 3)), (b, t, cfg.hidden_size))
    out = _affine(ctx, p[f"{pre}.attn.wo"], p[f"{pre}.attn.bo"])
    return _maybe_dropout(out, cfg.dropout_prob, rng)


def encode(
    model: Model,
    input_ids: np.ndarray,
    attention_mask: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
) -> Tensor:
    """Hidden states [B, T, H]; pass dropout_rng only during training."""
    cfg = model.config
    p = model.params
    input_ids = np.asarray(input_ids)
    attention_mask = np.asarray(attention_mask)
    if input_ids.ndim != 2:
        raise ValueError(f"input_ids must be [B, T], got shape {input_ids.shape}")
    if attention_mask.shape != input_ids.shape:
        raise ValueError("attention_mask shape must match input_ids")
    bsz, t = input_ids.shape
    if t > cfg.max_positions:
        raise ValueError(f"sequence length {t} exceeds max_positions {cfg.max_positions}")
    if input_ids.min() < 0 or input_ids.max() >= cfg.vocab_size:
        raise ValueError("token id out of vocabulary range")

    tok = ad.embedding(p["tok_emb"], input_ids)
    pos = ad.embedding(p["pos_emb"], np.arange(t))
    hidden = _maybe_dropout(ad.add(tok, pos), cfg.dropout_prob, dropout_rng)

    bias_data = ((1.0 - attention_mask.astype(cfg.dtype)) * ATTENTION_MASK_BIAS).reshape(
        bsz, 1, 1, t
    )
    mask_bias = Tensor(bias_data.astype(cfg.dtype))

    for i in range(cfg.num_layers):
        attn = _attention(model, hidden, mask_bias, i, dropout_rng)
        hidden = ad.layer_norm(
            ad.add(hidden, attn),
            p[f"layer{i}.attn_norm.gamma"],
            p[f"layer{i}.attn_norm.beta"],
        )
        ff = _affine(hidden, p[f"layer{i}.ffn.w1"], p[f"layer{i}.ffn.b1"])
        ff = _affine(ad.gelu(ff), p[f"layer{i}.ffn.w2"], p[f"layer{i}.ffn.b2"])
        ff = _maybe_dropout(ff, cfg.dropout_prob, dropout_rng)
        hidden = ad.layer_norm(
            ad.add(hidden, ff),
            p[f"layer{i}.ffn_norm.gamma"],
            p[f"layer{i}.ffn_norm.beta"],
        )
    return hidden


def mlm_logits(model: Model, hidden: Tensor) -> Tensor:
    """Token logits [B, T, V]; the output projection is the token-embedding matrix."""
    p = model.params
    x = ad.gelu(_affine(hidden, p["mlm.w"], p["mlm.b"]))
    x = ad.layer_norm(x, p["mlm.norm.gamma"], p["mlm.norm.beta"])
    return ad.add(ad.matmul(x, ad.transpose(p["tok_emb"], (1, 0))), p["mlm.out_bias"])


def classify(model: Model, hidden: Tensor) -> Tensor:
    """Class logits [B, 2] from the position-0 hidden state."""
    p = model.params
    x = ad.tanh(_affine(ad.first_position(hidden), p["cls.w1"], p["cls.b1"]))
    return _affine(x, p["cls.w2"], p["cls.b2"])


def truncate_ids(ids: list[int], max_positions: int) -> list[int]:
    """Head truncation that keeps [CLS] ... [SEP] within max_positions tokens."""
    if len(ids) <= max_positions:
        return ids
    return ids[: max_positions - 1] + [SEP_ID]


def predict(model: Model, vocab: Vocabulary, text: str) -> dict:
    """Label and positive-class probability for one text; ties go to label 0."""
    ids = encode_text(text, vocab, add_specials=True)
    if len(ids) <= 2:
        raise ValueError("empty text after normalization")
    ids = truncate_ids(ids, model.config.max_positions)
    arr = np.asarray([ids], dtype=np.int64)
    mask = np.ones_like(arr)
    hidden = encode(model, arr, mask)
    logits = classify(model, hidden).data[0]
    z = logits - logits.max()
    e = np.exp(z)
    probs = e / e.sum()
    label = 0 if logits[0] >= logits[1] else 1
    return {"label": int(label), "probability": float(probs[1])}
