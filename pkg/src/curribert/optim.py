"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """Per-parameter first/second moment buffers and the shared step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict[str, Tensor], state: AdamState, config: AdamConfig) -> None:
    """Apply one Adam update in place using each parameter's ``.grad``.

    eps sits outside the square root; after bias correction the first step
    on a unit gradient is exactly -lr / (1 + eps).
    """
    if config.lr <= 0:
        raise ValueError(f"learning rate must be positive, got {config.lr}")
    state.t += 1
    t = state.t
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    for name, p in params.items():
        if p.grad is None:
            continue
        g = p.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data, dtype=np.float64)
            state.v[name] = np.zeros_like(p.data, dtype=np.float64)
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        update = config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
        p.data -= update.astype(p.data.dtype)
