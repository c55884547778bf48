"""Finite-difference verification of analytic gradients.

The checker perturbs individual parameter coordinates, re-evaluates the loss
with central differences, and compares against the gradient produced by the
reverse-mode tape. The two routes stay independent: the analytic side never
feeds the numeric side.

Coordinates where both sides are below ``atol`` are compared absolutely and
excluded from the relative maximum: a relative error between two values at
rounding scale measures noise, not gradient correctness. The canonical case
is the attention key bias, whose true gradient is exactly zero everywhere
(adding a key bias shifts every attention score in a row uniformly, and
softmax is shift-invariant), so both routes return noise there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tensor, backward, zero_grads


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_coord: int
    coords_checked: int
    coords_below_atol: int


def _rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-12)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: dict[str, Tensor],
    h: float = 1e-4,
    max_coords_per_param: int = 500,
    rng: np.random.Generator | None = None,
    atol: float = 1e-7,
) -> GradCheckReport:
    """Compare analytic gradients to central differences on sampled coordinates.

    loss_fn must rebuild the forward pass from the current parameter values on
    every call. Parameters should be f64 for the differences to resolve.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    zero_grads(params.values())
    loss = loss_fn()
    backward(loss)
    analytic = {name: p.grad.copy() for name, p in params.items()}

    worst = 0.0
    worst_param = ""
    worst_coord = -1
    checked = 0
    below_atol = 0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        k = min(max_coords_per_param, n)
        coords = rng.choice(n, size=k, replace=False) if k < n else np.arange(n)
        a_flat = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            f_plus = float(loss_fn().data)
            flat[c] = orig - h
            f_minus = float(loss_fn().data)
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(a_flat[c])
            checked += 1
            if abs(a) < atol and abs(numeric) < atol:
                below_atol += 1
                continue
            err = _rel_error(a, numeric)
            if err > worst:
                worst = err
                worst_param = name
                worst_coord = int(c)
    return GradCheckReport(
        max_rel_error=worst,
        worst_param=worst_param,
        worst_coord=worst_coord,
        coords_checked=checked,
        coords_below_atol=below_atol,
    )
