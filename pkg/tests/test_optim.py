"""Adam optimizer update and state-tracking tests."""

import numpy as np
import pytest

from curribert import autodiff as ad
from curribert.optim import AdamConfig, AdamState, adam_step


def _reference_adam(param, grads, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Plain-loop Adam oracle applying a gradient sequence to one parameter."""
    p = np.asarray(param, dtype=np.float64).copy()
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, start=1):
        g = np.asarray(g, dtype=np.float64)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


def _single_param(value):
    p = ad.parameter(np.array(value, dtype=np.float64), dtype=np.float64)
    return {"w": p}


class TestAdamStep:
    def test_zero_gradient_is_a_fixed_point(self):
        params = _single_param([1.5, -2.0])
        params["w"].grad = np.zeros(2)
        state = AdamState()
        adam_step(params, state, AdamConfig(lr=1e-3))
        np.testing.assert_array_equal(params["w"].data, [1.5, -2.0])
        assert state.t == 1
        np.testing.assert_array_equal(state.m["w"], 0.0)
        np.testing.assert_array_equal(state.v["w"], 0.0)

    def test_first_step_on_unit_gradient(self):
        """With m_hat = v_hat = 1 the first step is exactly -lr / (1 + eps)."""
        params = _single_param([0.0])
        params["w"].grad = np.ones(1)
        adam_step(params, AdamState(), AdamConfig(lr=1e-3))
        expected = -1e-3 / (1.0 + 1e-8)
        assert params["w"].data[0] == pytest.approx(expected, abs=1e-18)
        assert abs(params["w"].data[0] - (-9.99999990e-4)) < 1e-12

    def test_mirrored_gradients_give_negated_updates(self):
        pa, pb = _single_param([0.7]), _single_param([0.7])
        pa["w"].grad = np.array([3.3])
        pb["w"].grad = np.array([-3.3])
        adam_step(pa, AdamState(), AdamConfig(lr=1e-3))
        adam_step(pb, AdamState(), AdamConfig(lr=1e-3))
        da = pa["w"].data[0] - 0.7
        db = pb["w"].data[0] - 0.7
        assert da == pytest.approx(-db, abs=1e-18)

    def test_matches_reference_over_many_steps(self):
        """Ten steps on a fixed gradient tape agree with the plain-loop oracle."""
        rng = np.random.default_rng(0)
        start = rng.standard_normal(5)
        grads = [rng.standard_normal(5) for _ in range(10)]
        params = _single_param(start)
        state = AdamState()
        cfg = AdamConfig(lr=3e-3)
        for g in grads:
            params["w"].grad = g.copy()
            adam_step(params, state, cfg)
        expected = _reference_adam(start, grads, lr=3e-3)
        np.testing.assert_allclose(params["w"].data, expected, rtol=1e-12)
        assert state.t == 10

    def test_first_step_magnitude_bounded_by_lr(self):
        params = _single_param([5.0])
        params["w"].grad = np.array([1e6])
        before = params["w"].data.copy()
        adam_step(params, AdamState(), AdamConfig(lr=1e-3))
        assert np.abs(params["w"].data - before).max() <= 1e-3 * (1 + 1e-6)

    def test_non_positive_lr_rejected(self):
        params = _single_param([1.0])
        params["w"].grad = np.ones(1)
        with pytest.raises(ValueError, match="learning rate"):
            adam_step(params, AdamState(), AdamConfig(lr=0.0))

    def test_none_gradient_parameter_skipped(self):
        params = {
            "a": ad.parameter(np.array([1.0]), dtype=np.float64),
            "b": ad.parameter(np.array([2.0]), dtype=np.float64),
        }
        params["a"].grad = np.array([1.0])
        state = AdamState()
        adam_step(params, state, AdamConfig(lr=1e-3))
        assert params["b"].data[0] == 2.0
        assert "b" not in state.m

    def test_moment_buffers_are_f64(self):
        params = {"w": ad.parameter(np.array([1.0], dtype=np.float32))}
        params["w"].grad = np.array([1.0], dtype=np.float32)
        state = AdamState()
        adam_step(params, state, AdamConfig(lr=1e-3))
        assert state.m["w"].dtype == np.float64
        assert state.v["w"].dtype == np.float64

    def test_second_moment_nonnegative(self):
        rng = np.random.default_rng(2)
        params = _single_param(rng.standard_normal(16))
        state = AdamState()
        for _ in range(5):
            params["w"].grad = rng.standard_normal(16)
            adam_step(params, state, AdamConfig(lr=1e-3))
        assert np.all(state.v["w"] >= 0)

    def test_t_increments_by_one_per_step(self):
        params = _single_param([1.0])
        state = AdamState()
        for expected_t in (1, 2, 3):
            params["w"].grad = np.ones(1)
            adam_step(params, state, AdamConfig(lr=1e-3))
            assert state.t == expected_t

    def test_update_preserves_parameter_dtype(self):
        params = {"w": ad.parameter(np.array([1.0], dtype=np.float32))}
        params["w"].grad = np.array([1.0], dtype=np.float32)
        adam_step(params, AdamState(), AdamConfig(lr=1e-3))
        assert params["w"].data.dtype == np.float32
