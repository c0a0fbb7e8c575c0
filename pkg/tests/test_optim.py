"""Learning-rate schedule and AdamW reference behavior."""
import math

import numpy as np
import pytest

from memalign.optim import AdamW, lr_at_step


def test_warmup_is_linear():
    base = 1e-3
    # 100 total steps, 10% warmup -> 10 warmup steps
    for step in range(10):
        assert lr_at_step(step, 100, base, 0.1) == pytest.approx(
            base * (step + 1) / 10
        )


def test_peak_at_end_of_warmup():
    assert lr_at_step(10, 100, 1e-3, 0.1) == pytest.approx(1e-3)


def test_cosine_decays_to_zero():
    base = 1e-3
    lrs = [lr_at_step(s, 100, base, 0.1) for s in range(10, 100)]
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))
    assert lr_at_step(100, 100, base, 0.1) == pytest.approx(0.0, abs=1e-12)


def test_cosine_midpoint_is_half():
    # halfway through the decay span the cosine factor is 1/2
    assert lr_at_step(55, 100, 1.0, 0.1) == pytest.approx(0.5)


def test_no_warmup_schedule():
    assert lr_at_step(0, 100, 1.0, 0.0) == pytest.approx(1.0)


def test_adamw_single_step_reference():
    # One step against the textbook update computed by hand.
    p0 = np.array([1.0, -2.0])
    g = np.array([0.5, 0.25])
    params = {"p": p0.copy()}
    opt = AdamW(params, lr=0.1, weight_decay=0.0)
    opt.step({"p": g})
    m = 0.1 * g
    v = 0.001 * g * g
    expected = p0 - 0.1 * (m / 0.1) / (np.sqrt(v / 0.001) + 1e-8)
    np.testing.assert_allclose(params["p"], expected, rtol=1e-12)


def test_adamw_decoupled_weight_decay():
    # Zero gradient: the only movement is the decay term -lr * wd * p.
    p0 = np.array([2.0])
    params = {"p": p0.copy()}
    opt = AdamW(params, lr=0.1, weight_decay=0.01)
    opt.step({"p": np.zeros(1)})
    np.testing.assert_allclose(params["p"], p0 - 0.1 * 0.01 * p0, rtol=1e-12)


def test_adamw_converges_on_quadratic():
    params = {"x": np.array([5.0, -3.0])}
    opt = AdamW(params, lr=0.1)
    for _ in range(500):
        opt.step({"x": 2.0 * params["x"]})
    assert np.linalg.norm(params["x"]) < 1e-3


def test_adamw_update_is_deterministic():
    def run():
        params = {"a": np.ones(3), "b": np.full(2, -1.0)}
        opt = AdamW(params, lr=0.01, weight_decay=0.1, total_steps=10, warmup_ratio=0.2)
        rng = np.random.default_rng(0)
        for _ in range(10):
            opt.step({"a": rng.standard_normal(3), "b": rng.standard_normal(2)})
        return params

    a = run()
    b = run()
    for key in a:
        np.testing.assert_array_equal(a[key], b[key])
