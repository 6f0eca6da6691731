"""Backward pass: every analytic gradient against central differences."""

from __future__ import annotations

import numpy as np
import pytest

from randprompt_ad.errors import StateError, TrainingError
from randprompt_ad.mlp import (
    AdamW,
    MlpArchitecture,
    TrainConfig,
    backward,
    bce_with_logits,
    forward,
    init_params,
)
from randprompt_ad.rng import SplitMix64

from .oracles import finite_difference, relative_error


def loss_of(params, x, y, dropout_seed: int) -> float:
    """Full training loss as a pure function of the parameter tensors.

    A fresh stream with a fixed seed replays identical dropout masks on
    every call, so central differences see a deterministic function.
    """
    logits, _ = forward(params, x, "train", SplitMix64(dropout_seed))
    loss, _ = bce_with_logits(logits, y)
    return loss


def analytic_grads(params, x, y, dropout_seed: int):
    logits, cache = forward(params, x, "train", SplitMix64(dropout_seed))
    _, d_logits = bce_with_logits(logits, y)
    return backward(params, cache, d_logits)


def make_problem(dropout_rate: float, seed: int = 0):
    arch = MlpArchitecture(input_dim=7, hidden_dims=(8, 6, 5), dropout_rate=dropout_rate)
    params = init_params(arch, SplitMix64(seed))
    rng = np.random.default_rng(seed + 100)
    x = rng.normal(size=(12, arch.input_dim))
    y = np.tile([0.0, 1.0], 6)
    return params, x, y


class TestFiniteDifferences:
    @pytest.mark.parametrize("dropout_rate", [0.0, 0.3])
    def test_every_tensor(self, dropout_rate):
        params, x, y = make_problem(dropout_rate)
        grads = analytic_grads(params, x, y, dropout_seed=5)
        named_grads = dict(grads.optimizable())
        checked = 0
        for name, tensor, _ in params.optimizable():
            numeric = finite_difference(
                lambda: loss_of(params, x, y, dropout_seed=5), tensor
            )
            err = relative_error(named_grads[name], numeric)
            assert err < 1e-4, f"{name}: relative error {err:.3e}"
            # hidden-layer biases are structurally zero under batch norm;
            # everything else must also agree elementwise
            assert np.allclose(named_grads[name], numeric, rtol=1e-5, atol=1e-9), name
            checked += 1
        assert checked == 4 + 4 + 3 + 3  # weights, biases, gammas, betas

    def test_gradients_nonzero(self):
        params, x, y = make_problem(0.0)
        grads = analytic_grads(params, x, y, dropout_seed=5)
        for name, grad in grads.optimizable():
            assert np.any(grad != 0.0), f"{name} gradient is identically zero"


class TestCacheDiscipline:
    def test_cache_from_other_params_rejected(self):
        params_a, x, y = make_problem(0.0, seed=0)
        params_b, _, _ = make_problem(0.0, seed=1)
        logits, cache = forward(params_a, x, "train", SplitMix64(0))
        _, d_logits = bce_with_logits(logits, y)
        with pytest.raises(StateError):
            backward(params_b, cache, d_logits)

    def test_stale_cache_rejected(self):
        params, x, y = make_problem(0.0)
        logits, cache = forward(params, x, "train", SplitMix64(0))
        _, d_logits = bce_with_logits(logits, y)
        params.step += 1  # as if the optimizer already ran
        with pytest.raises(StateError):
            backward(params, cache, d_logits)

    def test_wrong_gradient_size_rejected(self):
        params, x, y = make_problem(0.0)
        _, cache = forward(params, x, "train", SplitMix64(0))
        with pytest.raises(ValueError):
            backward(params, cache, np.zeros(5))


class TestAdamW:
    def test_single_step_closed_form(self):
        arch = MlpArchitecture(input_dim=2, hidden_dims=(2, 2, 2), dropout_rate=0.0)
        params = init_params(arch, SplitMix64(0))
        cfg = TrainConfig(lr=0.1, weight_decay=0.01, batch_size=2)
        optimizer = AdamW(params, cfg)

        x = np.random.default_rng(1).normal(size=(4, 2))
        logits, cache = forward(params, x, "train", SplitMix64(2))
        _, d_logits = bce_with_logits(logits, np.array([0.0, 1.0, 0.0, 1.0]))
        grads = analytic_grads_from(params, cache, d_logits)
        grad_by_name = dict(grads.optimizable())
        before = {n: p.copy() for n, p, _ in params.optimizable()}

        optimizer.step(params, grads, lr_now=cfg.lr)

        # At t=1 the bias-corrected moments collapse to m_hat = g and
        # v_hat = g**2, so the update is lr * g / (|g| + eps); weight
        # matrices are additionally scaled by (1 - lr * wd) first.
        assert params.step == 1
        for name, param, decayed in params.optimizable():
            g = grad_by_name[name]
            start = before[name] * (1.0 - cfg.lr * cfg.weight_decay if decayed else 1.0)
            expected = start - cfg.lr * g / (np.abs(g) + cfg.adam_eps)
            assert np.allclose(param, expected, atol=1e-12), name

    def test_decay_applies_to_weight_matrices_only(self):
        arch = MlpArchitecture(input_dim=3, hidden_dims=(3, 3, 3), dropout_rate=0.0)
        params = init_params(arch, SplitMix64(0))
        decayed_names = {name for name, _, decayed in params.optimizable() if decayed}
        assert decayed_names == {f"layer{i}.weight" for i in range(4)}

    def test_zero_gradient_with_decay_still_shrinks_weights(self):
        arch = MlpArchitecture(input_dim=2, hidden_dims=(2, 2, 2), dropout_rate=0.0)
        params = init_params(arch, SplitMix64(0))
        cfg = TrainConfig(lr=0.5, weight_decay=0.2, batch_size=2)
        optimizer = AdamW(params, cfg)
        zero = zero_grads_like(params)
        w_before = params.weights[0].copy()
        b_before = params.biases[0].copy()
        optimizer.step(params, zero, lr_now=cfg.lr)
        assert np.allclose(params.weights[0], w_before * (1 - 0.5 * 0.2), atol=1e-15)
        assert np.array_equal(params.biases[0], b_before)

    def test_non_finite_gradient_rejected_by_name(self):
        arch = MlpArchitecture(input_dim=2, hidden_dims=(2, 2, 2), dropout_rate=0.0)
        params = init_params(arch, SplitMix64(0))
        optimizer = AdamW(params, TrainConfig(batch_size=2))
        bad = zero_grads_like(params)
        bad.d_gammas[1][0] = np.nan
        with pytest.raises(TrainingError, match="bn1.gamma"):
            optimizer.step(params, bad, lr_now=1e-3)

    def test_rejects_non_positive_lr(self):
        arch = MlpArchitecture(input_dim=2, hidden_dims=(2, 2, 2), dropout_rate=0.0)
        params = init_params(arch, SplitMix64(0))
        optimizer = AdamW(params, TrainConfig(batch_size=2))
        with pytest.raises(ValueError):
            optimizer.step(params, zero_grads_like(params), lr_now=0.0)


def analytic_grads_from(params, cache, d_logits):
    return backward(params, cache, d_logits)


def zero_grads_like(params):
    from randprompt_ad.mlp import MlpGrads

    return MlpGrads(
        d_weights=[np.zeros_like(w) for w in params.weights],
        d_biases=[np.zeros_like(b) for b in params.biases],
        d_gammas=[np.zeros_like(g) for g in params.gammas],
        d_betas=[np.zeros_like(b) for b in params.betas],
    )
