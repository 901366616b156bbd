"""Multi-head log-sum-exp attention and its softmax-over-everything twin."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from corrpool import (
    AttentionParams,
    ConfigurationError,
    attention_weights,
    attention_weights_equiv,
    attentive_corr_pool,
    corr_pool,
    head_scores,
    init_attention_params,
)
from corrpool.numerics import softmax


def random_params(rng, dv, n_heads, scale=1.0):
    return AttentionParams(
        w=scale * rng.standard_normal((dv, dv)),
        q=scale * rng.standard_normal((n_heads, dv)),
        b=scale * rng.standard_normal(n_heads),
    )


def test_zero_heads_give_uniform_weights():
    rng = np.random.default_rng(0)
    dv, n_heads, t = 5, 3, 7
    params = AttentionParams(rng.standard_normal((dv, dv)), np.zeros((n_heads, dv)), np.zeros(n_heads))
    seq = rng.standard_normal((t, dv))
    a = head_scores(seq, params)
    assert_allclose(a, 0.0)
    assert_allclose(attention_weights(seq, params), np.full(t, 1.0 / t), atol=1e-15)


def test_two_heads_zero_scores_collapse_to_log2():
    # per-frame collapsed score is log(sum of H unit exponentials)
    dv, t = 4, 6
    params = AttentionParams(np.zeros((dv, dv)), np.zeros((2, dv)), np.zeros(2))
    seq = np.random.default_rng(1).standard_normal((t, dv))
    z = head_scores(seq, params)
    collapsed = np.log(np.exp(z).sum(axis=0))
    assert_allclose(collapsed, np.log(2.0), atol=1e-15)
    assert_allclose(attention_weights(seq, params), np.full(t, 1.0 / t), atol=1e-15)


def test_single_head_is_plain_softmax_attention():
    rng = np.random.default_rng(2)
    dv, t = 6, 9
    params = random_params(rng, dv, 1)
    seq = rng.standard_normal((t, dv))
    o = np.maximum(seq @ params.w.T, 0.0)
    direct = softmax(o @ params.q[0] + params.b[0])
    assert_allclose(attention_weights(seq, params), direct, atol=1e-12)
    assert_allclose(attention_weights_equiv(seq, params), direct, atol=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_both_weight_paths_agree(seed):
    rng = np.random.default_rng(seed)
    t = int(rng.integers(1, 20))
    dv = int(rng.integers(2, 8))
    n_heads = int(rng.integers(1, 6))
    params = random_params(rng, dv, n_heads, scale=float(rng.uniform(0.2, 3.0)))
    seq = rng.standard_normal((t, dv))
    w = attention_weights(seq, params)
    assert_allclose(w, attention_weights_equiv(seq, params), atol=1e-10)
    assert w.min() >= 0.0
    assert_allclose(w.sum(), 1.0, atol=1e-12)


def test_zero_param_attention_reproduces_uniform_corr_pool():
    rng = np.random.default_rng(3)
    dv, t = 5, 14
    params = AttentionParams(rng.standard_normal((dv, dv)), np.zeros((4, dv)), np.zeros(4))
    seq = rng.standard_normal((t, dv))
    assert_allclose(attentive_corr_pool(seq, params), corr_pool(seq), atol=1e-12)


def test_saturated_head_collapses_covariance():
    # one frame gets an overwhelming score -> weights one-hot -> stats degenerate
    dv = 4
    seq = np.random.default_rng(4).standard_normal((8, dv))
    seq[5] = np.abs(seq[5]) + 1.0
    params = AttentionParams(np.eye(dv), np.full((1, dv), 50.0), np.zeros(1))
    w = attention_weights(seq, params)
    assert w[5] > 1.0 - 1e-9
    emb = attentive_corr_pool(seq, params)
    assert np.max(np.abs(emb)) < 1e-6


def test_extreme_scores_stay_finite():
    dv = 3
    params = AttentionParams(np.eye(dv) * 100.0, np.full((2, dv), 100.0), np.zeros(2))
    seq = np.random.default_rng(5).standard_normal((10, dv)) * 10
    w = attention_weights(seq, params)
    assert np.all(np.isfinite(w))
    assert_allclose(w.sum(), 1.0, atol=1e-12)


def test_param_shape_validation():
    with pytest.raises(ConfigurationError):
        AttentionParams(np.ones((3, 4)), np.ones((2, 3)), np.zeros(2))
    with pytest.raises(ConfigurationError):
        AttentionParams(np.eye(3), np.ones((2, 4)), np.zeros(2))
    with pytest.raises(ConfigurationError):
        AttentionParams(np.eye(3), np.ones((2, 3)), np.zeros(3))
    with pytest.raises(ConfigurationError):
        init_attention_params(4, 0, np.random.default_rng(0))


def test_head_scores_shape_and_dv_check():
    rng = np.random.default_rng(6)
    params = random_params(rng, 4, 3)
    assert head_scores(rng.standard_normal((5, 4)), params).shape == (3, 5)
    with pytest.raises(ConfigurationError):
        head_scores(rng.standard_normal((5, 3)), params)
