"""Projection, channel dropout, label smoothing, CE loss, and the param container."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from corrpool import (
    ConfigurationError,
    FormatError,
    InputError,
    TrainConfig,
    ce_loss,
    ce_loss_grad,
    channel_dropout,
    classify,
    init_head_params,
    load_params,
    predict,
    project,
    save_params,
    smooth_label_index,
    smooth_labels,
)
from corrpool.head import draw_channel_mask
from corrpool.numerics import softmax


def test_smoothing_spot_values():
    out = smooth_labels(np.array([1.0, 0.0, 0.0, 0.0]), 0.25)
    assert_allclose(out, [0.8125, 0.0625, 0.0625, 0.0625], atol=1e-12)


def test_smoothing_zero_mass_is_identity():
    y = np.array([0.0, 1.0, 0.0])
    assert_allclose(smooth_labels(y, 0.0), y)


def test_smoothing_full_mass_is_uniform():
    assert_allclose(smooth_labels(np.array([0.0, 0.0, 1.0, 0.0]), 1.0), 0.25)


def test_smoothing_keeps_simplex():
    for p in (0.1, 0.25, 0.5, 0.9):
        out = smooth_label_index(2, p, 5)
        assert_allclose(out.sum(), 1.0, atol=1e-15)
        assert out.min() > 0.0
        assert np.argmax(out) == 2


def test_smoothing_rejects_soft_input():
    with pytest.raises(InputError):
        smooth_labels(np.array([0.5, 0.5]), 0.1)
    with pytest.raises(InputError):
        smooth_labels(np.array([1.0, 1.0, 0.0]), 0.1)
    with pytest.raises(ConfigurationError):
        smooth_labels(np.array([1.0, 0.0]), 1.5)


def test_ce_uniform_logits():
    loss = ce_loss(np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]))
    assert_allclose(loss, np.log(4.0), atol=1e-12)


def test_ce_minimum_is_target_entropy():
    t = np.array([0.7, 0.1, 0.1, 0.1])
    entropy = -np.sum(t * np.log(t))
    # logits whose softmax equals the target achieve the entropy bound
    assert_allclose(ce_loss(np.log(t), t), entropy, atol=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(50):
        logits = rng.standard_normal(4) * 3
        assert ce_loss(logits, t) >= entropy - 1e-12


def test_ce_grad_is_softmax_minus_target():
    rng = np.random.default_rng(1)
    logits = rng.standard_normal(5)
    t = rng.dirichlet(np.ones(5))
    loss, g = ce_loss_grad(logits, t)
    assert_allclose(g, softmax(logits) - t, atol=1e-12)
    # central differences on each logit
    step = 1e-6
    for i in range(5):
        bumped = logits.copy()
        bumped[i] += step
        up = ce_loss(bumped, t)
        bumped[i] -= 2 * step
        dn = ce_loss(bumped, t)
        assert_allclose((up - dn) / (2 * step), g[i], atol=1e-7)


def test_ce_shape_mismatch():
    with pytest.raises(ConfigurationError):
        ce_loss(np.zeros(3), np.array([1.0, 0.0]))


def test_dropout_identities():
    rng = np.random.default_rng(2)
    seq = rng.standard_normal((6, 5))
    assert_allclose(channel_dropout(seq, 0.0, "train", rng), seq)
    assert_allclose(channel_dropout(seq, 0.4, "eval"), seq)


def test_dropout_zeroes_whole_channels():
    rng = np.random.default_rng(3)
    seq = rng.standard_normal((50, 8)) + 5.0
    out = channel_dropout(seq, 0.5, "train", np.random.default_rng(4))
    for c in range(8):
        col = out[:, c]
        assert np.all(col == 0.0) or np.all(col != 0.0)
    dropped = np.sum(out[0] == 0.0)
    assert 0 < dropped < 8  # seed chosen so some but not all channels drop
    kept = out[:, out[0] != 0.0]
    assert_allclose(kept, seq[:, out[0] != 0.0] * 2.0)


def test_dropout_mask_mean_is_one():
    rng = np.random.default_rng(5)
    masks = np.stack([draw_channel_mask(64, 0.25, rng) for _ in range(2000)])
    assert abs(masks.mean() - 1.0) < 0.01


def test_dropout_validation():
    seq = np.ones((3, 2))
    with pytest.raises(ConfigurationError):
        channel_dropout(seq, 1.0, "train", np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        channel_dropout(seq, 0.5, "train")
    with pytest.raises(ConfigurationError):
        channel_dropout(seq, 0.5, "predict")


def test_project_identity_and_bias():
    rng = np.random.default_rng(6)
    seq = rng.standard_normal((7, 4))
    assert_allclose(project(seq, np.eye(4), np.zeros(4)), seq)
    b = np.array([1.0, -2.0, 3.0])
    out = project(seq, np.zeros((4, 3)), b)
    assert_allclose(out, np.tile(b, (7, 1)))
    with pytest.raises(ConfigurationError):
        project(seq, np.eye(3), np.zeros(3))


def test_classify_spot_values():
    b = np.array([1.0, 2.0, 3.0, 4.0])
    logits = classify(np.ones(6), np.zeros((6, 4)), b)
    assert_allclose(logits, b)
    assert predict(logits) == 3
    emb = np.array([0.5, -1.0, 2.0, 0.0])
    assert_allclose(classify(emb, np.eye(4), np.zeros(4)), emb)
    with pytest.raises(ConfigurationError):
        classify(np.ones(5), np.zeros((6, 4)), b)


@given(st.sampled_from(["mean", "meanstd", "corr", "attcorr"]))
@settings(deadline=None)
def test_init_params_structure(method):
    rng = np.random.default_rng(0)
    params = init_head_params(method, 5, 12, 6, 3, 4, rng)
    assert params.layer_logits.shape == (5,)
    assert params.clf_b.shape == (4,)
    if method in ("corr", "attcorr"):
        assert params.proj_w.shape == (12, 6)
        assert params.clf_w.shape == (15, 4)
    else:
        assert params.proj_w is None
    if method == "attcorr":
        assert params.attn.q.shape == (3, 6)
    else:
        assert params.attn is None
    names = set(params.tensors())
    assert ("att_q" in names) == (method == "attcorr")


def test_params_copy_is_deep():
    params = init_head_params("attcorr", 3, 8, 4, 2, 4, np.random.default_rng(1))
    clone = params.copy()
    clone.clf_w += 1.0
    clone.attn.q += 1.0
    assert np.max(np.abs(clone.clf_w - params.clf_w)) > 0.5
    assert np.max(np.abs(clone.attn.q - params.attn.q)) > 0.5


def test_save_load_round_trip(tmp_path):
    cfg = TrainConfig(pooling="attcorr", dv=4, heads=2)
    params = init_head_params("attcorr", 3, 8, 4, 2, 4, np.random.default_rng(2))
    path = tmp_path / "params.npz"
    save_params(path, params, cfg)
    loaded, loaded_cfg = load_params(path)
    assert loaded_cfg == cfg
    for name, tensor in params.tensors().items():
        assert_allclose(loaded.tensors()[name], tensor, atol=0)


def test_load_params_rejects_foreign_archive(tmp_path):
    path = tmp_path / "junk.npz"
    np.savez(path, stuff=np.ones(3))
    with pytest.raises(FormatError):
        load_params(path)
