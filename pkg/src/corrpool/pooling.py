"""Pooling operators mapping frame sequences to fixed-size utterance embeddings.

A layer stack is an (L+1, T, d) array of frame features from every upstream
layer; a frame sequence is a (T, c) array. All statistics are accumulated in
float64 regardless of the input dtype, since second-order statistics are
cancellation-prone.
"""

import numpy as np

from .errors import ConfigurationError, InputError
from .numerics import softmax

DEFAULT_EPS = 1e-8

SIMPLEX_TOL = 1e-9


def layer_gammas(logits: np.ndarray) -> np.ndarray:
    """Simplex weights over layers: softmax of the trainable logits."""
    return softmax(np.asarray(logits, dtype=np.float64))


def layer_pool(stack: np.ndarray, logits: np.ndarray) -> np.ndarray:
    """Collapse an (L+1, T, d) stack to (T, d) via softmax-weighted layer sum."""
    stack = np.asarray(stack, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 1 or stack.shape[1] < 1 or stack.shape[2] < 1:
        raise ConfigurationError(f"layer stack must be a nonempty (L+1, T, d) array, got shape {stack.shape}")
    if logits.shape != (stack.shape[0],):
        raise ConfigurationError(
            f"layer weights have length {logits.shape}, stack has {stack.shape[0]} layers"
        )
    g = softmax(logits)
    return np.tensordot(g, stack, axes=(0, 0))


def mean_pool(seq: np.ndarray) -> np.ndarray:
    """Per-channel mean over frames; (T, d) -> (d,)."""
    seq = _as_frames(seq)
    return seq.mean(axis=0)


def mean_std_pool(seq: np.ndarray) -> np.ndarray:
    """Concatenated per-channel mean and population std; (T, d) -> (2d,)."""
    seq = _as_frames(seq)
    mu = seq.mean(axis=0)
    var = np.mean((seq - mu) ** 2, axis=0)
    # rounding can push tiny variances below zero; clamp before the sqrt
    std = np.sqrt(np.maximum(var, 0.0))
    return np.concatenate([mu, std])


def weighted_stats(seq: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean vector and covariance matrix of (T, c) frames.

    w must be a simplex vector over frames; uniform w reproduces the
    plain 1/T population statistics.
    """
    seq = _as_frames(seq)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (seq.shape[0],):
        raise InputError(f"weight vector has shape {w.shape}, sequence has {seq.shape[0]} frames")
    if abs(w.sum() - 1.0) > SIMPLEX_TOL or w.min() < 0.0:
        raise InputError("frame weights must be nonnegative and sum to 1")
    mu = w @ seq
    centered = seq - mu
    # sqrt(w) scaling keeps the product bitwise symmetric
    cw = centered * np.sqrt(w)[:, None]
    sigma = cw.T @ cw
    return mu, sigma


def correlation(cov: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Normalize a covariance matrix by its variances: C = cov / (s s' + eps).

    eps is added to every denominator entry (an all-ones matrix scaled by
    eps), so zero-variance channels yield finite, near-zero rows instead of
    errors.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InputError(f"covariance must be square, got shape {cov.shape}")
    if cov.size and np.max(np.abs(cov - cov.T)) > 1e-8:
        raise InputError("covariance must be symmetric within 1e-8")
    s = np.sqrt(np.maximum(np.diag(cov), 0.0))
    denom = np.outer(s, s) + eps
    return cov / denom


def vectorize_upper(c: np.ndarray) -> np.ndarray:
    """Row-major strictly-upper-triangle entries of a square matrix.

    Output length is n(n-1)/2; the fixed traversal order (i < j, i ascending
    then j ascending) is part of the embedding format.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InputError(f"expected a square matrix, got shape {c.shape}")
    iu = np.triu_indices(c.shape[0], k=1)
    return c[iu]


def corr_pool(seq: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Correlation pooling: uniform stats -> correlation -> upper triangle."""
    seq = _as_frames(seq)
    t = seq.shape[0]
    w = np.full(t, 1.0 / t)
    _, sigma = weighted_stats(seq, w)
    return vectorize_upper(correlation(sigma, eps))


def attentive_corr_pool(seq: np.ndarray, attn, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Correlation pooling with frame weights from multi-head attention."""
    from .attention import attention_weights

    seq = _as_frames(seq)
    w = attention_weights(seq, attn)
    _, sigma = weighted_stats(seq, w)
    return vectorize_upper(correlation(sigma, eps))


def embedding_dim(method: str, d: int, dv: int) -> int:
    """Pooled embedding length for a given method and input/projection dims."""
    if method == "mean":
        return d
    if method == "meanstd":
        return 2 * d
    if method in ("corr", "attcorr"):
        return dv * (dv - 1) // 2
    raise ConfigurationError(f"unknown pooling method {method!r}")


def _as_frames(seq: np.ndarray) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise InputError(f"expected a nonempty (T, d) frame sequence, got shape {seq.shape}")
    return seq
