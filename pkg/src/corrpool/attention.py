"""Frame weights via multi-head attention aggregated with log-sum-exp.

Each head scores a frame by a dot-product against a shared nonlinear view
o_t = relu(W v_t); per-frame head scores are collapsed with log-sum-exp
(a soft max over heads), and a softmax over frames yields the weights.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .numerics import logsumexp, softmax


@dataclass
class AttentionParams:
    """Trainable attention tensors: shared square map plus H (query, bias) heads."""

    w: np.ndarray  # (dv, dv)
    q: np.ndarray  # (H, dv)
    b: np.ndarray  # (H,)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        dv = self.w.shape[0]
        if self.w.shape != (dv, dv):
            raise ConfigurationError(f"attention map must be square, got {self.w.shape}")
        if self.q.ndim != 2 or self.q.shape[1] != dv or self.q.shape[0] < 1:
            raise ConfigurationError(f"head queries must be (H, {dv}), got {self.q.shape}")
        if self.b.shape != (self.q.shape[0],):
            raise ConfigurationError(f"head biases must be ({self.q.shape[0]},), got {self.b.shape}")

    @property
    def n_heads(self) -> int:
        return self.q.shape[0]

    @property
    def dv(self) -> int:
        return self.w.shape[0]


def init_attention_params(dv: int, n_heads: int, rng: np.random.Generator) -> AttentionParams:
    """Initialization keeping initial frame scores near log(H), i.e. near-uniform weights."""
    if n_heads < 1:
        raise ConfigurationError("attention needs at least one head")
    bound = np.sqrt(6.0 / (2 * dv))
    w = rng.uniform(-bound, bound, size=(dv, dv))
    q = rng.normal(0.0, 1.0 / np.sqrt(dv), size=(n_heads, dv))
    b = np.zeros(n_heads)
    return AttentionParams(w, q, b)


def head_scores(seq: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Per-head, per-frame dot-products q_h'relu(W v_t) + b_h, shape (H, T)."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != params.dv:
        raise ConfigurationError(
            f"sequence has shape {seq.shape}, attention params expect (T, {params.dv})"
        )
    o = np.maximum(seq @ params.w.T, 0.0)  # (T, dv)
    return params.q @ o.T + params.b[:, None]


def attention_weights(seq: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Frame-weight simplex: softmax over frames of log-sum-exp head scores."""
    z = head_scores(seq, params)  # (H, T)
    a = logsumexp(z, axis=0)  # (T,)
    return softmax(a)


def attention_weights_equiv(seq: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Equivalent path: one softmax over all H*T scores, then sum over heads."""
    z = head_scores(seq, params)  # (H, T)
    p = softmax(z.reshape(-1)).reshape(z.shape)
    return p.sum(axis=0)
