"""Classification head: projection, channel dropout, label smoothing, CE loss."""

import json
from dataclasses import dataclass

import numpy as np

from .attention import AttentionParams, init_attention_params
from .config import TrainConfig
from .errors import ConfigurationError, FormatError, InputError
from .numerics import log_softmax, softmax
from .pooling import embedding_dim


@dataclass
class HeadParams:
    """All trainable tensors; proj/attn present only when the method uses them."""

    layer_logits: np.ndarray  # (L+1,)
    clf_w: np.ndarray  # (embedding_dim, K)
    clf_b: np.ndarray  # (K,)
    proj_w: np.ndarray | None = None  # (d, dv)
    proj_b: np.ndarray | None = None  # (dv,)
    attn: AttentionParams | None = None

    def tensors(self) -> dict[str, np.ndarray]:
        """Live views of every trainable tensor, keyed by a stable name."""
        out = {"layer_logits": self.layer_logits, "clf_w": self.clf_w, "clf_b": self.clf_b}
        if self.proj_w is not None:
            out["proj_w"] = self.proj_w
            out["proj_b"] = self.proj_b
        if self.attn is not None:
            out["att_w"] = self.attn.w
            out["att_q"] = self.attn.q
            out["att_b"] = self.attn.b
        return out

    def copy(self) -> "HeadParams":
        attn = None
        if self.attn is not None:
            attn = AttentionParams(self.attn.w.copy(), self.attn.q.copy(), self.attn.b.copy())
        return HeadParams(
            layer_logits=self.layer_logits.copy(),
            clf_w=self.clf_w.copy(),
            clf_b=self.clf_b.copy(),
            proj_w=None if self.proj_w is None else self.proj_w.copy(),
            proj_b=None if self.proj_b is None else self.proj_b.copy(),
            attn=attn,
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_head_params(
    method: str,
    n_layers: int,
    d: int,
    dv: int,
    n_heads: int,
    n_classes: int,
    rng: np.random.Generator,
) -> HeadParams:
    """Fresh parameters for one configured head; biases zero, weights fan-based uniform."""
    emb = embedding_dim(method, d, dv)
    params = HeadParams(
        layer_logits=np.zeros(n_layers),
        clf_w=_glorot(rng, emb, n_classes),
        clf_b=np.zeros(n_classes),
    )
    if method in ("corr", "attcorr"):
        params.proj_w = _glorot(rng, d, dv)
        params.proj_b = np.zeros(dv)
    if method == "attcorr":
        params.attn = init_attention_params(dv, n_heads, rng)
    return params


def project(seq: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-frame affine map, (T, d) -> (T, dv)."""
    seq = np.asarray(seq, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != w.shape[0]:
        raise ConfigurationError(f"cannot project {seq.shape} frames with a {w.shape} map")
    return seq @ w + b


def draw_channel_mask(n_channels: int, p_drop: float, rng: np.random.Generator) -> np.ndarray:
    """One inverted-dropout mask: each channel is 0 with prob p_drop, else 1/(1-p_drop)."""
    if not 0.0 <= p_drop < 1.0:
        raise ConfigurationError(f"channel dropout probability must be in [0, 1), got {p_drop}")
    if p_drop == 0.0:
        return np.ones(n_channels)
    kept = rng.random(n_channels) >= p_drop
    return kept / (1.0 - p_drop)


def channel_dropout(
    seq: np.ndarray,
    p_drop: float,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Drop whole channels across all frames (train mode); identity in eval mode.

    Surviving channels are scaled by 1/(1-p_drop) so eval needs no rescaling.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if mode not in ("train", "eval"):
        raise ConfigurationError(f"unknown dropout mode {mode!r}")
    if not 0.0 <= p_drop < 1.0:
        raise ConfigurationError(f"channel dropout probability must be in [0, 1), got {p_drop}")
    if mode == "eval" or p_drop == 0.0:
        return seq.copy()
    if rng is None:
        raise ConfigurationError("train-mode dropout needs an explicit random generator")
    return seq * draw_channel_mask(seq.shape[1], p_drop, rng)


def smooth_labels(y: np.ndarray, p_smooth: float) -> np.ndarray:
    """Blend a one-hot target toward uniform: y*(1-p) + p/K."""
    y = np.asarray(y, dtype=np.float64)
    if not 0.0 <= p_smooth <= 1.0:
        raise ConfigurationError(f"label smoothing mass must be in [0, 1], got {p_smooth}")
    if y.ndim != 1 or np.sum(y == 1.0) != 1 or np.sum(y == 0.0) != y.size - 1:
        raise InputError("target must be a one-hot vector")
    k = y.size
    return y * (1.0 - p_smooth) + p_smooth / k


def smooth_label_index(label: int, p_smooth: float, n_classes: int) -> np.ndarray:
    """smooth_labels for a class index instead of a one-hot vector."""
    y = np.zeros(n_classes)
    y[label] = 1.0
    return smooth_labels(y, p_smooth)


def classify(emb: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map from a pooled embedding to class logits."""
    emb = np.asarray(emb, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if emb.shape != (w.shape[0],):
        raise ConfigurationError(f"embedding shape {emb.shape} does not match classifier {w.shape}")
    return emb @ w + np.asarray(b, dtype=np.float64)


def ce_loss(logits: np.ndarray, target: np.ndarray) -> float:
    """Cross-entropy against a soft target simplex, via stable log-softmax."""
    return ce_loss_grad(logits, target)[0]


def ce_loss_grad(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss plus its gradient w.r.t. the logits, softmax(logits) - target."""
    logits = np.asarray(logits, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if logits.shape != target.shape:
        raise ConfigurationError(f"logits {logits.shape} and target {target.shape} differ")
    loss = -float(target @ log_softmax(logits))
    return loss, softmax(logits) - target


def predict(logits: np.ndarray) -> int:
    return int(np.argmax(logits))


def save_params(path, params: HeadParams, cfg: TrainConfig) -> None:
    """Store trained tensors plus the config they were trained under (.npz)."""
    np.savez(path, config=np.array(json.dumps(cfg.asdict(), sort_keys=True)), **params.tensors())


def load_params(path) -> tuple[HeadParams, TrainConfig]:
    """Inverse of save_params; the embedded config restores the pooling setup."""
    with np.load(path, allow_pickle=False) as archive:
        try:
            cfg = TrainConfig(**json.loads(str(archive["config"][()]))).validate()
            attn = None
            if "att_w" in archive:
                attn = AttentionParams(archive["att_w"], archive["att_q"], archive["att_b"])
            params = HeadParams(
                layer_logits=archive["layer_logits"],
                clf_w=archive["clf_w"],
                clf_b=archive["clf_b"],
                proj_w=archive["proj_w"] if "proj_w" in archive else None,
                proj_b=archive["proj_b"] if "proj_b" in archive else None,
                attn=attn,
            )
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise FormatError(f"{path}: not a saved parameter archive ({e})") from None
    return params, cfg
