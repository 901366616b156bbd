"""Hand-derived reverse-mode gradients of the head loss, plus Adam.

The forward chain per utterance is

    layer_pool -> [project -> channel dropout -> (attention) -> weighted
    stats -> correlation -> upper triangle] or [mean / mean-std pooling]
    -> classify -> cross-entropy on soft targets

and every stage ships its own backward, so no autodiff framework is
involved. Batch items are (stack, target) pairs where target is a class
probability vector; the loss is the mean over the batch.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .errors import ConfigurationError, TrainingError
from .head import HeadParams, ce_loss_grad, draw_channel_mask
from .numerics import softmax

TensorDict = dict[str, np.ndarray]

# order used to locate the first non-finite stage when training blows up
_STAGE_ORDER = ("layer_pool", "project", "dropout", "attention", "statistics",
                "correlation", "embedding", "logits")


def utterance_forward(
    stack: np.ndarray,
    params: HeadParams,
    cfg: TrainConfig,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, dict]:
    """Logits for one utterance plus the cache needed by utterance_backward.

    mask is a per-channel inverted-dropout vector (None means eval mode /
    no dropout); it only applies to the projected sequence, so the mean and
    mean-std paths ignore it.
    """
    stack = np.asarray(stack, dtype=np.float64)
    cache: dict = {"stack": stack}
    g = softmax(params.layer_logits)
    h = np.tensordot(g, stack, axes=(0, 0))  # (T, d)
    cache["gammas"] = g
    cache["layer_pool"] = h
    t = h.shape[0]

    if cfg.pooling == "mean":
        emb = h.mean(axis=0)
    elif cfg.pooling == "meanstd":
        mu = h.mean(axis=0)
        centered = h - mu
        var = np.mean(centered**2, axis=0)
        std = np.sqrt(np.maximum(var, 0.0))
        emb = np.concatenate([mu, std])
        cache["h_centered"] = centered
        cache["h_std"] = std
    else:
        v = h @ params.proj_w + params.proj_b
        cache["project"] = v
        if mask is not None:
            v = v * mask
            cache["mask"] = mask
            cache["dropout"] = v
        if cfg.pooling == "attcorr":
            w, att_cache = _attention_forward(v, params)
            cache.update(att_cache)
            cache["attention"] = w
        else:
            w = np.full(t, 1.0 / t)
        mu = w @ v
        centered = v - mu
        cw = centered * np.sqrt(w)[:, None]
        sigma = cw.T @ cw
        cache["v"] = v
        cache["w"] = w
        cache["centered"] = centered
        cache["statistics"] = sigma
        s = np.sqrt(np.maximum(np.diag(sigma), 0.0))
        denom = np.outer(s, s) + cfg.epsilon
        c = sigma / denom
        cache["s"] = s
        cache["denom"] = denom
        cache["correlation"] = c
        iu = np.triu_indices(c.shape[0], k=1)
        cache["iu"] = iu
        emb = c[iu]

    cache["embedding"] = emb
    logits = emb @ params.clf_w + params.clf_b
    cache["logits"] = logits
    return logits, cache


def _attention_forward(v: np.ndarray, params: HeadParams) -> tuple[np.ndarray, dict]:
    att = params.attn
    u = v @ att.w.T  # (T, dv)
    o = np.maximum(u, 0.0)
    scores = att.q @ o.T + att.b[:, None]  # (H, T)
    m = scores.max(axis=0)
    p = np.exp(scores - m)
    a = m + np.log(p.sum(axis=0))  # log-sum-exp over heads
    w = softmax(a)
    return w, {"att_relu": u > 0, "att_o": o, "att_p": p / p.sum(axis=0), "att_w_frames": w}


def utterance_backward(
    dlogits: np.ndarray,
    cache: dict,
    params: HeadParams,
    cfg: TrainConfig,
) -> TensorDict:
    """Gradients of the scalar fed through dlogits w.r.t. every trainable tensor."""
    emb = cache["embedding"]
    grads: TensorDict = {
        "clf_w": np.outer(emb, dlogits),
        "clf_b": dlogits.copy(),
    }
    d_emb = params.clf_w @ dlogits
    h = cache["layer_pool"]
    t = h.shape[0]

    if cfg.pooling == "mean":
        dh = np.broadcast_to(d_emb / t, h.shape).copy()
    elif cfg.pooling == "meanstd":
        d = h.shape[1]
        std = cache["h_std"]
        centered = cache["h_centered"]
        # clamped sqrt: subgradient 0 at zero variance
        dvar = np.where(std > 0.0, d_emb[d:] * 0.5 / np.where(std > 0.0, std, 1.0), 0.0)
        dh = d_emb[:d] / t + centered * (2.0 / t) * dvar
    else:
        dv = _corr_backward(d_emb, cache, params, cfg, grads)
        if "mask" in cache:
            dv = dv * cache["mask"]
        grads["proj_w"] = h.T @ dv
        grads["proj_b"] = dv.sum(axis=0)
        dh = dv @ params.proj_w.T

    g = cache["gammas"]
    dgamma = np.tensordot(cache["stack"], dh, axes=([1, 2], [0, 1]))
    grads["layer_logits"] = g * (dgamma - g @ dgamma)
    return grads


def _corr_backward(d_emb, cache, params, cfg, grads) -> np.ndarray:
    """Upper triangle -> correlation -> weighted stats (-> attention); returns d/dv."""
    c = cache["correlation"]
    denom = cache["denom"]
    s = cache["s"]
    sigma_grad = np.zeros_like(c)
    sigma_grad[cache["iu"]] = d_emb  # only the strict upper triangle was read
    dc = sigma_grad
    d_sigma = dc / denom
    # variance path: C_ij depends on s_i, s_j through the denominator
    m = dc * c / denom
    ds = -(m @ s + m.T @ s)
    safe = np.where(s > 0.0, s, 1.0)
    np.fill_diagonal(d_sigma, np.diag(d_sigma) + np.where(s > 0.0, ds * 0.5 / safe, 0.0))

    centered = cache["centered"]
    w = cache["w"]
    a = d_sigma + d_sigma.T
    dv = (centered @ a.T) * w[:, None]
    if cfg.pooling == "attcorr":
        dw = np.sum((centered @ d_sigma) * centered, axis=1)
        dv = dv + _attention_backward(dw, cache, params, grads)
    return dv


def _attention_backward(dw, cache, params, grads) -> np.ndarray:
    att = params.attn
    w = cache["att_w_frames"]
    da = w * (dw - dw @ w)  # softmax over frames
    dscores = cache["att_p"] * da  # (H, T), log-sum-exp over heads
    grads["att_b"] = dscores.sum(axis=1)
    grads["att_q"] = dscores @ cache["att_o"]
    do = dscores.T @ att.q  # (T, dv)
    du = do * cache["att_relu"]
    v = cache["dropout"] if "dropout" in cache else cache["project"]
    grads["att_w"] = du.T @ v
    return du @ att.w


def batch_loss(
    batch: list[tuple[np.ndarray, np.ndarray]],
    params: HeadParams,
    cfg: TrainConfig,
    masks: list[np.ndarray | None] | None = None,
) -> float:
    """Mean cross-entropy of a batch under fixed dropout masks (None = no dropout)."""
    if not batch:
        raise ConfigurationError("batch must be nonempty")
    total = 0.0
    for i, (stack, target) in enumerate(batch):
        mask = masks[i] if masks is not None else None
        logits, _ = utterance_forward(stack, params, cfg, mask)
        total += ce_loss_grad(logits, target)[0]
    return total / len(batch)


def loss_and_grads(
    batch: list[tuple[np.ndarray, np.ndarray]],
    params: HeadParams,
    cfg: TrainConfig,
    masks: list[np.ndarray | None] | None = None,
) -> tuple[float, TensorDict]:
    """Mean batch loss and its exact gradients under fixed dropout masks."""
    if not batch:
        raise ConfigurationError("batch must be nonempty")
    n = len(batch)
    total = 0.0
    acc: TensorDict = {name: np.zeros_like(p) for name, p in params.tensors().items()}
    for i, (stack, target) in enumerate(batch):
        mask = masks[i] if masks is not None else None
        logits, cache = utterance_forward(stack, params, cfg, mask)
        if not np.all(np.isfinite(logits)):
            raise TrainingError(f"non-finite values first appeared in stage {_first_bad_stage(cache)!r}")
        loss, dlogits = ce_loss_grad(logits, np.asarray(target, dtype=np.float64))
        total += loss
        for name, g in utterance_backward(dlogits / n, cache, params, cfg).items():
            acc[name] += g
    return total / n, acc


def backward(
    batch: list[tuple[np.ndarray, np.ndarray]],
    params: HeadParams,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[float, TensorDict]:
    """Train-mode loss and gradients; draws one dropout mask per utterance from rng."""
    masks = draw_batch_masks(len(batch), params, cfg, rng)
    return loss_and_grads(batch, params, cfg, masks)


def draw_batch_masks(
    n_items: int,
    params: HeadParams,
    cfg: TrainConfig,
    rng: np.random.Generator | None,
) -> list[np.ndarray | None] | None:
    """Per-utterance channel masks for the projected sequence, or None when unused."""
    if cfg.dropout == 0.0 or cfg.pooling not in ("corr", "attcorr") or rng is None:
        return None
    return [draw_channel_mask(cfg.dv, cfg.dropout, rng) for _ in range(n_items)]


def _first_bad_stage(cache: dict) -> str:
    for name in _STAGE_ORDER:
        if name in cache and not np.all(np.isfinite(cache[name])):
            return name
    return "loss"


def clip_gradients(grads: TensorDict, max_norm: float) -> TensorDict:
    """Scale all gradients down to a shared global L2 norm; no-op when under it."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm > 0.0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return grads


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: TensorDict = field(default_factory=dict)
    v: TensorDict = field(default_factory=dict)


def init_adam(params: HeadParams, cfg: TrainConfig) -> AdamState:
    tensors = params.tensors()
    return AdamState(
        lr=cfg.lr,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.adam_epsilon,
        m={name: np.zeros_like(p) for name, p in tensors.items()},
        v={name: np.zeros_like(p) for name, p in tensors.items()},
    )


def optimizer_step(
    params: HeadParams,
    grads: TensorDict,
    state: AdamState,
) -> tuple[HeadParams, AdamState]:
    """One bias-corrected Adam update, applied in place; deterministic."""
    state.step += 1
    t = state.step
    for name, p in params.tensors().items():
        g = grads[name]
        if g.shape != p.shape:
            raise ConfigurationError(f"gradient for {name!r} has shape {g.shape}, expected {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state
