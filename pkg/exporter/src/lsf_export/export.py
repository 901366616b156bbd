"""Run a frozen upstream model over an audio list and write LSF1 features."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import TARGET_RATE, load_wav, seconds
from .errors import ExportError, InputError
from .format import write_feature_file
from .labels import DISCARD, map_label

log = logging.getLogger("lsf_export")

# name -> (checkpoint, hidden size, per-utterance input normalization)
# base checkpoints use group-norm feature extractors and raw waveforms;
# the large ones were trained with zero-mean unit-var input.
MODEL_REGISTRY = {
    "wav2vec2-base": ("facebook/wav2vec2-base", 768, False),
    "wav2vec2-large": ("facebook/wav2vec2-large-lv60", 1024, True),
    "hubert-base": ("facebook/hubert-base-ls960", 768, False),
    "hubert-large": ("facebook/hubert-large-ll60k", 1024, True),
    "wavlm-base": ("microsoft/wavlm-base", 768, False),
    "wavlm-large": ("microsoft/wavlm-large", 1024, True),
}


@dataclass
class AudioItem:
    id: str
    path: Path
    label: str
    session: int
    speaker: str


@dataclass
class ExportJob:
    items: list[AudioItem]
    model: str  # registry name or a local model directory
    out_dir: Path
    device: str = "cpu"
    max_seconds: float = 30.0
    normalize: bool | None = None  # None: registry default (raw waveform for local paths)
    counts: dict = field(default_factory=dict)  # filled by export()

    def validate(self) -> "ExportJob":
        if not self.items:
            raise InputError("no audio items to export")
        if self.max_seconds <= 0:
            raise InputError(f"max duration must be positive, got {self.max_seconds}")
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise InputError(f"duplicate utterance id {item.id!r}")
            seen.add(item.id)
            if item.session < 1:
                raise InputError(f"{item.id}: session must be >= 1, got {item.session}")
        return self


def resolve_model(name: str) -> tuple[str, int | None, bool]:
    """Registry name or local directory -> (source, expected hidden size, normalize)."""
    if name in MODEL_REGISTRY:
        return MODEL_REGISTRY[name]
    if Path(name).is_dir():
        return str(name), None, False
    raise InputError(
        f"unknown model {name!r}; pick one of {sorted(MODEL_REGISTRY)} or pass a local model directory"
    )


def load_frozen(source: str, device: str):
    """Load the upstream in inference mode with every parameter frozen."""
    import torch
    from transformers import AutoModel

    try:
        model = AutoModel.from_pretrained(source)
        model = model.to(device)
    except Exception as e:
        raise ExportError(f"failed to load model {source!r}: {e}") from e
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def frame_count(n_samples: int, config) -> int:
    """Output length of the model's conv feature extractor for a waveform length."""
    t = n_samples
    for kernel, stride in zip(config.conv_kernel, config.conv_stride):
        t = (t - kernel) // stride + 1
    return t


def _extract(model, samples: np.ndarray, device: str, normalize: bool) -> np.ndarray:
    import torch

    if normalize:
        samples = (samples - samples.mean()) / np.sqrt(samples.var() + 1e-7)
    x = torch.from_numpy(np.ascontiguousarray(samples, dtype=np.float32))
    with torch.inference_mode():
        out = model(x[None, :].to(device), output_hidden_states=True)
    # hidden_states[0] is the conv stack's output, then one entry per transformer layer
    return np.stack([h.squeeze(0).cpu().numpy() for h in out.hidden_states]).astype(np.float32)


def export(job: ExportJob) -> Path:
    """Write one LSF1 file per usable item plus manifest.jsonl; returns the manifest path."""
    job.validate()
    source, d_expected, norm_default = resolve_model(job.model)
    normalize = norm_default if job.normalize is None else job.normalize
    model = load_frozen(source, job.device)
    d = model.config.hidden_size
    n_layers = model.config.num_hidden_layers + 1
    if d_expected is not None and d != d_expected:
        raise ExportError(f"{job.model}: checkpoint hidden size {d} does not match registry ({d_expected})")

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {"exported": 0, "discarded_label": 0, "unreadable": 0, "too_long": 0, "too_short": 0}
    lines = []
    for item in job.items:
        label = map_label(item.label)
        if label == DISCARD:
            counts["discarded_label"] += 1
            continue
        try:
            samples = load_wav(item.path)
        except (OSError, ValueError) as e:
            log.warning("skipping %s: unreadable audio (%s)", item.id, e)
            counts["unreadable"] += 1
            continue
        if seconds(samples) > job.max_seconds:
            log.warning("skipping %s: %.1fs exceeds the %.1fs limit", item.id, seconds(samples), job.max_seconds)
            counts["too_long"] += 1
            continue
        if frame_count(samples.shape[0], model.config) < 1:
            log.warning("skipping %s: too short for a single frame", item.id)
            counts["too_short"] += 1
            continue
        stack = _extract(model, samples, job.device, normalize)
        if not np.all(np.isfinite(stack)):
            raise ExportError(f"{item.id}: model produced non-finite features")
        filename = f"{item.id}.lsf"
        write_feature_file(out_dir / filename, stack)
        lines.append({
            "id": item.id, "path": filename, "label": label,
            "session": item.session, "speaker": item.speaker, "model": job.model,
        })
        counts["exported"] += 1

    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w") as f:
        for line in lines:
            f.write(json.dumps(line, sort_keys=True) + "\n")
    snapshot = {
        "model": job.model, "source": source, "hidden_size": d, "n_layers": n_layers,
        "frame_rate_hz": TARGET_RATE, "normalize": normalize,
        "max_seconds": job.max_seconds, "counts": counts,
    }
    (out_dir / "export.json").write_text(json.dumps(snapshot, sort_keys=True, indent=2) + "\n")
    job.counts = counts
    log.info("exported %d utterances to %s (%s)", counts["exported"], out_dir,
             ", ".join(f"{k} {v}" for k, v in counts.items() if k != "exported" and v))
    return manifest_path
