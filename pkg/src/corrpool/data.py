"""Feature-file and manifest I/O, label mapping, synthetic data, fold splits.

Feature container ("LSF1"): little-endian header of magic b"LSF1", u32
version=1, u32 n_layers, u32 T, u32 d (20 bytes total), followed by
n_layers*T*d float32 values in [layer][frame][dim] order. Manifests are
JSON lines with keys id, path, label, session, speaker; paths are relative
to the manifest's directory.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, InputError

MAGIC = b"LSF1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")

# fixed class order for IEMOCAP-style four-class experiments
CLASSES = ("anger", "happiness", "sadness", "neutral")

DISCARD = "discard"

# IEMOCAP annotation vocabulary -> four-class scheme; excitement merges
# into happiness, everything outside the four kept classes is dropped
_LABEL_MAP = {
    "anger": "anger",
    "happiness": "happiness",
    "sadness": "sadness",
    "neutral": "neutral",
    "excitement": "happiness",
    "surprise": DISCARD,
    "fear": DISCARD,
    "disgust": DISCARD,
    "frustration": DISCARD,
    "other": DISCARD,
    DISCARD: DISCARD,
}


def map_label(raw: str) -> str:
    """Four-class label for a raw annotation; idempotent on its own outputs."""
    try:
        return _LABEL_MAP[raw.strip().lower()]
    except KeyError:
        raise InputError(f"unknown emotion label {raw!r}") from None


def write_feature_file(path, stack: np.ndarray) -> None:
    """Store an (n_layers, T, d) stack as float32 in the LSF1 container."""
    stack = np.asarray(stack)
    if stack.ndim != 3 or min(stack.shape) < 1:
        raise InputError(f"feature stack must be a nonempty (n_layers, T, d) array, got {stack.shape}")
    if not np.all(np.isfinite(stack)):
        raise InputError("feature stack contains non-finite values")
    payload = np.ascontiguousarray(stack, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, *stack.shape))
        f.write(payload.tobytes())


def read_header(path) -> tuple[int, int, int]:
    """(n_layers, T, d) from an LSF1 header without loading the payload."""
    with open(path, "rb") as f:
        return _parse_header(path, f.read(_HEADER.size))


def _parse_header(path, header: bytes) -> tuple[int, int, int]:
    if len(header) < _HEADER.size:
        raise FormatError(f"{path}: truncated header, file ends at offset {len(header)}")
    magic, version, n_layers, t, d = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at offset 4")
    for offset, name, value in ((8, "n_layers", n_layers), (12, "n_frames", t), (16, "dim", d)):
        if value == 0:
            raise FormatError(f"{path}: zero {name} at offset {offset}")
    return n_layers, t, d


def load_feature_file(path) -> np.ndarray:
    """Read an LSF1 file back into a float32 (n_layers, T, d) array.

    Malformed files raise FormatError naming the byte offset of the problem.
    """
    with open(path, "rb") as f:
        n_layers, t, d = _parse_header(path, f.read(_HEADER.size))
        expected = n_layers * t * d * 4
        raw = f.read(expected + 1)
    if len(raw) < expected:
        raise FormatError(
            f"{path}: truncated payload, expected {expected} bytes, file ends at offset {_HEADER.size + len(raw)}"
        )
    if len(raw) > expected:
        raise FormatError(f"{path}: trailing bytes at offset {_HEADER.size + expected}")
    stack = np.frombuffer(raw, dtype="<f4").reshape(n_layers, t, d)
    bad = np.flatnonzero(~np.isfinite(stack.reshape(-1)))
    if bad.size:
        raise FormatError(f"{path}: non-finite value at offset {_HEADER.size + 4 * int(bad[0])}")
    return stack


@dataclass
class UtteranceRecord:
    id: str
    path: str
    label: str
    session: int
    speaker: str


@dataclass
class Manifest:
    """Ordered utterance records plus the class order defining label indices."""

    records: list[UtteranceRecord]
    class_names: tuple[str, ...] = CLASSES
    root: Path | None = None  # directory feature paths are relative to

    def label_index(self, label: str) -> int:
        try:
            return self.class_names.index(label)
        except ValueError:
            raise InputError(f"label {label!r} not in class set {self.class_names}") from None

    def sessions(self) -> list[int]:
        return sorted({r.session for r in self.records})

    def feature_path(self, record: UtteranceRecord) -> Path:
        if self.root is None:
            raise ConfigurationError("manifest has no root directory to resolve paths against")
        return self.root / record.path


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    with open(path, "w") as f:
        for r in manifest.records:
            f.write(json.dumps({
                "id": r.id, "path": r.path, "label": r.label,
                "session": r.session, "speaker": r.speaker,
            }) + "\n")


def load_manifest(path, class_names: tuple[str, ...] = CLASSES, check_paths: bool = True) -> Manifest:
    """Parse a JSONL manifest; validates ids, labels, sessions, and file paths."""
    path = Path(path)
    records = []
    seen = set()
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
            try:
                rec = UtteranceRecord(
                    id=str(obj["id"]), path=str(obj["path"]), label=str(obj["label"]),
                    session=int(obj["session"]), speaker=str(obj["speaker"]),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: bad record ({e})") from None
            if rec.id in seen:
                raise InputError(f"{path}:{lineno}: duplicate utterance id {rec.id!r}")
            seen.add(rec.id)
            if rec.label not in class_names:
                raise InputError(f"{path}:{lineno}: label {rec.label!r} not in class set {class_names}")
            if rec.session < 1:
                raise InputError(f"{path}:{lineno}: session must be >= 1, got {rec.session}")
            records.append(rec)
    manifest = Manifest(records, tuple(class_names), root=path.parent)
    if check_paths:
        for r in records:
            if not manifest.feature_path(r).is_file():
                raise InputError(f"{path}: feature file {r.path!r} for id {r.id!r} not found")
    return manifest


def load_features(manifest: Manifest) -> dict[str, np.ndarray]:
    """Materialize every feature stack keyed by utterance id."""
    return {r.id: load_feature_file(manifest.feature_path(r)) for r in manifest.records}


@dataclass
class SynthConfig:
    """Synthetic dataset where class identity lives only in channel correlations.

    Every channel is zero-mean unit-variance noise in every utterance, so
    mean pooling carries no class signal by construction. For class k, a
    contiguous sub-segment (segment_fraction of the frames) carries rho-
    correlated noise on that class's designated channel pair; each layer of
    the stack is an independent copy, so any simplex layer weighting
    preserves the pair correlation.
    """

    n_classes: int = 4
    n_per_class: int = 50  # per class, per session
    n_sessions: int = 5
    t_min: int = 80
    t_max: int = 120
    d: int = 16
    n_layers: int = 4
    segment_fraction: float = 0.5
    rho: float = 0.95
    seed: int = 0

    def validate(self) -> "SynthConfig":
        if self.n_classes < 2:
            raise ConfigurationError(f"need at least 2 classes, got {self.n_classes}")
        if self.n_classes > self.d * (self.d - 1) // 2:
            raise ConfigurationError(
                f"{self.n_classes} classes need {self.n_classes} distinct channel pairs, "
                f"d={self.d} offers {self.d * (self.d - 1) // 2}"
            )
        if self.n_per_class < 1 or self.n_sessions < 1 or self.n_layers < 1:
            raise ConfigurationError("counts must be positive")
        if not 2 <= self.t_min <= self.t_max:
            raise ConfigurationError(f"need 2 <= t_min <= t_max, got [{self.t_min}, {self.t_max}]")
        if not 0.0 < self.segment_fraction <= 1.0:
            raise ConfigurationError(f"segment_fraction must be in (0, 1], got {self.segment_fraction}")
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"rho must be in [-1, 1], got {self.rho}")
        return self


def designated_pairs(n_classes: int, d: int) -> list[tuple[int, int]]:
    """Channel pair carrying class k's correlation; disjoint pairs when they fit."""
    if 2 * n_classes <= d:
        return [(2 * k, 2 * k + 1) for k in range(n_classes)]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    if n_classes > len(pairs):
        raise ConfigurationError(f"{n_classes} classes exceed {len(pairs)} available channel pairs")
    return pairs[:n_classes]


def _synth_stack(cfg: SynthConfig, pair: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    t = int(rng.integers(cfg.t_min, cfg.t_max + 1))
    seg = min(t, max(2, round(cfg.segment_fraction * t)))
    start = int(rng.integers(0, t - seg + 1))
    stack = rng.standard_normal((cfg.n_layers, t, cfg.d))
    i, j = pair
    mix = np.sqrt(1.0 - cfg.rho**2)
    for layer in stack:
        # overwrite channel j inside the segment with rho-correlated noise
        layer[start:start + seg, j] = cfg.rho * layer[start:start + seg, i] + mix * rng.standard_normal(seg)
    return stack.astype(np.float32)


def synth_class_names(n_classes: int) -> tuple[str, ...]:
    if n_classes <= len(CLASSES):
        return CLASSES[:n_classes]
    return tuple(f"class{k}" for k in range(n_classes))


def generate_synth(cfg: SynthConfig) -> tuple[Manifest, dict[str, np.ndarray]]:
    """Build the synthetic manifest and its feature stacks in memory.

    Each utterance draws from its own seeded stream keyed (seed, index), so
    regeneration is bit-identical and order-independent.
    """
    cfg.validate()
    names = synth_class_names(cfg.n_classes)
    pairs = designated_pairs(cfg.n_classes, cfg.d)
    records = []
    features = {}
    idx = 0
    for session in range(1, cfg.n_sessions + 1):
        for k, label in enumerate(names):
            for n in range(cfg.n_per_class):
                rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, idx]))
                uid = f"s{session}_{label}_{n:03d}"
                # two speakers per session, both covering every class
                speaker = f"spk{session}{'a' if n % 2 == 0 else 'b'}"
                records.append(UtteranceRecord(uid, f"{uid}.lsf", label, session, speaker))
                features[uid] = _synth_stack(cfg, pairs[k], rng)
                idx += 1
    return Manifest(records, names), features


def write_synth(cfg: SynthConfig, out_dir) -> Manifest:
    """Generate the synthetic dataset and write it to disk; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest, features = generate_synth(cfg)
    manifest.root = out_dir
    for rec in manifest.records:
        write_feature_file(out_dir / rec.path, features[rec.id])
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


@dataclass(frozen=True)
class Fold:
    """One leave-one-session-out split, identified by the held-out session."""

    session: int
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def split_folds(manifest: Manifest, val_fraction: float = 0.1, seed: int = 0) -> list[Fold]:
    """Leave-one-session-out folds with a stratified seeded validation split.

    Test = the held-out session. Validation = val_fraction of the remaining
    utterances, drawn per class (at least one, never a whole class). The
    held-out session's speakers must not appear in train or validation.
    """
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigurationError(f"validation fraction must be in [0, 1), got {val_fraction}")
    sessions = manifest.sessions()
    if len(sessions) < 2:
        raise ConfigurationError(f"cross-validation needs at least 2 sessions, got {len(sessions)}")
    folds = []
    for session in sessions:
        test = [r for r in manifest.records if r.session == session]
        rest = [r for r in manifest.records if r.session != session]
        rng = np.random.default_rng(np.random.SeedSequence([seed, session]))
        val_ids: list[str] = []
        for label in manifest.class_names:
            group = [r.id for r in rest if r.label == label]
            if not group:
                continue
            n_val = max(1, round(val_fraction * len(group)))
            n_val = min(n_val, len(group) - 1)
            order = rng.permutation(len(group))
            val_ids.extend(group[i] for i in order[:n_val])
        val_set = set(val_ids)
        train_ids = tuple(r.id for r in rest if r.id not in val_set)
        test_speakers = {r.speaker for r in test}
        leaked = test_speakers & {r.speaker for r in rest}
        if leaked:
            raise ConfigurationError(
                f"speakers {sorted(leaked)} of held-out session {session} also appear in other sessions"
            )
        folds.append(Fold(session, train_ids, tuple(sorted(val_ids)), tuple(r.id for r in test)))
    return folds


def flip_labels(labels: np.ndarray, fraction: float, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Reassign a fraction of label indices to uniformly-drawn other classes."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError(f"flip fraction must be in [0, 1], got {fraction}")
    labels = np.asarray(labels).copy()
    n_flip = round(fraction * labels.size)
    if n_flip == 0:
        return labels
    idx = rng.choice(labels.size, size=n_flip, replace=False)
    labels[idx] = (labels[idx] + rng.integers(1, n_classes, size=n_flip)) % n_classes
    return labels
