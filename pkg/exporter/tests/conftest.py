import csv

import numpy as np
import pytest
from scipy.io import wavfile

from lsf_export import AudioItem, ExportJob, export


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A real (but minuscule) upstream saved locally: 2 transformer layers, d=32."""
    import torch
    from transformers import Wav2Vec2Config, Wav2Vec2Model

    cfg = Wav2Vec2Config(
        hidden_size=32, num_hidden_layers=2, num_attention_heads=2, intermediate_size=64,
        conv_dim=(16, 16, 16), conv_kernel=(10, 3, 3), conv_stride=(5, 2, 2),
        num_feat_extract_layers=3, num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=4, vocab_size=32,
    )
    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("tiny_upstream")
    Wav2Vec2Model(cfg).save_pretrained(path)
    return path


def write_wav(path, n_samples, rate=16000, seed=0, stereo=False, kind="int16"):
    rng = np.random.default_rng(seed)
    shape = (n_samples, 2) if stereo else (n_samples,)
    x = 0.1 * rng.standard_normal(shape)
    if kind == "int16":
        wavfile.write(path, rate, (x * 32767).astype(np.int16))
    else:
        wavfile.write(path, rate, x.astype(np.float32))
    return path


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """16 usable clips (2 per class per session, one labeled 'excitement') plus junk rows."""
    root = tmp_path_factory.mktemp("corpus")
    items = []
    labels = ["anger", "happiness", "sadness", "neutral"]
    seed = 0
    for session in (1, 2):
        for label in labels:
            for n in range(2):
                uid = f"s{session}_{label}_{n}"
                raw = "excitement" if (label, n) == ("happiness", 0) else label
                write_wav(root / f"{uid}.wav", 3200, seed=seed)
                items.append(AudioItem(uid, root / f"{uid}.wav", raw, session, f"spk{session}{'ab'[n]}"))
                seed += 1
    items.append(AudioItem("junk_discard", write_wav(root / "d.wav", 3200, seed=90), "frustration", 1, "spk1a"))
    items.append(AudioItem("junk_missing", root / "nope.wav", "anger", 1, "spk1a"))
    garbage = root / "garbage.wav"
    garbage.write_bytes(b"this is not audio")
    items.append(AudioItem("junk_garbage", garbage, "anger", 1, "spk1a"))
    items.append(AudioItem("junk_long", write_wav(root / "l.wav", 8000, seed=91), "anger", 1, "spk1a"))
    items.append(AudioItem("junk_short", write_wav(root / "s.wav", 30, seed=92), "anger", 1, "spk1a"))

    csv_path = root / "items.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "path", "label", "session", "speaker"])
        for it in items:
            writer.writerow([it.id, it.path.name, it.label, it.session, it.speaker])
    return {"root": root, "items": items, "csv": csv_path, "n_good": 16}


@pytest.fixture(scope="session")
def exported(corpus, tiny_model_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("exported")
    job = ExportJob(items=list(corpus["items"]), model=str(tiny_model_dir),
                    out_dir=out, max_seconds=0.3)
    manifest_path = export(job)
    return {"job": job, "manifest": manifest_path, "out": out}
