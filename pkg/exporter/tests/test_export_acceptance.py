"""Acceptance gate for the exporter: the contracts the trainer relies on."""

import numpy as np

import corrpool
from lsf_export import MODEL_REGISTRY, ExportJob, export


def test_exported_files_load_in_the_trainer(exported):
    manifest = corrpool.load_manifest(exported["manifest"])
    features = corrpool.load_features(manifest)
    assert len(features) == 16
    assert all(np.all(np.isfinite(stack)) for stack in features.values())


def test_layer_count_is_transformer_layers_plus_one(exported, tiny_model_dir):
    from transformers import AutoConfig

    expected = AutoConfig.from_pretrained(tiny_model_dir).num_hidden_layers + 1
    for record in corrpool.load_manifest(exported["manifest"]).records:
        n_layers, _, _ = corrpool.read_header(exported["out"] / record.path)
        assert n_layers == expected


def test_registry_models_use_published_hidden_sizes():
    for name, (_, d, _) in MODEL_REGISTRY.items():
        assert d in (768, 1024)
        assert d == (768 if name.endswith("base") else 1024)


def test_repeated_export_is_byte_identical(exported, corpus, tiny_model_dir, tmp_path):
    out = tmp_path / "repeat"
    export(ExportJob(items=list(corpus["items"]), model=str(tiny_model_dir),
                     out_dir=out, max_seconds=0.3))
    first = {p.name: p.read_bytes() for p in exported["out"].iterdir()}
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second
