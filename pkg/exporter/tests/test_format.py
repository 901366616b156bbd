"""The writer must stay byte-compatible with the trainer's feature container."""

import numpy as np
import pytest

import corrpool
from lsf_export import ExportError, InputError, read_feature_file, write_feature_file


def random_stack(seed, shape=(3, 17, 8)):
    return np.random.default_rng(seed).standard_normal(shape).astype(np.float32)


def test_round_trip_is_bitwise(tmp_path):
    for seed in range(10):
        stack = random_stack(seed, (1 + seed % 4, 1 + seed, 2 + seed % 7))
        path = tmp_path / f"{seed}.lsf"
        write_feature_file(path, stack)
        back = read_feature_file(path)
        assert back.tobytes() == stack.tobytes()


def test_bytes_match_the_trainer_writer(tmp_path):
    stack = random_stack(3)
    ours = tmp_path / "ours.lsf"
    theirs = tmp_path / "theirs.lsf"
    write_feature_file(ours, stack)
    corrpool.write_feature_file(theirs, stack)
    assert ours.read_bytes() == theirs.read_bytes()


def test_trainer_reader_accepts_our_files(tmp_path):
    stack = random_stack(4)
    path = tmp_path / "x.lsf"
    write_feature_file(path, stack)
    loaded = corrpool.load_feature_file(path)
    assert loaded.dtype == np.float32
    assert np.array_equal(loaded, stack)


def test_writer_rejects_bad_stacks(tmp_path):
    with pytest.raises(InputError):
        write_feature_file(tmp_path / "a.lsf", np.zeros((4, 5), dtype=np.float32))
    with pytest.raises(InputError):
        write_feature_file(tmp_path / "b.lsf", np.zeros((1, 0, 5), dtype=np.float32))
    nan = np.zeros((1, 2, 2), dtype=np.float32)
    nan[0, 1, 1] = np.nan
    with pytest.raises(InputError):
        write_feature_file(tmp_path / "c.lsf", nan)


def test_reader_rejects_corruption(tmp_path):
    path = tmp_path / "ok.lsf"
    write_feature_file(path, random_stack(5))
    raw = path.read_bytes()
    bad = tmp_path / "bad.lsf"
    bad.write_bytes(b"WHAT" + raw[4:])
    with pytest.raises(ExportError, match="magic"):
        read_feature_file(bad)
    bad.write_bytes(raw[:-3])
    with pytest.raises(ExportError, match="truncated"):
        read_feature_file(bad)
