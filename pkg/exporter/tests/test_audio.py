import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.io import wavfile

from lsf_export import load_wav, seconds
from conftest import write_wav


def test_int16_wav_loads_as_unit_scale_float32(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.9, 0.9, 400)
    wavfile.write(tmp_path / "a.wav", 16000, (x * 32767).astype(np.int16))
    got = load_wav(tmp_path / "a.wav")
    assert got.dtype == np.float32 and got.shape == (400,)
    assert_allclose(got, x, atol=1e-3)


def test_float32_wav_passes_through(tmp_path):
    x = np.linspace(-0.9, 0.9, 256, dtype=np.float32)
    wavfile.write(tmp_path / "f.wav", 16000, x)
    assert_allclose(load_wav(tmp_path / "f.wav"), x, atol=0)


def test_stereo_averages_to_mono(tmp_path):
    left = np.full(100, 0.25, dtype=np.float32)
    wavfile.write(tmp_path / "st.wav", 16000, np.stack([left, -left], axis=1))
    assert_allclose(load_wav(tmp_path / "st.wav"), np.zeros(100), atol=1e-7)


def test_8k_input_resampled_to_double_length(tmp_path):
    write_wav(tmp_path / "low.wav", 1600, rate=8000)
    got = load_wav(tmp_path / "low.wav")
    assert got.shape == (3200,)
    assert seconds(got) == pytest.approx(0.2)


def test_unreadable_file_raises(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"definitely not RIFF data")
    with pytest.raises((ValueError, OSError)):
        load_wav(bad)


def test_empty_audio_rejected(tmp_path):
    wavfile.write(tmp_path / "e.wav", 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(ValueError, match="empty"):
        load_wav(tmp_path / "e.wav")
