"""WAV loading: mono float32 at the 16 kHz the upstream models expect."""

import math

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

TARGET_RATE = 16000

# full-scale divisors for integer PCM
_INT_SCALE = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def load_wav(path) -> np.ndarray:
    """Read a WAV file and return mono float32 samples at 16 kHz."""
    rate, data = wavfile.read(path)
    if data.size == 0:
        raise ValueError(f"{path}: empty audio")
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in _INT_SCALE:
        data = data.astype(np.float64) / _INT_SCALE[data.dtype]
    else:
        data = data.astype(np.float64)
    if rate != TARGET_RATE:
        if rate <= 0:
            raise ValueError(f"{path}: bad sample rate {rate}")
        g = math.gcd(int(rate), TARGET_RATE)
        data = resample_poly(data, TARGET_RATE // g, int(rate) // g)
    return data.astype(np.float32)


def seconds(samples: np.ndarray) -> float:
    return samples.shape[0] / TARGET_RATE
