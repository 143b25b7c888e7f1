import numpy as np
import pytest


def direct_dft(x):
    """O(N^2) summation; the oracle every fast transform is checked against."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def welch_psd(x, seg=256):
    """Averaged periodogram with 50% overlap and a Hann window, scaled so a
    white series of variance s2 gives a flat s2."""
    win = np.hanning(seg)
    scale = np.sum(win ** 2)
    step = seg // 2
    out = []
    for start in range(0, x.size - seg + 1, step):
        s = x[start:start + seg]
        s = (s - s.mean()) * win
        out.append(np.abs(np.fft.fft(s)) ** 2 / scale)
    return np.mean(out, axis=0)


def normalized_l2(a, b):
    a = np.asarray(a) / np.mean(a)
    b = np.asarray(b) / np.mean(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
