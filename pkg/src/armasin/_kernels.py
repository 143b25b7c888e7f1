"""Hot numeric loops: IIR recursion and radix-2 FFT.

Each kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature.  The numba path is used when numba imports cleanly and the
environment variable ``ARMASIN_DISABLE_NUMBA`` is unset (or ``0``); set it to
``1`` to force the numpy path.  ``benchmarks/bench_kernels.py`` times both.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ARMASIN_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by ARMASIN_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# Direct-form IIR recursion, a[0] == 1 assumed by every caller.
# ---------------------------------------------------------------------------

def lfilter_numpy(b: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    # FIR part in one shot, only the feedback needs the sample loop
    v = np.convolve(b, x)[:n]
    p = a.shape[0] - 1
    if p == 0:
        return v.copy()
    fb = a[1:]
    y = np.zeros(n)
    hist = np.zeros(p)  # hist[i] = y[k-1-i]
    for k in range(n):
        yk = v[k] - fb @ hist
        y[k] = yk
        hist[1:] = hist[:-1]
        hist[0] = yk
    return y


def _lfilter_py(b, a, x):
    n = x.shape[0]
    nb = b.shape[0]
    na = a.shape[0]
    y = np.zeros(n)
    for k in range(n):
        acc = 0.0
        top = min(nb, k + 1)
        for i in range(top):
            acc += b[i] * x[k - i]
        top = min(na, k + 1)
        for i in range(1, top):
            acc -= a[i] * y[k - i]
        y[k] = acc
    return y


# ---------------------------------------------------------------------------
# Iterative radix-2 FFT (decimation in time), len(x) must be a power of two.
# ---------------------------------------------------------------------------

def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx = idx >> 1
    return rev


def fft_pow2_numpy(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    n = x.shape[0]
    out = np.asarray(x, dtype=np.complex128)[_bit_reverse_indices(n)]
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(n // size, size)
        top = blocks[:, :half]
        bot = blocks[:, half:] * tw
        out = np.concatenate((top + bot, top - bot), axis=1).reshape(n)
        size *= 2
    return out


def _fft_pow2_py(x, inverse):
    n = x.shape[0]
    out = x.astype(np.complex128)
    # in-place bit reversal
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            tmp = out[i]
            out[i] = out[j]
            out[j] = tmp
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        for m in range(half):
            ang = sign * 2.0 * np.pi * m / size
            tw = complex(np.cos(ang), np.sin(ang))
            for start in range(0, n, size):
                u = out[start + m]
                v = out[start + m + half] * tw
                out[start + m] = u + v
                out[start + m + half] = u - v
        size *= 2
    return out


if HAVE_NUMBA:
    lfilter_numba = njit(cache=True)(_lfilter_py)
    fft_pow2_numba = njit(cache=True)(_fft_pow2_py)
else:  # pragma: no cover - exercised only without numba
    lfilter_numba = None
    fft_pow2_numba = None


def lfilter(b: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Zero-initial-condition difference equation with ``a[0] == 1``."""
    b = np.ascontiguousarray(b, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return lfilter_numba(b, a, x)
    return lfilter_numpy(b, a, x)


def fft_pow2(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unnormalised radix-2 transform; ``inverse`` flips the twiddle sign."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if USE_NUMBA:
        return fft_pow2_numba(x, inverse)
    return fft_pow2_numpy(x, inverse)
