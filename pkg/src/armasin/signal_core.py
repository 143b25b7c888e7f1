"""Series and spectrum types, DFT machinery, line-spectrum detection and
sinusoid estimation from DFT bins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InvalidBinError, InvalidInputError

DEFAULT_PEAK_FACTOR = 8.0


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Series:
    """Uniformly sampled real sequence.

    ``sampling_period`` is the time step Ts in seconds; sample ``n`` sits at
    ``t = Ts * n``.
    """

    values: np.ndarray
    sampling_period: float = 1.0

    def __post_init__(self):
        vals = _frozen(self.values, np.float64)
        if vals.size < 1:
            raise InvalidInputError("series must contain at least one sample")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("series values must be finite")
        ts = float(self.sampling_period)
        if not (ts > 0 and math.isfinite(ts)):
            raise InvalidInputError(f"sampling period must be positive, got {self.sampling_period!r}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "sampling_period", ts)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return self.sampling_period == other.sampling_period and np.array_equal(self.values, other.values)

    __hash__ = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.sampling_period

    def with_values(self, values) -> "Series":
        return Series(values, self.sampling_period)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT bins of a series; bin ``k`` sits at digital frequency ``2*pi*k/N``."""

    bins: np.ndarray
    origin_length: int = field(default=-1)
    sampling_period: float = 1.0

    def __post_init__(self):
        bins = _frozen(self.bins, np.complex128)
        if bins.size < 1:
            raise InvalidInputError("spectrum must contain at least one bin")
        n = bins.size if self.origin_length == -1 else int(self.origin_length)
        if n != bins.size:
            raise InvalidInputError("origin_length must equal the number of bins")
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "origin_length", n)

    def __len__(self) -> int:
        return self.origin_length

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.origin_length) / self.origin_length

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def phase(self) -> np.ndarray:
        return np.array([_principal_angle(c) for c in self.bins])


@dataclass(frozen=True)
class SinusoidComponent:
    """``amplitude * cos(frequency * n + phase)`` with frequency in rad/sample."""

    amplitude: float
    frequency: float
    phase: float

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise InvalidInputError("amplitude must be nonnegative")
        if not 0.0 <= self.frequency <= math.pi:
            raise InvalidInputError("frequency must lie in [0, pi]")

    def physical_frequency(self, sampling_period: float) -> float:
        """Angular frequency in rad/s for display: w / Ts."""
        return self.frequency / sampling_period


def _principal_angle(z: complex) -> float:
    ang = math.atan2(z.imag, z.real)
    return math.pi if ang <= -math.pi else ang


def _as_values(x) -> np.ndarray:
    if isinstance(x, Series):
        return x.values
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    k = np.arange(n, dtype=np.int64)
    # n^2 mod 2N keeps the chirp argument small and exact
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    m = 1 << (2 * n - 2).bit_length()
    a = np.zeros(m, dtype=np.complex128)
    a[:n] = x * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])
    conv = _kernels.fft_pow2(_kernels.fft_pow2(a) * _kernels.fft_pow2(b), inverse=True) / m
    return chirp * conv[:n]


def fft(x) -> np.ndarray:
    """Forward DFT of any length: radix-2 when possible, chirp-z otherwise."""
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    n = x.shape[0]
    if n == 0:
        raise InvalidInputError("cannot transform an empty sequence")
    if n == 1:
        return x.copy()
    if _is_pow2(n):
        return _kernels.fft_pow2(x)
    return _bluestein(x)


def ifft(bins) -> np.ndarray:
    bins = np.asarray(bins, dtype=np.complex128).reshape(-1)
    if bins.shape[0] == 0:
        raise InvalidInputError("cannot invert an empty spectrum")
    return np.conj(fft(np.conj(bins))) / bins.shape[0]


def dft(series: Series) -> Spectrum:
    if not isinstance(series, Series):
        series = Series(series)
    return Spectrum(fft(series.values), len(series), series.sampling_period)


def idft(spectrum: Spectrum) -> Series:
    """Inverse DFT; the imaginary residue of a real-signal spectrum is dropped."""
    if not isinstance(spectrum, Spectrum):
        spectrum = Spectrum(spectrum)
    return Series(ifft(spectrum.bins).real, spectrum.sampling_period)


def dtft_eval(series, w: float) -> complex:
    """Evaluate sum_n x(n) exp(-j w n) for a finite series."""
    x = _as_values(series)
    n = np.arange(x.shape[0])
    # reduce w first so the result is exactly 2*pi periodic up to rounding
    w = math.remainder(float(w), 2.0 * math.pi)
    return complex(np.sum(x * np.exp(-1j * w * n)))


# ---------------------------------------------------------------------------
# Line spectra
# ---------------------------------------------------------------------------

def detect_line_spectra(spectrum: Spectrum, threshold_factor: float = DEFAULT_PEAK_FACTOR) -> list[int]:
    """Bins in ``[1, N/2]`` that stand out from the continuous spectral floor.

    A bin qualifies when its magnitude exceeds ``threshold_factor`` times the
    median magnitude over ``[1, N/2]``.  Each run of adjacent qualifying bins
    contributes its largest member, provided that member is a strict local
    maximum.  Indices come back ordered by descending magnitude.
    """
    if not isinstance(spectrum, Spectrum):
        spectrum = Spectrum(spectrum)
    n = spectrum.origin_length
    if n < 4:
        raise InvalidInputError("peak detection needs at least 4 bins")
    if not threshold_factor > 1:
        raise InvalidInputError("threshold_factor must exceed 1")
    mag = spectrum.magnitude
    half = n // 2
    band = mag[1:half + 1]
    level = threshold_factor * float(np.median(band))
    above = band > level
    peaks: list[int] = []
    k = 0
    while k < band.size:
        if not above[k]:
            k += 1
            continue
        start = k
        while k < band.size and above[k]:
            k += 1
        best = start + int(np.argmax(band[start:k])) + 1  # back to bin index
        left, right = mag[best - 1], mag[(best + 1) % n]
        if mag[best] > left and mag[best] > right:
            peaks.append(best)
    peaks.sort(key=lambda b: (-mag[b], b))
    return peaks


def estimate_sinusoid(series, bin: int) -> SinusoidComponent:
    """Read amplitude, frequency and phase of a cosine off one DFT bin.

    ``w = 2*pi*bin/N``, ``A = 2*|X[bin]|/N`` and ``phase = arg X[bin]``.  At
    the Nyquist bin of an even-length series the cosine is its own mirror, so
    the amplitude is ``|X[bin]|/N`` there.
    """
    if not isinstance(series, Series):
        series = Series(series)
    n = len(series)
    bin = int(bin)
    if bin < 1 or bin > n // 2:
        raise InvalidBinError(f"bin {bin} outside [1, {n // 2}]")
    xk = complex(fft(series.values)[bin])
    if 2 * bin == n:
        amp = abs(xk) / n
    else:
        amp = 2.0 * abs(xk) / n
    return SinusoidComponent(amp, 2.0 * math.pi * bin / n, _principal_angle(xk))


def _cosine_fit(x: np.ndarray, n_idx: np.ndarray, w: float):
    """Least-squares ``c + a cos(wn) + b sin(wn)``; returns (rss, a, b)."""
    X = np.column_stack([np.ones_like(n_idx), np.cos(w * n_idx), np.sin(w * n_idx)])
    coef, *_ = np.linalg.lstsq(X, x, rcond=None)
    r = x - X @ coef
    return float(r @ r), coef[1], coef[2]


def refine_sinusoid(series, bin: int, oversample: int = 16) -> SinusoidComponent:
    """Least-squares cosine fit with the frequency searched within one bin of
    ``bin``.

    The integer-bin reading of :func:`estimate_sinusoid` is biased for
    off-bin frequencies (leakage, plus the mirror lobe on short records).
    Here ``w`` minimises the residual of ``c + A cos(wn + phase)``: a grid of
    ``2*oversample + 1`` points, then golden-section search.  Exact on a
    noiseless sinusoid, the maximum-likelihood estimate under white noise.
    """
    if not isinstance(series, Series):
        series = Series(series)
    n = len(series)
    bin = int(bin)
    if bin < 1 or bin > n // 2:
        raise InvalidBinError(f"bin {bin} outside [1, {n // 2}]")
    if oversample < 1:
        raise InvalidInputError("oversample must be at least 1")
    x = series.values
    idx = np.arange(n, dtype=np.float64)
    step = 2.0 * math.pi / n
    lo = max(step * (bin - 1), 1e-9)
    hi = min(step * (bin + 1), math.pi)
    grid = np.linspace(lo, hi, 2 * oversample + 1)
    rss = [_cosine_fit(x, idx, w)[0] for w in grid]
    j = int(np.argmin(rss))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = _cosine_fit(x, idx, c)[0], _cosine_fit(x, idx, d)[0]
    while b - a > 1e-12:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = _cosine_fit(x, idx, c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = _cosine_fit(x, idx, d)[0]
    w = 0.5 * (a + b)
    _, ca, cb = _cosine_fit(x, idx, w)
    # a cos + b sin = A cos(wn + phase) with A e^{j phase} = a - j b
    z = complex(ca, -cb)
    return SinusoidComponent(abs(z), float(min(w, math.pi)), _principal_angle(z))


def extrapolate_sinusoids(
    components: Sequence[SinusoidComponent],
    start: int,
    horizon: int,
    sampling_period: float = 1.0,
) -> Series:
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    n = np.arange(start, start + horizon, dtype=np.float64)
    out = np.zeros(horizon)
    for c in components:
        out += c.amplitude * np.cos(c.frequency * n + c.phase)
    return Series(out, sampling_period)
