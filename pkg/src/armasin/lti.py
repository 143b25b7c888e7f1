"""Rational discrete LTI systems in z^-1 and the operators built from them.

A system is stored as ``b`` (input side) and ``a`` (output side) of

    a[0] y[k] + a[1] y[k-1] + ... + a[p] y[k-p] = b[0] x[k] + ... + b[q] x[k-q]

normalised at construction so that ``a[0] == 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .errors import InvalidInputError, PoleOnCircleError
from .signal_core import Series

MARGINAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TransferFunction:
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        if a.size == 0 or a[0] == 0:
            raise InvalidInputError("a[0] must be nonzero")
        if b.size == 0 or not np.any(b != 0):
            raise InvalidInputError("numerator must have a nonzero coefficient")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidInputError("coefficients must be finite")
        a0 = a[0]
        b = b / a0
        a = a / a0
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    def __eq__(self, other):
        if not isinstance(other, TransferFunction):
            return NotImplemented
        return np.array_equal(self.b, other.b) and np.array_equal(self.a, other.a)

    __hash__ = None

    def __repr__(self):
        return f"TransferFunction(b={self.b.tolist()}, a={self.a.tolist()})"

    @property
    def is_fir(self) -> bool:
        return not np.any(self.a[1:] != 0)

    def to_dict(self) -> dict:
        return {"b": self.b.tolist(), "a": self.a.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        try:
            return cls(d["b"], d["a"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"filter object needs 'b' and 'a' arrays: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TransferFunction":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed filter JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise InvalidInputError("filter JSON must be an object")
        return cls.from_dict(d)


@dataclass(frozen=True)
class StabilityReport:
    pole_moduli: tuple
    zero_moduli: tuple
    stable: bool
    invertible: bool
    marginal: bool = False

    def to_dict(self) -> dict:
        return {
            "pole_moduli": list(self.pole_moduli),
            "zero_moduli": list(self.zero_moduli),
            "stable": self.stable,
            "invertible": self.invertible,
            "marginal": self.marginal,
        }


def _values(x) -> tuple[np.ndarray, float]:
    if isinstance(x, Series):
        return x.values, x.sampling_period
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise InvalidInputError("input series is empty")
    return x, 1.0


def apply(tf: TransferFunction, x) -> Series:
    """Run the difference equation over ``x`` from zero initial conditions."""
    vals, ts = _values(x)
    return Series(_kernels.lfilter(tf.b, tf.a, vals), ts)


def impulse_response(tf: TransferFunction, length: int) -> Series:
    if length < 1:
        raise InvalidInputError("length must be at least 1")
    delta = np.zeros(int(length))
    delta[0] = 1.0
    return apply(tf, delta)


def _poly_z_inv(coeffs: np.ndarray, w):
    # sum_k c_k e^{-jwk}
    k = np.arange(coeffs.size)
    return np.exp(-1j * np.multiply.outer(w, k)) @ coeffs


def freq_response(tf: TransferFunction, w: Union[float, np.ndarray]):
    """H(e^{jw}); scalar in, complex out, array in, complex array out."""
    scalar = np.ndim(w) == 0
    ww = np.atleast_1d(np.asarray(w, dtype=np.float64))
    num = _poly_z_inv(tf.b, ww)
    den = _poly_z_inv(tf.a, ww)
    tiny = 1e-14 * float(np.sum(np.abs(tf.a)))
    bad = np.abs(den) <= tiny
    if np.any(bad):
        raise PoleOnCircleError(float(ww[np.argmax(bad)]))
    h = num / den
    return complex(h[0]) if scalar else h


def amplitude_response(tf: TransferFunction, w):
    return np.abs(freq_response(tf, w))


def cascade(tf1: TransferFunction, tf2: TransferFunction) -> TransferFunction:
    return TransferFunction(np.convolve(tf1.b, tf2.b), np.convolve(tf1.a, tf2.a))


def _roots(coeffs: np.ndarray) -> np.ndarray:
    # coefficients in z^-1 are, read left to right, the z-polynomial from
    # its highest power down; numpy.roots builds the companion matrix
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        raise InvalidInputError("polynomial is identically zero")
    trimmed = coeffs[nz[0]:]
    return np.roots(trimmed)


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots in z of ``c0 + c1 z^-1 + ... + cp z^-p``."""
    return _roots(np.asarray(coeffs, dtype=np.float64).reshape(-1))


def stability(tf: TransferFunction) -> StabilityReport:
    poles = np.sort(np.abs(_roots(tf.a)))
    zeros = np.sort(np.abs(_roots(tf.b)))
    marginal = bool(np.any(np.abs(poles - 1.0) <= MARGINAL_TOL))
    stable = bool(np.all(poles < 1.0 - MARGINAL_TOL))
    invertible = bool(np.all(zeros < 1.0 - MARGINAL_TOL))
    return StabilityReport(tuple(poles.tolist()), tuple(zeros.tolist()), stable, invertible, marginal)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def identity() -> TransferFunction:
    return TransferFunction([1.0], [1.0])


def difference_operator(d: int) -> TransferFunction:
    """(1 - z^-1)^d."""
    if d < 1:
        raise InvalidInputError("difference order must be positive")
    b = np.array([1.0])
    for _ in range(int(d)):
        b = np.convolve(b, [1.0, -1.0])
    return TransferFunction(b, [1.0])


def seasonal_difference(lag: int) -> TransferFunction:
    """1 - z^-L."""
    if lag < 1:
        raise InvalidInputError("seasonal lag must be at least 1")
    b = np.zeros(int(lag) + 1)
    b[0], b[-1] = 1.0, -1.0
    return TransferFunction(b, [1.0])


def ets(alpha: float) -> TransferFunction:
    """Simple exponential smoothing y[n] = alpha x[n] + (1 - alpha) y[n-1]."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidInputError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        return identity()
    return TransferFunction([alpha], [1.0, -(1.0 - alpha)])


def moving_average(window: int) -> TransferFunction:
    """Trailing mean over ``window`` samples, realised as FIR."""
    if window < 1:
        raise InvalidInputError("window must be at least 1")
    return TransferFunction(np.full(int(window), 1.0 / window), [1.0])


def _comb_check(rho: float, lag: int):
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError("rho must lie in [0, 1)")
    if lag < 1:
        raise InvalidInputError("comb lag must be at least 1")


def comb_notch(rho: float, lag: int) -> TransferFunction:
    """(1+rho)/2 * (1 - z^-N) / (1 - rho z^-N): notches at w = 2*pi*k/N."""
    _comb_check(rho, lag)
    g = (1.0 + rho) / 2.0
    b = np.zeros(lag + 1)
    a = np.zeros(lag + 1)
    b[0], b[-1] = g, -g
    a[0], a[-1] = 1.0, -rho
    return TransferFunction(b, a)


def comb_peak(rho: float, lag: int) -> TransferFunction:
    """(1-rho)/2 * (1 + z^-N) / (1 - rho z^-N): unit peaks at w = 2*pi*k/N."""
    _comb_check(rho, lag)
    g = (1.0 - rho) / 2.0
    b = np.zeros(lag + 1)
    a = np.zeros(lag + 1)
    b[0], b[-1] = g, g
    a[0], a[-1] = 1.0, -rho
    return TransferFunction(b, a)


def slowest_time_constant(tf: TransferFunction) -> float:
    """Samples for the slowest pole to decay by e; inf for marginal systems."""
    rep = stability(tf)
    if not rep.pole_moduli:
        return 0.0
    r = max(rep.pole_moduli)
    if r == 0.0:
        return 0.0
    if r >= 1.0:
        return math.inf
    return -1.0 / math.log(r)
