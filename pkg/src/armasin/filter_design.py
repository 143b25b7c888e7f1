"""Elliptic IIR design and zero-phase (forward-backward) filtering.

Frequencies in a :class:`FilterSpec` are fractions of Nyquist, so an edge of
0.25 is the digital frequency 0.25*pi rad/sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _landen
from .errors import DesignFailureError, InvalidInputError, InvalidSpecError, UnstableSystemError
from .lti import TransferFunction, apply, freq_response, stability
from .signal_core import Series

BANDS = ("lowpass", "highpass", "bandpass", "bandstop")
MIN_TRANSITION = 1e-6
MAX_ORDER = 40


def _edges(value) -> tuple:
    if np.ndim(value) == 0:
        return (float(value),)
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class FilterSpec:
    band: str
    passband_edges: tuple
    stopband_edges: tuple
    passband_ripple_db: float
    stopband_attenuation_db: float

    def __post_init__(self):
        object.__setattr__(self, "passband_edges", _edges(self.passband_edges))
        object.__setattr__(self, "stopband_edges", _edges(self.stopband_edges))
        object.__setattr__(self, "passband_ripple_db", float(self.passband_ripple_db))
        object.__setattr__(self, "stopband_attenuation_db", float(self.stopband_attenuation_db))
        self._validate()

    def _validate(self):
        if self.band not in BANDS:
            raise InvalidSpecError(f"band must be one of {BANDS}, got {self.band!r}")
        wp, ws = self.passband_edges, self.stopband_edges
        need = 1 if self.band in ("lowpass", "highpass") else 2
        if len(wp) != need or len(ws) != need:
            raise InvalidSpecError(f"{self.band} needs {need} passband and {need} stopband edge(s)")
        for e in wp + ws:
            if not 0.0 < e < 1.0:
                raise InvalidSpecError(f"edge {e} outside (0, 1)")
        rp, rs = self.passband_ripple_db, self.stopband_attenuation_db
        if not (rp > 0 and rs > 0):
            raise InvalidSpecError("ripple and attenuation must be positive")
        if not rp < rs:
            raise InvalidSpecError("passband ripple must be smaller than stopband attenuation")
        if self.band == "lowpass":
            ok = wp[0] < ws[0]
        elif self.band == "highpass":
            ok = ws[0] < wp[0]
        elif self.band == "bandpass":
            ok = ws[0] < wp[0] < wp[1] < ws[1]
        else:
            ok = wp[0] < ws[0] < ws[1] < wp[1]
        if not ok:
            raise InvalidSpecError(f"edges inverted or overlapping for {self.band}: pass={wp} stop={ws}")

    @property
    def transition_width(self) -> float:
        pairs = zip(sorted(self.passband_edges), sorted(self.stopband_edges))
        return min(abs(p - s) for p, s in pairs)

    def in_passband(self, f: np.ndarray) -> np.ndarray:
        wp = self.passband_edges
        if self.band == "lowpass":
            return f <= wp[0]
        if self.band == "highpass":
            return f >= wp[0]
        if self.band == "bandpass":
            return (f >= wp[0]) & (f <= wp[1])
        return (f <= wp[0]) | (f >= wp[1])

    def in_stopband(self, f: np.ndarray) -> np.ndarray:
        ws = self.stopband_edges
        if self.band == "lowpass":
            return f >= ws[0]
        if self.band == "highpass":
            return f <= ws[0]
        if self.band == "bandpass":
            return (f <= ws[0]) | (f >= ws[1])
        return (f >= ws[0]) & (f <= ws[1])

    def to_dict(self) -> dict:
        return {
            "band": self.band,
            "passband_edges": list(self.passband_edges),
            "stopband_edges": list(self.stopband_edges),
            "passband_ripple_db": self.passband_ripple_db,
            "stopband_attenuation_db": self.stopband_attenuation_db,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        try:
            return cls(
                d["band"],
                d["passband_edges"],
                d["stopband_edges"],
                d["passband_ripple_db"],
                d["stopband_attenuation_db"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"malformed filter spec: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "FilterSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpecError(f"malformed spec JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise InvalidSpecError("spec JSON must be an object")
        return cls.from_dict(d)


class MinOrder(NamedTuple):
    order: int
    critical_edges: tuple  # passband edges the design is pinned to


def _warp(f) -> np.ndarray:
    # bilinear map s = (z - 1)/(z + 1) sends w = pi*f to Omega = tan(pi*f/2)
    return np.tan(np.pi * np.asarray(f, dtype=np.float64) / 2.0)


def _prototype_stop_edge(spec: FilterSpec) -> float:
    """Stopband edge of the equivalent lowpass prototype (passband edge 1)."""
    wp = _warp(spec.passband_edges)
    ws = _warp(spec.stopband_edges)
    if spec.band == "lowpass":
        return float(ws[0] / wp[0])
    if spec.band == "highpass":
        return float(wp[0] / ws[0])
    w0sq = wp[0] * wp[1]
    bw = wp[1] - wp[0]
    if spec.band == "bandpass":
        mapped = np.abs((ws * ws - w0sq) / (bw * ws))
    else:
        mapped = np.abs(bw * ws / (w0sq - ws * ws))
    return float(np.min(mapped))


def ellip_min_order(spec: FilterSpec) -> MinOrder:
    """Smallest elliptic order meeting ``spec``.

    Uses the degree equation N >= K(k) K'(k1) / (K'(k) K(k1)) with
    selectivity k (prototype passband/stopband ratio) and discrimination
    k1 = sqrt((10^(Rp/10) - 1) / (10^(Rs/10) - 1)).
    """
    if spec.transition_width < MIN_TRANSITION:
        raise DesignFailureError(f"transition band narrower than {MIN_TRANSITION}")
    k = 1.0 / _prototype_stop_edge(spec)
    ep2 = 10.0 ** (spec.passband_ripple_db / 10.0) - 1.0
    es2 = 10.0 ** (spec.stopband_attenuation_db / 10.0) - 1.0
    k1 = math.sqrt(ep2 / es2)
    if not (0.0 < k < 1.0):
        raise DesignFailureError(f"degenerate selectivity {k}")
    ratio = _landen.degree_ratio(k, k1)
    order = max(1, math.ceil(ratio - 1e-9))
    return MinOrder(order, spec.passband_edges)


# ---------------------------------------------------------------------------
# Analog frequency transformations on zeros/poles/gain, then bilinear.
# ---------------------------------------------------------------------------

def _lp2lp(z, p, k, w0):
    deg = len(p) - len(z)
    return z * w0, p * w0, k * w0 ** deg


def _lp2hp(z, p, k, w0):
    deg = len(p) - len(z)
    k = k * np.real(np.prod(-z) / np.prod(-p))
    return np.concatenate([w0 / z, np.zeros(deg)]), w0 / p, k


def _lp2bp(z, p, k, w0, bw):
    deg = len(p) - len(z)
    zl, pl = z * bw / 2.0, p * bw / 2.0
    zs = np.sqrt(zl * zl - w0 * w0 + 0j)
    ps = np.sqrt(pl * pl - w0 * w0 + 0j)
    zz = np.concatenate([zl + zs, zl - zs, np.zeros(deg)])
    pp = np.concatenate([pl + ps, pl - ps])
    return zz, pp, k * bw ** deg


def _lp2bs(z, p, k, w0, bw):
    deg = len(p) - len(z)
    k = k * np.real(np.prod(-z) / np.prod(-p))
    zh, ph = (bw / 2.0) / z, (bw / 2.0) / p
    zs = np.sqrt(zh * zh - w0 * w0 + 0j)
    ps = np.sqrt(ph * ph - w0 * w0 + 0j)
    extra = np.concatenate([np.full(deg, 1j * w0), np.full(deg, -1j * w0)])
    zz = np.concatenate([zh + zs, zh - zs, extra])
    pp = np.concatenate([ph + ps, ph - ps])
    return zz, pp, k


def _bilinear(z, p, k):
    deg = len(p) - len(z)
    k = k * np.real(np.prod(1.0 - z) / np.prod(1.0 - p))
    zd = np.concatenate([(1.0 + z) / (1.0 - z), -np.ones(deg)])
    pd = (1.0 + p) / (1.0 - p)
    return zd, pd, k


def design_elliptic(spec: FilterSpec, order: int | None = None) -> TransferFunction:
    """Elliptic IIR filter meeting ``spec`` at the minimum order.

    The passband edges are met exactly; the stopband overshoots the requested
    attenuation by whatever the integer order leaves over.
    """
    if order is None:
        order = ellip_min_order(spec).order
    elif spec.transition_width < MIN_TRANSITION:
        raise DesignFailureError(f"transition band narrower than {MIN_TRANSITION}")
    if order > MAX_ORDER:
        raise DesignFailureError(f"order {order} exceeds {MAX_ORDER}")
    z, p, k = _landen.elliptic_prototype(order, spec.passband_ripple_db, spec.stopband_attenuation_db)
    wp = _warp(spec.passband_edges)
    if spec.band == "lowpass":
        z, p, k = _lp2lp(z, p, k, wp[0])
    elif spec.band == "highpass":
        z, p, k = _lp2hp(z, p, k, wp[0])
    else:
        w0 = math.sqrt(wp[0] * wp[1])
        bw = wp[1] - wp[0]
        if spec.band == "bandpass":
            z, p, k = _lp2bp(z, p, k, w0, bw)
        else:
            z, p, k = _lp2bs(z, p, k, w0, bw)
    z, p, k = _bilinear(z, p, k)
    b = k * np.real(np.poly(z))
    a = np.real(np.poly(p))
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
        raise DesignFailureError("non-finite coefficients")
    return TransferFunction(b, a)


@dataclass(frozen=True)
class ComplianceReport:
    passband_max_db: float
    passband_min_db: float
    stopband_max_db: float
    ok: bool


def spec_compliance(tf: TransferFunction, spec: FilterSpec, grid: int = 1024, tol_db: float = 1e-6) -> ComplianceReport:
    """Check |H| in dB on ``grid`` points over [0, pi]: passband inside
    [-Rp, 0], stopband at or below -Rs."""
    f = np.linspace(0.0, 1.0, grid)
    mag = np.abs(freq_response(tf, np.pi * f))
    db = 20.0 * np.log10(np.maximum(mag, 1e-300))
    pb = db[spec.in_passband(f)]
    sb = db[spec.in_stopband(f)]
    pmax = float(pb.max()) if pb.size else -math.inf
    pmin = float(pb.min()) if pb.size else 0.0
    smax = float(sb.max()) if sb.size else -math.inf
    ok = pmax <= tol_db and pmin >= -spec.passband_ripple_db - tol_db and smax <= -spec.stopband_attenuation_db + tol_db
    return ComplianceReport(pmax, pmin, smax, ok)


def response_table(tf: TransferFunction, grid: int = 512) -> np.ndarray:
    """Rows of ``(w, magnitude_db, phase_rad)`` on ``grid`` points of [0, pi]."""
    if grid < 2:
        raise InvalidInputError("grid needs at least 2 points")
    w = np.linspace(0.0, np.pi, grid)
    h = freq_response(tf, w)
    db = 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
    return np.column_stack([w, db, np.angle(h)])


# ---------------------------------------------------------------------------
# Zero-phase filtering
# ---------------------------------------------------------------------------

def _odd_extend(x: np.ndarray, n: int) -> np.ndarray:
    left = 2.0 * x[0] - x[n:0:-1]
    right = 2.0 * x[-1] - x[-2:-n - 2:-1]
    return np.concatenate([left, x, right])


def zero_phase_filter(tf: TransferFunction, x, pad: bool = False) -> Series:
    """Filter, reverse, filter, reverse.

    The net response is |H(e^{jw})|^2 with no phase shift.  Both passes start
    from zero initial conditions.  ``pad=True`` first extends the signal at
    both ends by odd reflection (3 * filter length samples, at most len-1),
    which tames start-up transients on trending data.
    """
    rep = stability(tf)
    if not rep.stable:
        raise UnstableSystemError("zero-phase filtering needs a stable filter", rep)
    if isinstance(x, Series):
        vals, ts = x.values, x.sampling_period
    else:
        vals, ts = np.asarray(x, dtype=np.float64).reshape(-1), 1.0
        if vals.size == 0:
            raise InvalidInputError("input series is empty")
    n_pad = 0
    if pad and vals.size > 1:
        n_pad = min(3 * max(tf.a.size, tf.b.size), vals.size - 1)
        vals = _odd_extend(vals, n_pad)
    u = apply(tf, vals).values
    w = apply(tf, u[::-1]).values
    y = w[::-1]
    if n_pad:
        y = y[n_pad:-n_pad]
    return Series(y, ts)


def cascade_all(filters: Sequence[TransferFunction]) -> TransferFunction:
    from .lti import cascade, identity

    out = identity()
    for f in filters:
        out = cascade(out, f)
    return out
