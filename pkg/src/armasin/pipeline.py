"""ARMA-SIN end to end: find line spectra, filter them out with zero-phase
IIR filters, fit ARMA to what is left, forecast both parts and add them.

Also hosts the difference-operator baseline (ARIMA/SARIMA) and multi-band
decomposition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import arma as _arma
from .errors import ArmaSinError, InvalidInputError, PipelineError
from .filter_design import FilterSpec, cascade_all, design_elliptic, zero_phase_filter
from .lti import TransferFunction, apply, difference_operator, seasonal_difference
from .signal_core import (
    DEFAULT_PEAK_FACTOR,
    Series,
    SinusoidComponent,
    detect_line_spectra,
    dft,
    estimate_sinusoid,
    refine_sinusoid,
    extrapolate_sinusoids,
)

MODES = ("auto", "highpass", "bandstop", "sinusoid", "seasonal_difference", "difference")
PREDICTABLE = ("sinusoids", "polynomial", "none")
LOW_CUTOFF = 0.05  # fraction of Nyquist below which a peak counts as trend
MIN_LENGTH = 32
AUTO_ORDER_MAX = (4, 4)


@dataclass(frozen=True)
class RegularizationPlan:
    """How to split a series into a regular and a predictable part.

    ``mode``:
      * ``auto``: detect peaks; those below 5% of Nyquist get one highpass
        (trend), each interior peak gets its own bandstop;
      * ``highpass`` / ``bandstop``: apply the given elliptic specs;
      * ``sinusoid``: subtract the ``n_sinusoids`` strongest DFT sinusoids
        directly, no filter;
      * ``difference`` / ``seasonal_difference``: single-pass difference
        operators (the S-ARIMA route).

    ``predictable_forecast`` picks how the predictable part is extrapolated.
    ``poly_window`` (a fraction in (0, 1]) restricts the polynomial fit to the
    trailing part of the predictable series.  ``refine`` estimates each sinusoid
    by a least-squares fit with frequency free within one bin of the peak,
    instead of reading it straight off the integer bin.
    """

    mode: str = "auto"
    highpass: Optional[FilterSpec] = None
    bandstop: tuple = ()
    lag: int = 0
    d: int = 0
    peak_threshold_factor: float = DEFAULT_PEAK_FACTOR
    predictable_forecast: str = "polynomial"
    n_sinusoids: int = 1
    poly_degree: int = 1
    poly_window: float = 1.0
    pad: bool = False
    refine: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}")
        if self.predictable_forecast not in PREDICTABLE:
            raise InvalidInputError(f"predictable_forecast must be one of {PREDICTABLE}")
        if not 0 <= self.poly_degree <= 2:
            raise InvalidInputError("poly_degree must lie in [0, 2]")
        if not 0.0 < self.poly_window <= 1.0:
            raise InvalidInputError("poly_window must lie in (0, 1]")
        if not self.peak_threshold_factor > 1:
            raise InvalidInputError("peak_threshold_factor must exceed 1")
        if self.mode == "highpass" and self.highpass is None:
            raise InvalidInputError("highpass mode needs a FilterSpec")
        if self.mode == "bandstop" and not self.bandstop:
            raise InvalidInputError("bandstop mode needs at least one FilterSpec")
        if self.mode == "difference" and self.d < 1:
            raise InvalidInputError("difference mode needs d >= 1")
        if self.mode == "seasonal_difference" and self.lag < 1:
            raise InvalidInputError("seasonal_difference mode needs lag >= 1")
        if self.n_sinusoids < 1:
            raise InvalidInputError("n_sinusoids must be at least 1")
        object.__setattr__(self, "bandstop", tuple(self.bandstop))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "highpass": self.highpass.to_dict() if self.highpass else None,
            "bandstop": [s.to_dict() for s in self.bandstop],
            "lag": self.lag,
            "d": self.d,
            "peak_threshold_factor": self.peak_threshold_factor,
            "predictable_forecast": self.predictable_forecast,
            "n_sinusoids": self.n_sinusoids,
            "poly_degree": self.poly_degree,
            "poly_window": self.poly_window,
            "pad": self.pad,
            "refine": self.refine,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegularizationPlan":
        d = dict(d)
        hp = d.pop("highpass", None)
        bs = d.pop("bandstop", ())
        try:
            return cls(
                highpass=FilterSpec.from_dict(hp) if hp else None,
                bandstop=tuple(FilterSpec.from_dict(s) for s in bs),
                **d,
            )
        except TypeError as exc:
            raise InvalidInputError(f"unknown plan field: {exc}") from exc


@dataclass(frozen=True)
class Regularization:
    regular: Series
    predictable: Series
    components: tuple
    filters: tuple  # designed TransferFunctions, empty when none were used
    route: str  # the mode actually taken (auto resolves to something concrete)
    trend: bool = False  # predictable part holds a low-frequency trend


@dataclass(frozen=True)
class ForecastReport:
    regular_forecast: Series
    predictable_forecast: Series
    combined: Series
    regularized_history: Series
    fitted_model: _arma.ArmaModel
    detected_components: tuple = ()
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regular_forecast": self.regular_forecast.values.tolist(),
            "predictable_forecast": self.predictable_forecast.values.tolist(),
            "combined": self.combined.values.tolist(),
            "regularized_history": self.regularized_history.values.tolist(),
            "sampling_period": self.combined.sampling_period,
            "fitted_model": self.fitted_model.to_dict(),
            "detected_components": [
                {"amplitude": c.amplitude, "frequency": c.frequency, "phase": c.phase}
                for c in self.detected_components
            ],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def combined_csv(self) -> str:
        lines = ["step,value"]
        lines += [f"{i + 1},{v!r}" for i, v in enumerate(self.combined.values.tolist())]
        return "\n".join(lines) + "\n"


def _series(x) -> Series:
    return x if isinstance(x, Series) else Series(x)


# ---------------------------------------------------------------------------
# Regularisation
# ---------------------------------------------------------------------------

def _bin_to_fraction(k: int, n: int) -> float:
    return 2.0 * k / n


def _auto_highpass(stop_edge: float) -> FilterSpec:
    ws = max(LOW_CUTOFF, stop_edge)
    return FilterSpec("highpass", min(1.25 * ws, 0.95), ws, 1.0, 10.0)


def _auto_bandstop(k: int, n: int) -> Optional[FilterSpec]:
    f = _bin_to_fraction(k, n)
    step = 2.0 / n
    stop = (f - 0.5 * step, f + 0.5 * step)
    passb = (f - 1.5 * step, f + 1.5 * step)
    if passb[0] <= 0.0 or passb[1] >= 1.0:
        return None
    return FilterSpec("bandstop", passb, stop, 1.0, 20.0)


def _strongest_bin_in(spec: FilterSpec, mag: np.ndarray, n: int) -> Optional[int]:
    lo, hi = spec.passband_edges[0], spec.passband_edges[-1]
    ks = [k for k in range(1, n // 2 + 1) if lo <= _bin_to_fraction(k, n) <= hi]
    if not ks:
        return None
    return max(ks, key=lambda k: (mag[k], -k))


def regularize(x, plan: RegularizationPlan = RegularizationPlan()) -> Regularization:
    """Split ``x`` into regular + predictable parts according to ``plan``.

    ``predictable`` is always ``x - regular``.  In the difference modes the
    operator runs single-pass and no components are reported.
    """
    x = _series(x)
    n = len(x)
    if n < MIN_LENGTH:
        raise InvalidInputError(f"regularisation needs at least {MIN_LENGTH} samples")
    vals = x.values

    def done(regular, comps, filters, route, trend=False):
        reg = x.with_values(regular)
        return Regularization(reg, x.with_values(vals - regular), tuple(comps), tuple(filters), route, trend)

    if plan.mode == "difference":
        return done(apply(difference_operator(plan.d), x).values, [], [], "difference")
    if plan.mode == "seasonal_difference":
        tf = seasonal_difference(plan.lag)
        if plan.d:
            from .lti import cascade

            tf = cascade(difference_operator(plan.d), tf)
        return done(apply(tf, x).values, [], [], "seasonal_difference")

    centred = vals - vals.mean()
    est = refine_sinusoid if plan.refine else estimate_sinusoid
    spec = dft(centred)
    mag = spec.magnitude

    if plan.mode == "sinusoid":
        peaks = detect_line_spectra(spec, plan.peak_threshold_factor)[: plan.n_sinusoids]
        comps = [est(centred, k) for k in peaks]
        part = extrapolate_sinusoids(comps, 0, n).values
        return done(vals - part, comps, [], "sinusoid")

    if plan.mode == "highpass":
        tf = design_elliptic(plan.highpass)
        reg = zero_phase_filter(tf, x, pad=plan.pad).values
        return done(reg, [], [tf], "highpass", trend=True)

    if plan.mode == "bandstop":
        filters, comps = [], []
        for s in plan.bandstop:
            filters.append(design_elliptic(s))
            k = _strongest_bin_in(s, mag, n)
            if k is not None:
                comps.append(est(centred, k))
        reg = zero_phase_filter(cascade_all(filters), x, pad=plan.pad).values
        return done(reg, comps, filters, "bandstop")

    # auto
    peaks = detect_line_spectra(spec, plan.peak_threshold_factor)
    if not peaks:
        return done(vals.copy(), [], [], "passthrough")
    low = [k for k in peaks if _bin_to_fraction(k, n) < LOW_CUTOFF]
    interior = [k for k in peaks if k not in low]
    filters, comps = [], []
    trend = False
    if low:
        filters.append(design_elliptic(_auto_highpass(1.5 * _bin_to_fraction(max(low), n))))
        trend = True
    for k in interior:
        bs = _auto_bandstop(k, n)
        if bs is None:
            continue
        filters.append(design_elliptic(bs))
        comps.append(est(centred, k))
    if not filters:
        return done(vals.copy(), [], [], "passthrough")
    reg = zero_phase_filter(cascade_all(filters), x, pad=plan.pad).values
    return done(reg, comps, filters, "auto", trend=trend)


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------

def _poly_extrapolate(y: np.ndarray, degree: int, window: float, horizon: int) -> np.ndarray:
    n = y.size
    start = n - max(degree + 1, int(math.ceil(window * n)))
    start = max(start, 0)
    t = np.arange(start, n, dtype=np.float64)
    coef = np.polynomial.polynomial.polyfit(t, y[start:], degree)
    future = np.arange(n, n + horizon, dtype=np.float64)
    return np.polynomial.polynomial.polyval(future, coef)


def _fit_regular(regular: Series, p, q) -> _arma.ArmaModel:
    if p is None or q is None:
        p, q = _arma.select_order(regular, *AUTO_ORDER_MAX)
    return _arma.fit(regular, p, q)


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (ArmaSinError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise PipelineError(stage, exc) from exc


def arma_sin_forecast(
    x,
    plan: RegularizationPlan = RegularizationPlan(),
    p: Optional[int] = None,
    q: Optional[int] = None,
    horizon: int = 10,
) -> ForecastReport:
    """Forecast ``horizon`` steps with ARMA on the regular part plus an
    extrapolation of the predictable part.  ``p``/``q`` of ``None`` select
    orders by AIC."""
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    x = _series(x)
    if plan.mode in ("difference", "seasonal_difference"):
        lag = plan.lag if plan.mode == "seasonal_difference" else None
        return sarima_baseline_forecast(x, plan.d, lag, p, q, horizon)
    n = len(x)
    stage = "spectral" if plan.mode in ("auto", "sinusoid") else "filtering"
    reg = _staged(stage, regularize, x, plan)
    model = _staged("arma", _fit_regular, reg.regular, p, q)
    regular_fc = _staged("forecast", _arma.forecast, model, reg.regular, horizon).values

    sin_part = np.zeros(horizon)
    if reg.components:
        sin_part = extrapolate_sinusoids(reg.components, n, horizon).values
    if plan.predictable_forecast == "none" or reg.route == "passthrough":
        pred_fc = np.zeros(horizon)
    elif plan.predictable_forecast == "sinusoids" and not reg.trend:
        pred_fc = sin_part
    else:
        base = reg.predictable.values
        if reg.components:
            base = base - extrapolate_sinusoids(reg.components, 0, n).values
        pred_fc = sin_part + _poly_extrapolate(base, plan.poly_degree, plan.poly_window, horizon)

    ts = x.sampling_period
    prov = {
        "method": "arma-sin",
        "plan": plan.to_dict(),
        "route": reg.route,
        "orders": [model.p, model.q],
        "projected": model.projected,
        "filters": [f.to_dict() for f in reg.filters],
    }
    return ForecastReport(
        regular_forecast=Series(regular_fc, ts),
        predictable_forecast=Series(pred_fc, ts),
        combined=Series(regular_fc + pred_fc, ts),
        regularized_history=reg.regular,
        fitted_model=model,
        detected_components=reg.components,
        provenance=prov,
    )


def differencing_operator(d: int, lag: Optional[int]) -> TransferFunction:
    from .lti import cascade, identity

    tf = identity()
    if d:
        tf = cascade(tf, difference_operator(d))
    if lag:
        tf = cascade(tf, seasonal_difference(lag))
    return tf


def undifference(history: np.ndarray, diff_forecast: np.ndarray, op: TransferFunction) -> np.ndarray:
    """Invert an FIR differencing operator, continuing from ``history``.

    With op = 1 + c_1 z^-1 + ... + c_m z^-m and y = op x, each future level is
    x[t] = y[t] - sum_k c_k x[t-k].
    """
    c = op.b
    xs = np.concatenate([history, np.zeros(diff_forecast.size)])
    n = history.size
    for h, yt in enumerate(diff_forecast):
        t = n + h
        acc = yt
        for k in range(1, c.size):
            if t - k >= 0:
                acc -= c[k] * xs[t - k]
        xs[t] = acc / c[0]
    return xs[n:]


def sarima_baseline_forecast(
    x,
    d: int = 1,
    lag: Optional[int] = None,
    p: Optional[int] = None,
    q: Optional[int] = None,
    horizon: int = 10,
) -> ForecastReport:
    """ARIMA/SARIMA by difference operators: difference single-pass (zero
    initial conditions), fit ARMA to the result, forecast, integrate back.

    The operator's start-up samples are left out of the fit when enough data
    remains for the requested orders (``provenance["trimmed"]``)."""
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    x = _series(x)
    n = len(x)
    if d < 0:
        raise InvalidInputError("d must be nonnegative")
    if d + (lag or 0) >= n:
        raise InvalidInputError("differencing consumes the whole series")
    op = differencing_operator(d, lag)
    y = apply(op, x)
    # the first m outputs are start-up transients of the zero-initial-condition
    # operator; drop them unless that leaves too little data for the fit
    m = op.b.size - 1
    pp, qq = (p, q) if p is not None and q is not None else AUTO_ORDER_MAX
    trim = m if n - m > 10 * (pp + qq + 1) else 0
    y_fit = y.with_values(y.values[trim:])
    model = _staged("arma", _fit_regular, y_fit, p, q)
    y_fc = _staged("forecast", _arma.forecast, model, y_fit, horizon).values
    levels = undifference(x.values, y_fc, op)
    ts = x.sampling_period
    prov = {
        "method": "s-arima",
        "d": d,
        "lag": lag,
        "trimmed": trim,
        "orders": [model.p, model.q],
        "projected": model.projected,
    }
    return ForecastReport(
        regular_forecast=Series(y_fc, ts),
        predictable_forecast=Series(levels - y_fc, ts),
        combined=Series(levels, ts),
        regularized_history=y,
        fitted_model=model,
        detected_components=(),
        provenance=prov,
    )


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------

def _band_filter(lo: float, hi: float, transition: float, rp: float, rs: float) -> Optional[TransferFunction]:
    """Elliptic filter passing [lo, hi] (rad/sample); None means all-pass."""
    f_lo, f_hi = lo / math.pi, hi / math.pi
    tr = transition
    if f_lo <= 0.0 and f_hi >= 1.0:
        return None
    if f_lo <= 0.0:
        return design_elliptic(FilterSpec("lowpass", f_hi, min(f_hi + tr, 0.999), rp, rs))
    if f_hi >= 1.0:
        return design_elliptic(FilterSpec("highpass", f_lo, max(f_lo - tr, 0.001), rp, rs))
    return design_elliptic(
        FilterSpec("bandpass", (f_lo, f_hi), (max(f_lo - tr, 0.001), min(f_hi + tr, 0.999)), rp, rs)
    )


def decompose(
    x,
    bands: Sequence[tuple],
    transition: float = 0.02,
    ripple_db: float = 0.1,
    attenuation_db: float = 40.0,
) -> list[Series]:
    """Split ``x`` into one zero-phase band-selected component per band plus a
    final residual holding whatever the bands did not take.

    Bands are ``(w_low, w_high)`` in rad/sample inside [0, pi] and must not
    overlap.  The components and residual sum back to ``x``.
    """
    x = _series(x)
    bands = [(float(lo), float(hi)) for lo, hi in bands]
    for lo, hi in bands:
        if not (0.0 <= lo < hi <= math.pi):
            raise InvalidInputError(f"band ({lo}, {hi}) must satisfy 0 <= low < high <= pi")
    ordered = sorted(bands)
    for (lo1, hi1), (lo2, hi2) in zip(ordered, ordered[1:]):
        if lo2 < hi1:
            raise InvalidInputError(f"bands ({lo1}, {hi1}) and ({lo2}, {hi2}) overlap")
    out = []
    rest = x.values.copy()
    for lo, hi in bands:
        tf = _band_filter(lo, hi, transition, ripple_db, attenuation_db)
        comp = x.values.copy() if tf is None else zero_phase_filter(tf, x).values
        out.append(x.with_values(comp))
        rest = rest - comp
    out.append(x.with_values(rest))
    return out
