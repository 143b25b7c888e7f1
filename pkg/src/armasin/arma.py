"""ARMA(p, q) simulation, Hannan-Rissanen estimation, AIC order selection and
minimum-MSE forecasting.

Models use the polynomial convention of :mod:`armasin.lti`:

    ar[0] x[t] + ar[1] x[t-1] + ... + ar[p] x[t-p] = ma[0] e[t] + ... + ma[q] e[t-q]

with ``ar[0] == ma[0] == 1`` after normalisation, ``e`` white with variance
``noise_variance`` and the process offset by ``mean``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError, InvalidInputError, SelectionError, UnstableSystemError
from .lti import StabilityReport, TransferFunction, apply, freq_response, polynomial_roots, stability
from .signal_core import Series

PROJECTION_MARGIN = 1e-6
_BATCH_PAIRS = 1024


@dataclass(frozen=True)
class NoiseSource:
    """Seeded Gaussian white noise.

    Uniform variates come from numpy's PCG64 bit generator (stable across
    platforms and numpy versions); normals are made from them with the
    Marsaglia polar method in fixed batches of 1024 candidate pairs, so a
    longer draw always extends a shorter one with the same seed.
    """

    seed: int = 0

    def normal(self, n: int) -> np.ndarray:
        gen = np.random.Generator(np.random.PCG64(int(self.seed) & (2**64 - 1)))
        out = np.empty(0)
        while out.size < n:
            u = 2.0 * gen.random((_BATCH_PAIRS, 2)) - 1.0
            s = u[:, 0] ** 2 + u[:, 1] ** 2
            keep = (s > 0.0) & (s < 1.0)
            u, s = u[keep], s[keep]
            f = np.sqrt(-2.0 * np.log(s) / s)
            out = np.concatenate([out, (u * f[:, None]).reshape(-1)])
        return out[:n]


def _poly_from_roots(roots: np.ndarray) -> np.ndarray:
    return np.real(np.poly(roots)) if roots.size else np.array([1.0])


def _reflect_inside(poly: np.ndarray, margin: float = PROJECTION_MARGIN) -> tuple[np.ndarray, bool]:
    """Move roots (in z) with modulus above 1 - margin inside the unit circle."""
    if poly.size <= 1:
        return poly, False
    roots = polynomial_roots(poly).astype(np.complex128)
    mod = np.abs(roots)
    bad = mod > 1.0 - margin
    if not np.any(bad):
        return poly, False
    fixed = roots.copy()
    new_mod = np.minimum(1.0 / mod[bad], 1.0 - margin)
    fixed[bad] = new_mod * np.exp(1j * np.angle(roots[bad]))
    out = _poly_from_roots(fixed)
    return np.concatenate([out, np.zeros(poly.size - out.size)]), True


@dataclass(frozen=True, eq=False)
class ArmaModel:
    ar: np.ndarray
    ma: np.ndarray
    noise_variance: float = 1.0
    mean: float = 0.0
    projected: bool = False

    def __post_init__(self):
        ar = np.array(self.ar, dtype=np.float64).reshape(-1)
        ma = np.array(self.ma, dtype=np.float64).reshape(-1)
        if ar.size == 0 or ar[0] == 0 or ma.size == 0 or ma[0] == 0:
            raise InvalidInputError("leading AR and MA coefficients must be nonzero")
        if not self.noise_variance > 0:
            raise InvalidInputError("noise variance must be positive")
        # fold both leading coefficients into the innovation scale
        scale = ma[0] / ar[0]
        ar = ar / ar[0]
        ma = ma / ma[0]
        ar.setflags(write=False)
        ma.setflags(write=False)
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        object.__setattr__(self, "noise_variance", float(self.noise_variance) * scale * scale)
        object.__setattr__(self, "mean", float(self.mean))

    def __eq__(self, other):
        if not isinstance(other, ArmaModel):
            return NotImplemented
        return (
            np.array_equal(self.ar, other.ar)
            and np.array_equal(self.ma, other.ma)
            and self.noise_variance == other.noise_variance
            and self.mean == other.mean
        )

    __hash__ = None

    @property
    def p(self) -> int:
        return self.ar.size - 1

    @property
    def q(self) -> int:
        return self.ma.size - 1

    @property
    def transfer_function(self) -> TransferFunction:
        return TransferFunction(self.ma, self.ar)

    def stability(self) -> StabilityReport:
        return stability(self.transfer_function)

    def spectral_density(self, w) -> np.ndarray:
        """sigma^2 |MA(e^{jw}) / AR(e^{jw})|^2."""
        return self.noise_variance * np.abs(freq_response(self.transfer_function, w)) ** 2

    def to_dict(self) -> dict:
        return {
            "ar": self.ar.tolist(),
            "ma": self.ma.tolist(),
            "noise_variance": self.noise_variance,
            "mean": self.mean,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArmaModel":
        try:
            return cls(d["ar"], d["ma"], d["noise_variance"], d.get("mean", 0.0))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"model object needs ar, ma, noise_variance: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ArmaModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed model JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise InvalidInputError("model JSON must be an object")
        return cls.from_dict(d)


PAPER_MODEL = ArmaModel(ar=[40.0, 2.0, 3.0, 6.0, 9.0], ma=[13.0, 5.0, 6.0], noise_variance=1.0)


def simulate(model: ArmaModel, n: int, noise: NoiseSource, sampling_period: float = 1.0) -> Series:
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    rep = model.stability()
    if not rep.stable:
        raise UnstableSystemError("cannot simulate a non-stationary model", rep)
    e = math.sqrt(model.noise_variance) * noise.normal(n)
    x = apply(model.transfer_function, e).values + model.mean
    return Series(x, sampling_period)


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

def _lagmat(v: np.ndarray, lags: int, rows: np.ndarray) -> np.ndarray:
    return np.column_stack([v[rows - i] for i in range(1, lags + 1)]) if lags else np.empty((rows.size, 0))


def _ols(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if X.shape[1] == 0:
        return np.empty(0), y
    if X.shape[0] <= X.shape[1]:
        raise FitError("fewer regression rows than unknowns")
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1] or sv[-1] <= sv[0] * 1e-10:
        raise FitError("singular regression: collinear lags")
    return coef, y - X @ coef


def _regress(x: np.ndarray, e: np.ndarray, p: int, q: int, start: int):
    rows = np.arange(start, x.size)
    X = np.hstack([_lagmat(x, p, rows), _lagmat(e, q, rows)])
    coef, resid = _ols(x[rows], X)
    return coef[:p], coef[p:], resid


def _innovations(ar: np.ndarray, ma: np.ndarray, x: np.ndarray) -> np.ndarray:
    # e = AR(B)/MA(B) x with zero initial conditions
    return apply(TransferFunction(ar, ma), x).values


def fit(x, p: int, q: int) -> ArmaModel:
    """Hannan-Rissanen least squares.

    1. long AR (order ``min(20, n // 10)``) by OLS gives innovation proxies;
    2. OLS of x[t] on its own p lags and q lagged proxies;
    3. innovations recomputed by running the stage-2 model backwards over
       the data, then the stage-2 regression is repeated on them.

    The sample mean is removed first and stored on the model.  Fitted AR
    roots too close to or outside the unit circle are reflected inside and
    the model is flagged ``projected``.
    """
    vals = x.values if isinstance(x, Series) else np.asarray(x, dtype=np.float64).reshape(-1)
    p, q = int(p), int(q)
    if p < 0 or q < 0:
        raise InvalidInputError("orders must be nonnegative")
    n = vals.size
    if n <= 10 * (p + q + 1):
        raise InvalidInputError(f"need more than {10 * (p + q + 1)} samples for ARMA({p},{q}), got {n}")
    mu = float(np.mean(vals))
    xc = vals - mu
    if p == 0 and q == 0:
        var = float(np.mean(xc * xc))
        if var <= 0:
            raise FitError("series is constant")
        return ArmaModel([1.0], [1.0], var, mu)

    if q == 0:
        phi, _, resid = _regress(xc, np.empty(0), p, 0, p)
        theta = np.empty(0)
    else:
        m = max(min(20, n // 10), 1)
        long_phi, _, long_resid = _regress(xc, np.empty(0), m, 0, m)
        e_hat = np.zeros(n)
        e_hat[m:] = long_resid
        phi, theta, resid = _regress(xc, e_hat, p, q, max(p, m + q))
        ar = np.concatenate([[1.0], -phi])
        ma = np.concatenate([[1.0], theta])
        ma_inv, _ = _reflect_inside(ma)
        e2 = _innovations(ar, ma_inv, xc)
        if np.all(np.isfinite(e2)):
            phi, theta, resid = _regress(xc, e2, p, q, max(p, q))

    var = float(np.mean(resid * resid))
    if not (var > 0 and math.isfinite(var)):
        raise FitError("degenerate residual variance")
    ar = np.concatenate([[1.0], -phi])
    ma = np.concatenate([[1.0], theta])
    ar, projected = _reflect_inside(ar)
    return ArmaModel(ar, ma, var, mu, projected)


def aic(model: ArmaModel, n: int) -> float:
    return n * math.log(model.noise_variance) + 2.0 * (model.p + model.q + 1)


def select_order(x, p_max: int, q_max: int) -> tuple[int, int]:
    """Grid search minimising AIC = n ln(sigma^2) + 2 (p + q + 1).

    Ties go to the smaller p + q, then the smaller p.  Cells whose fit fails
    are skipped.
    """
    if not (0 <= p_max <= 8 and 0 <= q_max <= 8):
        raise InvalidInputError("p_max and q_max must lie in [0, 8]")
    vals = x.values if isinstance(x, Series) else np.asarray(x, dtype=np.float64).reshape(-1)
    n = vals.size
    best = None
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                m = fit(vals, p, q)
            except (FitError, InvalidInputError, np.linalg.LinAlgError):
                continue
            key = (aic(m, n), p + q, p)
            if best is None or key < best[0]:
                best = (key, (p, q))
    if best is None:
        raise SelectionError(f"no ARMA(p<={p_max}, q<={q_max}) fit succeeded")
    return best[1]


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------

def forecast(model: ArmaModel, history, horizon: int) -> Series:
    """h-step minimum-MSE forecast.

    Innovations over the history come from the inverse model (zero
    initial conditions); future innovations are zero.  A non-invertible MA
    part is swapped for its invertible twin (same autocovariance) so the
    innovation recursion stays bounded.
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    if isinstance(history, Series):
        vals, ts = history.values, history.sampling_period
    else:
        vals, ts = np.asarray(history, dtype=np.float64).reshape(-1), 1.0
    p, q = model.p, model.q
    if vals.size == 0:
        if p or q:
            raise InvalidInputError("empty history for a model with memory")
        return Series(np.full(horizon, model.mean), ts)
    xc = vals - model.mean
    ar = model.ar
    ma, _ = _reflect_inside(np.array(model.ma))
    e = _innovations(ar, ma, xc) if q else np.zeros(0)
    n = xc.size
    xs = np.concatenate([xc, np.zeros(horizon)])
    es = np.concatenate([e, np.zeros(horizon)]) if q else np.zeros(n + horizon)
    for t in range(n, n + horizon):
        acc = 0.0
        for i in range(1, p + 1):
            if t - i >= 0:
                acc -= ar[i] * xs[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                acc += ma[j] * es[t - j]
        xs[t] = acc
    return Series(xs[n:] + model.mean, ts)
