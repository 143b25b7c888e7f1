"""Seeded Monte-Carlo comparison of ARMA-SIN against the S-ARIMA baseline on
the four warming-up scenarios.

Protocol: for run ``i`` the noise seed is ``base_seed + i``; the ground-truth
ARMA series plus trend is split into a training prefix and a trailing
``holdout``; both methods forecast ``horizon`` steps from the prefix and the
MSE is taken against the realised holdout values.
"""

from __future__ import annotations

import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import arma as _arma
from .errors import ArmaSinError, InvalidInputError, ScenarioFailureError
from .filter_design import FilterSpec
from .pipeline import RegularizationPlan, arma_sin_forecast, sarima_baseline_forecast
from .signal_core import Series

METHODS = ("armasin", "baseline")
MAX_FAILURE_RATE = 0.2
TREND_KINDS = ("linear", "chirp", "sinusoid", "none")


@dataclass(frozen=True)
class Trend:
    """Deterministic component evaluated on continuous time t.

    linear: slope * t; chirp: amplitude * sin((c1 * t + c2) * t);
    sinusoid: amplitude * sin(omega * t); none: 0.
    """

    kind: str = "none"
    slope: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    omega: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.kind not in TREND_KINDS:
            raise InvalidInputError(f"trend kind must be one of {TREND_KINDS}")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return self.slope * t
        if self.kind == "chirp":
            return self.amplitude * np.sin((self.c1 * t + self.c2) * t)
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(self.omega * t)
        return np.zeros_like(t)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("kind", "slope", "c1", "c2", "omega", "amplitude")}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    time_grid: tuple  # (start, step, end), end inclusive
    trend: Trend
    armasin_plan: RegularizationPlan
    armasin_orders: Optional[tuple] = (4, 1)
    baseline: tuple = (1, None)  # (d, seasonal lag or None)
    baseline_orders: Optional[tuple] = (4, 1)
    ground_truth: _arma.ArmaModel = _arma.PAPER_MODEL
    mc_runs: int = 100
    holdout: int = 10
    horizon: Optional[int] = None
    base_seed: int = 20210101

    def __post_init__(self):
        if self.mc_runs < 1:
            raise InvalidInputError("mc_runs must be at least 1")
        if not self.holdout < 0.5 * self.n_samples:
            raise InvalidInputError("holdout must be less than half the sample count")
        if self.horizon is not None and not 1 <= self.horizon <= self.holdout:
            raise InvalidInputError("horizon must lie in [1, holdout]")

    @property
    def n_samples(self) -> int:
        start, step, end = self.time_grid
        return int(math.floor((end - start) / step + 1e-9)) + 1

    @property
    def sampling_period(self) -> float:
        return float(self.time_grid[1])

    @property
    def steps(self) -> int:
        return self.holdout if self.horizon is None else self.horizon

    def times(self) -> np.ndarray:
        start, step, _ = self.time_grid
        return start + step * np.arange(self.n_samples)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "time_grid": list(self.time_grid),
            "trend": self.trend.to_dict(),
            "armasin_plan": self.armasin_plan.to_dict(),
            "armasin_orders": list(self.armasin_orders) if self.armasin_orders else None,
            "baseline": list(self.baseline),
            "baseline_orders": list(self.baseline_orders) if self.baseline_orders else None,
            "ground_truth": self.ground_truth.to_dict(),
            "mc_runs": self.mc_runs,
            "holdout": self.holdout,
            "horizon": self.horizon,
            "base_seed": self.base_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            d = dict(d)
            d["time_grid"] = tuple(d["time_grid"])
            d["trend"] = Trend(**d.get("trend", {}))
            d["armasin_plan"] = RegularizationPlan.from_dict(d.get("armasin_plan", {}))
            for key in ("armasin_orders", "baseline_orders"):
                if d.get(key) is not None:
                    d[key] = tuple(d[key])
            if "baseline" in d:
                d["baseline"] = tuple(d["baseline"])
            if "ground_truth" in d:
                d["ground_truth"] = _arma.ArmaModel.from_dict(d["ground_truth"])
            return cls(**d)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed scenario config: {exc}") from exc


@dataclass(frozen=True)
class RunResult:
    run: int
    mse: dict  # method -> float (nan when failed)
    status: str  # "ok" or "error: ..."
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class BenchReport:
    scenario: str
    mean_mse: dict
    stderr_mse: dict
    per_run_mse: dict  # method -> tuple over successful runs, in run order
    ratio: float  # mean armasin / mean baseline
    runs: tuple
    failures: int
    wall_clock: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "mean_mse": self.mean_mse,
            "stderr_mse": self.stderr_mse,
            "ratio_armasin_over_baseline": self.ratio,
            "failures": self.failures,
            "per_run_mse": {m: list(v) for m, v in self.per_run_mse.items()},
            "mean_wall_clock_s": float(np.mean(self.wall_clock)) if self.wall_clock else None,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("run,method,mse,status\n")
        for r in self.runs:
            for m in METHODS:
                v = r.mse.get(m, math.nan)
                buf.write(f"{r.run},{m},{v!r},{r.status}\n")
        return buf.getvalue()

    def table(self) -> str:
        head = f"{'':10s}{'S-ARIMA':>12s}{'ARMA-SIN':>12s}"
        mse = f"{'MSE':10s}{self.mean_mse['baseline']:12.4f}{self.mean_mse['armasin']:12.4f}"
        se = f"{'std err':10s}{self.stderr_mse['baseline']:12.4f}{self.stderr_mse['armasin']:12.4f}"
        n_ok = len(self.per_run_mse["armasin"])
        foot = f"{self.scenario}: {n_ok} runs, {self.failures} failed, baseline/armasin = {1.0 / self.ratio:.2f}"
        return "\n".join([head, mse, se, foot])


def _forecast_pair(cfg: ScenarioConfig, x: Series) -> dict:
    n_train = len(x) - cfg.holdout
    train = x.with_values(x.values[:n_train])
    steps = cfg.steps
    p, q = cfg.armasin_orders if cfg.armasin_orders else (None, None)
    ours = arma_sin_forecast(train, cfg.armasin_plan, p, q, steps).combined.values
    d, lag = cfg.baseline
    bp, bq = cfg.baseline_orders if cfg.baseline_orders else (None, None)
    theirs = sarima_baseline_forecast(train, d, lag, bp, bq, steps).combined.values
    return {"armasin": ours, "baseline": theirs}


def scenario_series(cfg: ScenarioConfig, run: int) -> tuple[Series, np.ndarray]:
    """Realised series for ``run`` and the ground-truth ARMA part."""
    x0 = _arma.simulate(cfg.ground_truth, cfg.n_samples, _arma.NoiseSource(cfg.base_seed + run))
    x = x0.values + cfg.trend(cfg.times())
    return Series(x, cfg.sampling_period), x0.values


def run_single(cfg: ScenarioConfig, run: int) -> RunResult:
    t0 = time.perf_counter()
    x, _ = scenario_series(cfg, run)
    n_train = len(x) - cfg.holdout
    truth = x.values[n_train:n_train + cfg.steps]
    try:
        fc = _forecast_pair(cfg, x)
    except (ArmaSinError, np.linalg.LinAlgError, FloatingPointError) as exc:
        msg = str(exc).replace(",", ";").replace("\n", " ")
        return RunResult(run, {m: math.nan for m in METHODS}, f"error: {msg}", time.perf_counter() - t0)
    mse = {m: float(np.mean((fc[m] - truth) ** 2)) for m in METHODS}
    if not all(math.isfinite(v) for v in mse.values()):
        return RunResult(run, {m: math.nan for m in METHODS}, "error: non-finite forecast", time.perf_counter() - t0)
    return RunResult(run, mse, "ok", time.perf_counter() - t0)


def _run_star(args):
    return run_single(*args)


def run_scenario(cfg: ScenarioConfig, workers: int = 1) -> BenchReport:
    """Run all Monte-Carlo repetitions; aggregation is in run-index order so
    the report does not depend on scheduling."""
    jobs = [(cfg, i) for i in range(cfg.mc_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_star, jobs))
    else:
        results = [run_single(*j) for j in jobs]
    results.sort(key=lambda r: r.run)
    ok = [r for r in results if r.status == "ok"]
    failures = len(results) - len(ok)
    if failures > MAX_FAILURE_RATE * len(results):
        raise ScenarioFailureError(f"{cfg.name}: {failures} of {len(results)} runs failed")
    per_run = {m: tuple(r.mse[m] for r in ok) for m in METHODS}
    mean = {m: float(np.mean(v)) for m, v in per_run.items()}
    se = {m: float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else math.nan for m, v in per_run.items()}
    return BenchReport(
        scenario=cfg.name,
        mean_mse=mean,
        stderr_mse=se,
        per_run_mse=per_run,
        ratio=mean["armasin"] / mean["baseline"],
        runs=tuple(results),
        failures=failures,
        wall_clock=tuple(r.seconds for r in results),
    )


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------

CASE1_SPEC = FilterSpec("highpass", 0.25, 0.2, 1.0, 10.0)
CASE2_SPEC = FilterSpec("highpass", 0.26, 0.22, 1.0, 10.0)
CASE3_SPEC = FilterSpec("bandstop", (0.158, 0.168), (0.16, 0.165), 1.0, 20.0)


def builtin_scenarios() -> list[ScenarioConfig]:
    return [
        ScenarioConfig(
            name="case1",
            time_grid=(0.0, 0.5, 100.0),
            trend=Trend("linear", slope=0.1),
            armasin_plan=RegularizationPlan(
                "highpass", highpass=CASE1_SPEC, predictable_forecast="polynomial", poly_degree=1
            ),
            armasin_orders=(4, 1),
            baseline=(1, None),
            baseline_orders=(4, 2),
        ),
        ScenarioConfig(
            name="case2",
            time_grid=(0.0, 0.1, 100.0),
            trend=Trend("chirp", c1=0.01, c2=0.1, amplitude=0.25),
            armasin_plan=RegularizationPlan(
                "highpass",
                highpass=CASE2_SPEC,
                predictable_forecast="polynomial",
                poly_degree=2,
                poly_window=0.25,
            ),
            armasin_orders=(5, 2),
            baseline=(1, None),
            baseline_orders=(4, 1),
        ),
        ScenarioConfig(
            name="case3",
            time_grid=(0.0, 0.1, 50.0),
            trend=Trend("sinusoid", omega=5.0, amplitude=1.0),
            armasin_plan=RegularizationPlan(
                "bandstop", bandstop=(CASE3_SPEC,), predictable_forecast="sinusoids", refine=True
            ),
            armasin_orders=(4, 1),
            baseline=(1, 12),
            baseline_orders=(4, 1),
        ),
        ScenarioConfig(
            name="case4",
            time_grid=(0.0, 0.1, 10.0),
            trend=Trend("sinusoid", omega=2.0, amplitude=1.0),
            armasin_plan=RegularizationPlan(
                "sinusoid", n_sinusoids=1, predictable_forecast="sinusoids", refine=True
            ),
            armasin_orders=(4, 1),
            baseline=(0, 31),
            baseline_orders=(4, 1),
        ),
    ]


def scenario_by_name(name: str) -> ScenarioConfig:
    for cfg in builtin_scenarios():
        if cfg.name == name:
            return cfg
    raise InvalidInputError(f"unknown scenario {name!r}; choose from case1..case4")


def control_scenario(**overrides) -> ScenarioConfig:
    """Pure ARMA data, no trend: both methods should tie."""
    base = replace(
        scenario_by_name("case1"),
        name="control",
        trend=Trend("none"),
        armasin_plan=RegularizationPlan("auto"),
        baseline=(0, None),
    )
    return replace(base, **overrides)
