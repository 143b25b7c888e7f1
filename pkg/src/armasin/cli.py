"""Command-line front end.

Every subcommand reads CSV/JSON inputs, computes everything in memory and only
then writes its outputs, all or nothing.  Exit codes: 0 ok, 2 input error,
3 computation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import arma, bench, filter_design, io, lti, pipeline, signal_core
from .errors import ArmaSinError, InvalidInputError, PipelineError, UnstableSystemError

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3
SEED_ENV = "ARMASIN_SEED"


class _InputError(Exception):
    pass


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise _InputError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load(fn, path):
    try:
        return fn(io.read_json(path))
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands; each returns {path: text}
# ---------------------------------------------------------------------------

def cmd_spectrum(args):
    x = io.read_series_csv(args.input)
    centred = x.values - x.values.mean() if args.peaks is not None else None
    spec = signal_core.dft(x)
    out = {args.output: io.spectrum_csv(spec)}
    if args.peaks is not None:
        peaks = signal_core.detect_line_spectra(signal_core.dft(centred), args.peaks)
        lines = ["k,w,magnitude,amplitude,phase_rad"]
        est = signal_core.refine_sinusoid if args.refine else signal_core.estimate_sinusoid
        for k in peaks:
            c = est(centred, k)
            mag = float(spec.magnitude[k])
            lines.append(f"{k},{c.frequency!r},{mag!r},{c.amplitude!r},{c.phase!r}")
        path = args.peaks_output or os.path.splitext(args.output)[0] + ".peaks.csv"
        out[path] = "\n".join(lines) + "\n"
    return out


def cmd_design(args):
    spec = _load(filter_design.FilterSpec.from_dict, args.spec)
    tf = filter_design.design_elliptic(spec, order=args.order)
    out = {args.output: tf.to_json() + "\n"}
    if args.response:
        table = filter_design.response_table(tf, grid=args.grid)
        lines = ["w,magnitude_db,phase_rad"]
        lines += [f"{w!r},{m!r},{p!r}" for w, m, p in table.tolist()]
        out[args.response] = "\n".join(lines) + "\n"
    return out


def cmd_filter(args):
    tf = _load(lti.TransferFunction.from_dict, args.filter)
    x = io.read_series_csv(args.input)
    return {args.output: io.series_csv(lti.apply(tf, x))}


def cmd_filtfilt(args):
    tf = _load(lti.TransferFunction.from_dict, args.filter)
    x = io.read_series_csv(args.input)
    return {args.output: io.series_csv(filter_design.zero_phase_filter(tf, x, pad=args.pad))}


def cmd_simulate(args):
    model = _load(arma.ArmaModel.from_dict, args.model)
    seed = args.seed
    if seed is None:
        seed = _env_seed()
    if seed is None:
        seed = 0
    x = arma.simulate(model, args.n, arma.NoiseSource(seed), args.ts)
    return {args.output: io.series_csv(x)}


def cmd_fit(args):
    x = io.read_series_csv(args.input)
    if args.p is None or args.q is None:
        p, q = arma.select_order(x, args.p_max, args.q_max)
    else:
        p, q = args.p, args.q
    return {args.output: arma.fit(x, p, q).to_json() + "\n"}


def cmd_forecast(args):
    model = _load(arma.ArmaModel.from_dict, args.model)
    x = io.read_series_csv(args.input)
    fc = arma.forecast(model, x, args.horizon)
    lines = ["step,value"] + [f"{i + 1},{v!r}" for i, v in enumerate(fc.values.tolist())]
    return {args.output: "\n".join(lines) + "\n"}


def _plan_from_args(args) -> pipeline.RegularizationPlan:
    if args.plan:
        return _load(pipeline.RegularizationPlan.from_dict, args.plan)
    return pipeline.RegularizationPlan(mode="auto", peak_threshold_factor=args.peak_factor)


def cmd_armasin(args):
    x = io.read_series_csv(args.input)
    plan = _plan_from_args(args)
    report = pipeline.arma_sin_forecast(x, plan, args.p, args.q, args.horizon)
    out = {args.output: report.to_json() + "\n"}
    if args.csv:
        out[args.csv] = report.combined_csv()
    return out


def cmd_decompose(args):
    x = io.read_series_csv(args.input)
    bands = [tuple(b) for b in args.band]
    for b in bands:
        if len(b) != 2:
            raise InvalidInputError(f"--band needs two numbers, got {b}")
    comps = pipeline.decompose(x, bands, transition=args.transition, attenuation_db=args.attenuation)
    names = [f"band{i}" for i in range(len(bands))] + ["residual"]
    lines = [",".join(["time"] + names)]
    cols = np.column_stack([x.times] + [c.values for c in comps])
    for row in cols.tolist():
        lines.append(",".join(repr(v) for v in row))
    return {args.output: "\n".join(lines) + "\n"}


def _scenario(args) -> bench.ScenarioConfig:
    names = [c.name for c in bench.builtin_scenarios()]
    if args.scenario in names:
        cfg = bench.scenario_by_name(args.scenario)
    elif args.scenario.endswith(".json") or os.path.exists(args.scenario):
        cfg = _load(bench.ScenarioConfig.from_dict, args.scenario)
    else:
        raise InvalidInputError(f"unknown scenario {args.scenario!r}; choose from {', '.join(names)} or a JSON file")
    if args.runs is not None:
        cfg = replace(cfg, mc_runs=args.runs)
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        cfg = replace(cfg, base_seed=seed)
    return cfg


def cmd_bench(args):
    cfg = _scenario(args)
    report = bench.run_scenario(cfg, workers=args.workers)
    args._stdout = report.table()
    prefix = args.output or cfg.name
    summary = report.to_dict()
    summary["config"] = cfg.to_dict()
    return {prefix + ".csv": report.to_csv(), prefix + ".json": io.dump_json(summary)}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="armasin", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="DFT of a series, optional line-spectra peaks")
    sp.add_argument("input", help="series CSV (time,value)")
    sp.add_argument("-o", "--output", required=True, help="spectrum CSV (k,w,magnitude,phase_rad)")
    sp.add_argument("--peaks", type=float, metavar="FACTOR", help="detect peaks above FACTOR x median")
    sp.add_argument("--peaks-output", help="peak list CSV (default: <output>.peaks.csv)")
    sp.add_argument("--refine", action="store_true", help="least-squares fit of each peak, frequency free within one bin")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("design", help="elliptic filter from a JSON spec")
    sp.add_argument("spec", help="FilterSpec JSON")
    sp.add_argument("-o", "--output", required=True, help="filter JSON {b, a}")
    sp.add_argument("--response", help="frequency response CSV (w,magnitude_db,phase_rad)")
    sp.add_argument("--grid", type=int, default=512, help="response grid size (default 512)")
    sp.add_argument("--order", type=int, help="force the order instead of the minimum")
    sp.set_defaults(func=cmd_design)

    for name, fn, text in (
        ("filter", cmd_filter, "single-pass causal filtering"),
        ("filtfilt", cmd_filtfilt, "zero-phase forward-backward filtering"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("filter", help="filter JSON {b, a}")
        sp.add_argument("input", help="series CSV")
        sp.add_argument("-o", "--output", required=True, help="filtered series CSV")
        if name == "filtfilt":
            sp.add_argument("--pad", action="store_true", help="odd-reflect the ends before filtering")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("simulate", help="simulate an ARMA model")
    sp.add_argument("model", help="model JSON {ar, ma, noise_variance, mean}")
    sp.add_argument("-n", type=int, required=True, help="number of samples")
    sp.add_argument("-o", "--output", required=True, help="series CSV")
    sp.add_argument("--seed", type=int, help=f"noise seed (default ${SEED_ENV} or 0)")
    sp.add_argument("--ts", type=float, default=1.0, help="sampling period (default 1)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit ARMA(p,q); omit p/q to select by AIC")
    sp.add_argument("input", help="series CSV")
    sp.add_argument("-o", "--output", required=True, help="model JSON")
    sp.add_argument("-p", type=int)
    sp.add_argument("-q", type=int)
    sp.add_argument("--p-max", type=int, default=4)
    sp.add_argument("--q-max", type=int, default=2)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("forecast", help="forecast with a fitted ARMA model")
    sp.add_argument("model", help="model JSON")
    sp.add_argument("input", help="history series CSV")
    sp.add_argument("--horizon", type=int, default=10)
    sp.add_argument("-o", "--output", required=True, help="forecast CSV (step,value)")
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("armasin", help="ARMA-SIN forecast")
    sp.add_argument("input", help="series CSV")
    sp.add_argument("--plan", help="RegularizationPlan JSON (default: auto mode)")
    sp.add_argument("--peak-factor", type=float, default=signal_core.DEFAULT_PEAK_FACTOR)
    sp.add_argument("-p", type=int)
    sp.add_argument("-q", type=int)
    sp.add_argument("--horizon", type=int, default=10)
    sp.add_argument("-o", "--output", required=True, help="report JSON")
    sp.add_argument("--csv", help="combined forecast CSV (step,value)")
    sp.set_defaults(func=cmd_armasin)

    sp = sub.add_parser("decompose", help="split into frequency bands plus residual")
    sp.add_argument("input", help="series CSV")
    sp.add_argument("--band", type=_floats, action="append", default=[], metavar="LO,HI",
                    help="band edges in rad/sample; repeatable")
    sp.add_argument("--transition", type=float, default=0.02, help="transition width, fraction of Nyquist")
    sp.add_argument("--attenuation", type=float, default=40.0, help="stopband attenuation in dB")
    sp.add_argument("-o", "--output", required=True, help="CSV with one column per component")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("bench", help="Monte-Carlo comparison against the S-ARIMA baseline")
    sp.add_argument("scenario", help="case1..case4 or a ScenarioConfig JSON")
    sp.add_argument("--runs", type=int, help="override mc_runs")
    sp.add_argument("--seed", type=int, help=f"override base_seed (also ${SEED_ENV})")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("-o", "--output", help="output prefix (default: scenario name)")
    sp.set_defaults(func=cmd_bench)
    return ap


def _is_input_error(exc: BaseException) -> bool:
    if isinstance(exc, PipelineError):
        return _is_input_error(exc.cause)
    return isinstance(exc, (InvalidInputError, UnstableSystemError, _InputError, OSError))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args._stdout = None
    try:
        files = args.func(args)
        io.write_outputs(files)
    except (ArmaSinError, _InputError, OSError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"armasin {args.command}: {exc}", file=sys.stderr)
        report = getattr(exc, "report", None)
        if report is not None:
            print(io.dump_json(report.to_dict()), file=sys.stderr, end="")
        return EXIT_INPUT if _is_input_error(exc) else EXIT_COMPUTE
    if args._stdout:
        print(args._stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
