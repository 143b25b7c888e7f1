import json
import os
import subprocess
import sys

import numpy as np
import pytest

from armasin import io
from armasin.arma import PAPER_MODEL
from armasin.cli import build_parser, main
from armasin.errors import InvalidInputError
from armasin.signal_core import Series, dft

SUBCOMMANDS = ["spectrum", "design", "filter", "filtfilt", "simulate", "fit", "forecast", "armasin", "decompose", "bench"]


def write_series(path, values, ts=1.0):
    path.write_text(io.series_csv(Series(values, ts)))
    return str(path)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_rows(path):
    lines = open(path).read().splitlines()
    return lines[0].split(","), [list(map(float, l.split(","))) for l in lines[1:]]


# -- io ----------------------------------------------------------------------------

def test_series_csv_roundtrip():
    x = Series([0.1, -2.0, 3.5e-7, 4.0], 0.1)
    back = io.parse_series_csv(io.series_csv(x))
    assert back == x


@pytest.mark.parametrize(
    "text",
    [
        "t,v\n0,1\n1,2\n",  # wrong header
        "time,value\n0,1\n1,2\n3,4\n",  # non-uniform step
        "time,value\n0,1\n1,oops\n",
        "time,value\n",
        "time,value\n0,1\n0,2\n",  # zero step
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(InvalidInputError):
        io.parse_series_csv(text)


def test_dump_json_nulls_non_finite():
    assert json.loads(io.dump_json({"a": float("nan"), "b": [1.0, float("inf")]})) == {"a": None, "b": [1.0, None]}


def test_write_outputs_all_or_nothing(tmp_path):
    good = tmp_path / "a.txt"
    bad = tmp_path / "missing_dir" / "b.txt"
    with pytest.raises(OSError):
        io.write_outputs({str(good): "x", str(bad): "y"})
    assert not good.exists()
    assert os.listdir(tmp_path) == []


# -- parser ------------------------------------------------------------------------

@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_every_subcommand_has_help(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([cmd, "--help"])
    assert exc.value.code == 0
    assert "usage: armasin " + cmd in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "armasin", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in SUBCOMMANDS:
        assert cmd in out.stdout


# -- spectrum ----------------------------------------------------------------------

def test_spectrum_constant_input(tmp_path):
    src = write_series(tmp_path / "x.csv", np.full(16, 2.0))
    out = tmp_path / "s.csv"
    assert main(["spectrum", src, "-o", str(out)]) == 0
    head, rows = read_rows(out)
    assert head == ["k", "w", "magnitude", "phase_rad"]
    assert len(rows) == 16
    nonzero = [r for r in rows if r[2] > 1e-9]
    assert len(nonzero) == 1 and nonzero[0][0] == 0 and nonzero[0][2] == pytest.approx(32.0)


def test_spectrum_peaks_case4(tmp_path):
    t = np.arange(101) * 0.1
    x = PAPER_MODEL.mean + np.sin(2 * t)
    src = write_series(tmp_path / "x.csv", x, 0.1)
    out = tmp_path / "s.csv"
    assert main(["spectrum", src, "-o", str(out), "--peaks", "8", "--refine"]) == 0
    head, rows = read_rows(tmp_path / "s.peaks.csv")
    assert head == ["k", "w", "magnitude", "amplitude", "phase_rad"]
    assert rows[0][0] == 3
    assert rows[0][1] == pytest.approx(0.2, abs=1e-3)
    assert rows[0][3] == pytest.approx(1.0, abs=1e-3)


def test_spectrum_nonuniform_exit2_no_output(tmp_path):
    src = tmp_path / "x.csv"
    src.write_text("time,value\n0,1\n1,2\n3,4\n4,5\n")
    out = tmp_path / "s.csv"
    assert main(["spectrum", str(src), "-o", str(out), "--peaks", "8"]) == 2
    assert not out.exists()
    assert not (tmp_path / "s.peaks.csv").exists()


def test_missing_input_is_exit2(tmp_path):
    assert main(["spectrum", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "s.csv")]) == 2


# -- design / filter ------------------------------------------------------------------

CASE1 = {"band": "highpass", "passband_edges": 0.25, "stopband_edges": 0.2,
         "passband_ripple_db": 1.0, "stopband_attenuation_db": 10.0}


def test_design_case1(tmp_path):
    spec = write_json(tmp_path / "spec.json", CASE1)
    out, resp = tmp_path / "f.json", tmp_path / "r.csv"
    assert main(["design", spec, "-o", str(out), "--response", str(resp), "--grid", "1024"]) == 0
    tf = json.loads(out.read_text())
    np.testing.assert_allclose(tf["a"], [1, -1.7101, 1.3712, -0.3152], atol=5e-3)
    np.testing.assert_allclose(tf["b"], [0.6226, -1.5757, 1.5757, -0.6226], atol=5e-3)
    head, rows = read_rows(resp)
    assert head == ["w", "magnitude_db", "phase_rad"]
    assert len(rows) == 1024


def test_design_invalid_spec_exit2(tmp_path):
    bad = dict(CASE1, stopband_edges=0.3)
    spec = write_json(tmp_path / "spec.json", bad)
    assert main(["design", spec, "-o", str(tmp_path / "f.json")]) == 2
    assert main(["design", write_json(tmp_path / "s2.json", {"band": "highpass"}), "-o", str(tmp_path / "f.json")]) == 2
    assert not (tmp_path / "f.json").exists()


def test_design_degenerate_exit3(tmp_path):
    spec = write_json(tmp_path / "spec.json", dict(CASE1, stopband_edges=0.25 - 1e-7))
    assert main(["design", spec, "-o", str(tmp_path / "f.json")]) == 3
    assert not (tmp_path / "f.json").exists()


def test_filtfilt_identity_roundtrip(tmp_path):
    x = np.random.default_rng(0).standard_normal(40)
    src = write_series(tmp_path / "x.csv", x, 0.5)
    filt = write_json(tmp_path / "id.json", {"b": [1.0], "a": [1.0]})
    out = tmp_path / "y.csv"
    assert main(["filtfilt", filt, src, "-o", str(out)]) == 0
    assert io.read_series_csv(str(out)) == io.read_series_csv(src)


def test_filtfilt_unstable_exit2_with_report(tmp_path, capsys):
    src = write_series(tmp_path / "x.csv", np.ones(10))
    filt = write_json(tmp_path / "bad.json", {"b": [1.0], "a": [1.0, -1.5]})
    out = tmp_path / "y.csv"
    assert main(["filtfilt", filt, src, "-o", str(out)]) == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert '"stable": false' in err


def test_filter_single_pass(tmp_path):
    src = write_series(tmp_path / "x.csv", [1.0, 0, 0, 0, 0])
    filt = write_json(tmp_path / "f.json", {"b": [1.0], "a": [1.0, -0.5]})
    out = tmp_path / "y.csv"
    assert main(["filter", filt, src, "-o", str(out)]) == 0
    np.testing.assert_allclose(io.read_series_csv(str(out)).values, 0.5 ** np.arange(5))


# -- simulate / fit / forecast ---------------------------------------------------------

def test_simulate_fit_forecast_chain(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(PAPER_MODEL.to_json())
    x, fitted, fc = tmp_path / "x.csv", tmp_path / "fit.json", tmp_path / "fc.csv"
    assert main(["simulate", str(model), "-n", "2000", "-o", str(x), "--seed", "3"]) == 0
    assert main(["fit", str(x), "-p", "4", "-q", "2", "-o", str(fitted)]) == 0
    assert main(["forecast", str(fitted), str(x), "--horizon", "7", "-o", str(fc)]) == 0
    head, rows = read_rows(fc)
    assert head == ["step", "value"] and [r[0] for r in rows] == list(range(1, 8))
    assert main(["fit", str(x), "-o", str(fitted)]) == 0  # AIC selection
    assert set(json.loads(fitted.read_text())) >= {"ar", "ma", "noise_variance", "mean"}


def test_simulate_seed_precedence(tmp_path, monkeypatch):
    model = tmp_path / "model.json"
    model.write_text(PAPER_MODEL.to_json())

    def sim(name, *extra):
        out = tmp_path / name
        assert main(["simulate", str(model), "-n", "50", "-o", str(out), *extra]) == 0
        return out.read_text()

    monkeypatch.delenv("ARMASIN_SEED", raising=False)
    default = sim("a.csv")
    assert sim("b.csv", "--seed", "0") == default
    monkeypatch.setenv("ARMASIN_SEED", "5")
    env = sim("c.csv")
    assert env != default
    assert sim("d.csv", "--seed", "5") == env
    assert sim("e.csv", "--seed", "0") == default  # explicit flag wins
    monkeypatch.setenv("ARMASIN_SEED", "five")
    assert main(["simulate", str(model), "-n", "5", "-o", str(tmp_path / "f.csv")]) == 2


def test_fit_constant_series_exit3(tmp_path):
    src = write_series(tmp_path / "x.csv", np.ones(100))
    out = tmp_path / "m.json"
    assert main(["fit", src, "-p", "1", "-q", "0", "-o", str(out)]) == 3
    assert not out.exists()


# -- armasin / decompose -----------------------------------------------------------------

def test_armasin_report_and_csv(tmp_path):
    t = np.arange(501) * 0.1
    from armasin.arma import NoiseSource, simulate

    x = simulate(PAPER_MODEL, 501, NoiseSource(1)).values + np.sin(5 * t)
    src = write_series(tmp_path / "x.csv", x, 0.1)
    plan = write_json(tmp_path / "plan.json", {
        "mode": "bandstop",
        "bandstop": [{"band": "bandstop", "passband_edges": [0.158, 0.168], "stopband_edges": [0.16, 0.165],
                      "passband_ripple_db": 1.0, "stopband_attenuation_db": 20.0}],
        "predictable_forecast": "sinusoids",
    })
    rep, csv = tmp_path / "r.json", tmp_path / "c.csv"
    assert main(["armasin", src, "--plan", plan, "-p", "4", "-q", "1", "-o", str(rep), "--csv", str(csv)]) == 0
    d = json.loads(rep.read_text())
    assert len(d["combined"]) == 10 and d["provenance"]["route"] == "bandstop"
    head, rows = read_rows(csv)
    np.testing.assert_allclose([r[1] for r in rows], d["combined"])


def test_armasin_short_series_exit2(tmp_path):
    src = write_series(tmp_path / "x.csv", np.arange(10.0))
    assert main(["armasin", src, "-o", str(tmp_path / "r.json")]) == 2


def test_decompose_columns_sum(tmp_path):
    n = 512
    t = np.arange(n)
    x = np.cos(0.2 * t) + np.cos(1.0 * t)
    src = write_series(tmp_path / "x.csv", x)
    out = tmp_path / "d.csv"
    assert main(["decompose", src, "--band", "0.1,0.3", "--band", "0.9,1.1", "-o", str(out)]) == 0
    head, rows = read_rows(out)
    assert head == ["time", "band0", "band1", "residual"]
    rows = np.array(rows)
    np.testing.assert_allclose(rows[:, 1:].sum(axis=1), x, atol=1e-9)


def test_decompose_overlap_exit2(tmp_path):
    src = write_series(tmp_path / "x.csv", np.zeros(64))
    out = tmp_path / "d.csv"
    assert main(["decompose", src, "--band", "0.1,0.5", "--band", "0.4,0.9", "-o", str(out)]) == 2
    assert not out.exists()


# -- bench -----------------------------------------------------------------------------

def test_bench_case1_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("ARMASIN_SEED", raising=False)
    prefix = str(tmp_path / "c1")
    assert main(["bench", "case1", "--runs", "5", "-o", prefix]) == 0
    table = capsys.readouterr().out
    assert "S-ARIMA" in table and "ARMA-SIN" in table
    lines = open(prefix + ".csv").read().splitlines()
    assert lines[0] == "run,method,mse,status" and len(lines) == 11
    summary = json.loads(open(prefix + ".json").read())
    assert summary["config"]["mc_runs"] == 5


def test_bench_seed_override(tmp_path, monkeypatch):
    monkeypatch.delenv("ARMASIN_SEED", raising=False)
    a, b, c = (str(tmp_path / n) for n in "abc")
    assert main(["bench", "case4", "--runs", "3", "-o", a]) == 0
    assert main(["bench", "case4", "--runs", "3", "--seed", "7", "-o", b]) == 0
    monkeypatch.setenv("ARMASIN_SEED", "7")
    assert main(["bench", "case4", "--runs", "3", "-o", c]) == 0
    assert open(a + ".csv").read() != open(b + ".csv").read()
    assert open(b + ".csv").read() == open(c + ".csv").read()


def test_bench_config_file(tmp_path):
    from armasin.bench import scenario_by_name

    cfg = scenario_by_name("case2").to_dict()
    cfg["mc_runs"] = 2
    path = write_json(tmp_path / "cfg.json", cfg)
    prefix = str(tmp_path / "out")
    assert main(["bench", path, "-o", prefix]) == 0
    assert len(open(prefix + ".csv").read().splitlines()) == 5


def test_bench_unknown_scenario_exit2(tmp_path):
    prefix = str(tmp_path / "x")
    assert main(["bench", "case9", "-o", prefix]) == 2
    assert os.listdir(tmp_path) == []


def test_bench_deterministic_bytes(tmp_path, monkeypatch):
    monkeypatch.delenv("ARMASIN_SEED", raising=False)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["bench", "case1", "--runs", "20", "-o", a]) == 0
    assert main(["bench", "case1", "--runs", "20", "-o", b]) == 0
    assert open(a + ".csv", "rb").read() == open(b + ".csv", "rb").read()
