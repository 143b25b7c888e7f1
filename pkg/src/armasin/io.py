"""CSV/JSON file formats and all-or-nothing output writing."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Mapping

import numpy as np

from .errors import InvalidInputError
from .signal_core import Series, Spectrum

STEP_RTOL = 1e-9


def parse_series_csv(text: str) -> Series:
    """Parse ``time,value`` CSV; the constant time step becomes Ts."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidInputError("empty series file")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["time", "value"]:
        raise InvalidInputError(f"expected header 'time,value', got {','.join(rows[0])!r}")
    body = rows[1:]
    if not body:
        raise InvalidInputError("series file has no samples")
    try:
        data = np.array([[float(a), float(b)] for a, b in body])
    except ValueError as exc:
        raise InvalidInputError(f"unparseable row: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("series file contains non-finite numbers")
    t, v = data[:, 0], data[:, 1]
    if t.size == 1:
        return Series(v, 1.0)
    steps = np.diff(t)
    ts = float(steps.mean())
    if not ts > 0:
        raise InvalidInputError("time column must be strictly increasing")
    if np.max(np.abs(steps - ts)) > STEP_RTOL * max(ts, abs(t[-1])):
        raise InvalidInputError("time column does not have a constant step")
    # the mean step carries rounding from the time column; 12 digits is well
    # inside the tolerance and gives back the step that was written
    return Series(v, float(f"{ts:.12g}"))


def read_series_csv(path: str) -> Series:
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    return parse_series_csv(text)


def series_csv(series: Series, start_time: float = 0.0) -> str:
    buf = io.StringIO()
    buf.write("time,value\n")
    t = start_time + series.times
    for ti, vi in zip(t.tolist(), series.values.tolist()):
        buf.write(f"{ti!r},{vi!r}\n")
    return buf.getvalue()


def spectrum_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    buf.write("k,w,magnitude,phase_rad\n")
    rows = zip(spec.frequencies.tolist(), spec.magnitude.tolist(), spec.phase.tolist())
    for k, (w, m, ph) in enumerate(rows):
        buf.write(f"{k},{w!r},{m!r},{ph!r}\n")
    return buf.getvalue()


def read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from exc


def dump_json(obj) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2) + "\n"


def write_outputs(files: Mapping[str, str]) -> None:
    """Write every ``path -> text`` pair or none of them.

    Each file goes to a temp file in its target directory first; renames only
    happen once all temps are written, and a failure removes everything this
    call created.
    """
    temps: list[tuple[str, str]] = []
    done: list[str] = []
    try:
        for path, text in files.items():
            d = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=d, prefix=".armasin-", suffix=".tmp")
            temps.append((tmp, path))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, path in temps:
            os.replace(tmp, path)
            done.append(path)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        for path in done:
            os.unlink(path)
        raise
