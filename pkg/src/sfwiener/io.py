"""File formats: time series, filters, tidy spectra and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .estimation import TimeSeries

__all__ = [
    "read_series",
    "write_series",
    "write_filter",
    "read_filter",
    "write_response_csv",
    "write_taps_csv",
    "read_taps_csv",
    "write_tidy_csv",
    "sha256",
    "write_manifest",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series(path, ts: TimeSeries) -> Path:
    """CSV ``t,value`` for ``.csv`` paths, otherwise raw little-endian float64
    with a ``<path>.json`` sidecar holding ``{"dt": ...}``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "value"])
            for i, v in enumerate(ts.samples):
                w.writerow([_fmt(i * ts.dt), _fmt(v)])
    else:
        ts.samples.astype("<f8").tofile(path)
        with open(str(path) + ".json", "w") as fh:
            json.dump({"dt": ts.dt}, fh)
    return path


def read_series(path) -> TimeSeries:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] < 2:
            raise ValueError(f"{path}: need at least two samples")
        t = data[:, 0]
        dt = float((t[-1] - t[0]) / (t.size - 1))
        if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=1e-12):
            raise ValueError(f"{path}: samples are not uniformly spaced")
        return TimeSeries(dt, data[:, 1])
    side = Path(str(path) + ".json")
    if not side.exists():
        raise ValueError(f"{path}: missing sidecar {side.name} with the sample period")
    with open(side) as fh:
        dt = float(json.load(fh)["dt"])
    return TimeSeries(dt, np.fromfile(path, dtype="<f8"))


def write_filter(path, flt) -> Path:
    with open(path, "w") as fh:
        json.dump(flt.to_dict(), fh, indent=1, sort_keys=True)
    return Path(path)


def read_filter(path):
    from .filter_design import WienerFilter

    with open(path) as fh:
        return WienerFilter.from_dict(json.load(fh))


def write_response_csv(path, omega, h) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega_rad_s", "re", "im"])
        for o, v in zip(omega, h):
            w.writerow([_fmt(o), _fmt(v.real), _fmt(v.imag)])
    return Path(path)


def write_taps_csv(path, fir) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t", "tap"])
        for i, g in enumerate(fir.taps):
            w.writerow([i, _fmt(i * fir.dt), _fmt(g)])
    return Path(path)


def read_taps_csv(path):
    from .filter_design import FIR

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dt = float(data[1, 1] - data[0, 1]) if data.shape[0] > 1 else 1.0
    return FIR(data[:, 2].copy(), dt, float("nan"))


def write_tidy_csv(path, rows: Iterable[tuple]) -> Path:
    """Long-format ``series,omega,value`` rows for plotting tools."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "omega", "value"])
        for name, o, v in rows:
            w.writerow([name, _fmt(o), _fmt(v)])
    return Path(path)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"sfwiener": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def write_manifest(path, *, command: str, config: dict, outputs: Iterable, seed: Optional[int] = None, **sections) -> Path:
    """One JSON manifest per run; every output file is listed with its hash."""
    doc = {
        "command": command,
        "config_echo": config,
        "seed": seed,
        "versions": _versions(),
        "outputs": {os.path.basename(str(p)): sha256(p) for p in outputs},
    }
    doc.update(sections)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=_json_default)
    return Path(path)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o)}")
