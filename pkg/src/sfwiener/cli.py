"""Command-line front end: ``sfwiener {simulate,design,apply,verify}``.

Exit codes: 0 success, 2 usage or I/O error, 3 data validation failure,
4 numerical failure (including failed verification suites).  Every run that
writes files also writes ``manifest.json`` listing them by SHA-256.

``SFW_THREADS`` caps the BLAS/OpenMP thread pools; it must be set before
numpy loads, so it is applied at import time here.
"""

from __future__ import annotations

import os

_threads = os.environ.get("SFW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import logging  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
import warnings  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import io as sio  # noqa: E402
from .filter_design import (  # noqa: E402
    DesignError,
    DesignOptions,
    LeakageTooHigh,
    StreamConfig,
    StreamingFilter,
    ValidationFailed,
    apply_recorded,
    design,
    error_psd,
    to_fir,
)
from .estimation import TimeSeries, WelchConfig, welch_csd, welch_psd  # noqa: E402
from .simulate import SimSpec, synthesize  # noqa: E402
from .spectral_model import (  # noqa: E402
    as_cross,
    make_scale_free_example,
    model_from_config,
    read_spectrum_csv,
)

log = logging.getLogger("sfwiener")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    try:
        spec = SimSpec.from_config(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad simulation config: {exc}") from exc
    out = _outdir(args.out)
    ext = ".csv" if cfg.get("format", "csv") == "csv" else ".f64"
    t0 = time.perf_counter()
    x, n, y = synthesize(spec)
    t_sim = time.perf_counter() - t0
    files = []
    for name, ts in (("x", x), ("n", n), ("y", y)):
        files.append(sio.write_series(out / f"{name}{ext}", ts))
        if ext != ".csv":
            files.append(Path(str(out / f"{name}{ext}") + ".json"))
    sio.write_manifest(
        out / "manifest.json", command="simulate", config=cfg, outputs=files, seed=spec.seed,
        stage_timings={"synthesize": t_sim}, n_samples=spec.n_samples,
    )
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

def _spectrum(entry, kind, base_dir: Path):
    """A spectrum from a model config or ``{"csv": path, "alpha":..., "beta":...}``."""
    if "csv" in entry:
        tab = read_spectrum_csv(base_dir / entry["csv"])
        if tab.kind != kind:
            raise UsageError(f"{entry['csv']} holds a {tab.kind} spectrum, expected {kind}")
        return tab.to_function(entry.get("alpha"), entry.get("beta"))
    S = model_from_config(entry)
    return as_cross(S) if kind == "cross" else S


def _inputs_from_config(cfg: dict, base_dir: Path):
    """``(S_xy, S_yy, S_xx or None, estimation info)`` from a design config."""
    if cfg.get("scale_free_example"):
        S_xx, _, S_yy, S_xy = make_scale_free_example()
        return S_xy, S_yy, S_xx, None
    if "spectra" in cfg:
        sp = cfg["spectra"]
        S_xy = _spectrum(sp["S_xy"], "cross", base_dir)
        S_yy = _spectrum(sp["S_yy"], "auto", base_dir)
        S_xx = _spectrum(sp["S_xx"], "auto", base_dir) if "S_xx" in sp else None
        return S_xy, S_yy, S_xx, None
    if "series" in cfg:
        se = cfg["series"]
        y = sio.read_series(base_dir / se["y"])
        wcfg = WelchConfig(**se.get("welch", {}))
        ey = se.get("S_yy_exponents", [None, None])
        S_yy = welch_psd(y, wcfg).to_function(*ey, name="S_yy_welch")
        if "x" in se:
            x = sio.read_series(base_dir / se["x"])
            ex = se.get("S_xy_exponents", [None, None])
            S_xy = welch_csd(x, y, wcfg).to_function(*ex, name="S_xy_welch")
        elif "S_xy" in se:
            S_xy = _spectrum(se["S_xy"], "cross", base_dir)
        else:
            raise UsageError("series input needs either an 'x' series or an 'S_xy' model")
        info = {"segment_length": wcfg.segment_length, "S_yy_alpha": S_yy.alpha, "S_yy_beta": S_yy.beta}
        return S_xy, S_yy, None, info
    raise UsageError("design config needs one of 'scale_free_example', 'spectra' or 'series'")


def _design_options(cfg: dict, args) -> DesignOptions:
    d = dict(cfg.get("design", {}))
    for key in ("exponents", "band"):
        if d.get(key) is not None:
            d[key] = tuple(float(v) for v in d[key])
    if args.n_modes is not None:
        d["n_modes"] = args.n_modes if args.n_modes == "auto" else int(args.n_modes)
    if args.omega0 is not None:
        d["omega_0"] = args.omega0
    if args.lead_time is not None:
        d["lead_time"] = args.lead_time
    if args.no_precondition:
        d["precondition"] = False
    try:
        return DesignOptions(**d)
    except TypeError as exc:
        raise UsageError(f"bad design options: {exc}") from exc


def _response_grid(flt, n=2000) -> np.ndarray:
    if flt.band is not None:
        lo, hi = flt.band
    else:
        lo, hi = flt.basis_cfg.omega_0 * 1e-3, flt.basis_cfg.omega_0 * 1e3
    return np.geomspace(lo, hi, n)


def cmd_design(args) -> int:
    cfg = _load_json(args.config)
    base = Path(args.config).resolve().parent
    opts = _design_options(cfg, args)
    out = _outdir(args.out)
    t0 = time.perf_counter()
    try:
        S_xy, S_yy, S_xx, est_info = _inputs_from_config(cfg, base)
    except (KeyError, ValueError, OSError) as exc:
        raise UsageError(f"cannot build input spectra: {exc}") from exc
    t_inputs = time.perf_counter() - t0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        flt = design(S_xy, S_yy, opts, S_xx=S_xx)
    for w in caught:
        log.warning("%s: %s", w.category.__name__, w.message)
    files = [sio.write_filter(out / "filter.json", flt)]
    w = _response_grid(flt, int(cfg.get("response_points", 2000)))
    files.append(sio.write_response_csv(out / "response.csv", w, flt.response(w)))
    fir = None
    if "fir" in cfg:
        fc = cfg["fir"]
        fir = to_fir(flt, float(fc["sample_rate"]), fc.get("n_taps"))
        files.append(sio.write_taps_csv(out / "taps.csv", fir))
    sio.write_manifest(
        out / "manifest.json", command="design", config=cfg, outputs=files,
        options=opts.to_dict(),
        precondition_enabled=opts.precondition,
        stage_timings={"inputs": t_inputs, **flt.timings},
        budget=flt.budget.to_dict() if flt.budget else None,
        condition=flt.condition.to_dict() if flt.condition else None,
        diagnostics=flt.diagnostics.to_dict() if flt.diagnostics else None,
        estimation=est_info,
        fir={"n_taps": fir.taps.size, "leakage": fir.leakage, "dt": fir.dt} if fir else None,
        warnings=[f"{w.category.__name__}: {w.message}" for w in caught],
    )
    print(f"designed {flt.n}-mode filter; wrote {len(files)} files to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# apply
# ---------------------------------------------------------------------------

def _load_fir(path, sample_rate, n_taps):
    p = Path(path)
    if p.suffix.lower() == ".csv":
        fir = sio.read_taps_csv(p)
        if fir.taps.size > 1 and not math.isclose(fir.sample_rate, sample_rate, rel_tol=1e-6):
            raise UsageError(f"taps sampled at {fir.sample_rate:g} Hz, series at {sample_rate:g} Hz")
        return None, fir
    flt = sio.read_filter(p)
    return flt, to_fir(flt, sample_rate, n_taps)


def _stream_config(path) -> tuple:
    sc = _load_json(path)
    if "S_xy" not in sc:
        raise UsageError("stream config needs an 'S_xy' model")
    S_xy = _spectrum(sc["S_xy"], "cross", Path(path).resolve().parent)
    welch = WelchConfig(**sc.get("welch", {"segment_length": 1024}))
    des = DesignOptions(diagnostics=False, **sc.get("design", {}))
    keys = ("block_length", "smoothing", "redesign_every", "alpha_y", "beta_y", "n_taps", "grid_points")
    cfg = StreamConfig(welch=welch, design=des, **{k: sc[k] for k in keys if k in sc})
    return S_xy, cfg, sc


def cmd_apply(args) -> int:
    y = sio.read_series(args.series)
    out = _outdir(args.out)
    flt, fir = _load_fir(args.filter, y.sample_rate, args.n_taps)
    t0 = time.perf_counter()
    sections = {}
    if args.mode == "recorded":
        x_hat = apply_recorded(fir, y)
        sections["fir"] = {"n_taps": fir.taps.size, "leakage": fir.leakage}
        echo = {"mode": "recorded", "filter": str(args.filter), "series": str(args.series)}
    else:
        if not args.stream_config:
            raise UsageError("--mode stream needs --stream-config")
        S_xy, scfg, echo_cfg = _stream_config(args.stream_config)
        sf = StreamingFilter(S_xy, y.dt, scfg)
        if not args.cold_start:
            sf.taps = fir.taps[: scfg.n_taps]
        outs, audit = [], []
        B = scfg.block_length
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for i, start in enumerate(range(0, len(y), B)):
                block = y.samples[start: start + B]
                version = sf.redesigns
                res = sf.process(block)
                # each output block is returned by the call that consumed its input block
                audit.append({
                    "block": i, "input_first": start, "input_last": start + block.size - 1,
                    "output_first": sum(o.size for o in outs), "latency_blocks": 0, "filter_version": version,
                })
                outs.append(res)
        x_hat = TimeSeries(y.dt, np.concatenate(outs))
        sections["stream_audit"] = audit
        sections["stream"] = {"redesigns": sf.redesigns, "failed_redesigns": sf.failures, "cold_start": bool(args.cold_start)}
        echo = {"mode": "stream", "filter": str(args.filter), "series": str(args.series), "stream_config": echo_cfg}
    t_apply = time.perf_counter() - t0
    ext = Path(args.series).suffix.lower()
    ext = ".csv" if ext == ".csv" else ".f64"
    files = [sio.write_series(out / f"x_hat{ext}", x_hat)]
    if ext != ".csv":
        files.append(Path(str(out / f"x_hat{ext}") + ".json"))
    if args.truth:
        x = sio.read_series(args.truth)
        if len(x) != len(y) or not math.isclose(x.dt, y.dt, rel_tol=1e-9):
            raise UsageError("truth and input series differ in length or sample period")
        wcfg = WelchConfig(segment_length=min(args.segment_length, len(y) // 2))
        e = error_psd(x, x_hat, wcfg, log_bins=args.log_bins)
        syy = welch_psd(y, wcfg)
        rows = [("S_ee", o, v) for o, v in zip(e.omega, e.values)]
        rows += [("S_yy", o, v) for o, v in zip(syy.frequencies, syy.values)]
        files.append(sio.write_tidy_csv(out / "error_psd.csv", rows))
        r = x.samples - x_hat.samples
        sections["error"] = {"var_error": float(np.var(r)), "var_x": float(np.var(x.samples)), "ratio": float(np.var(r) / np.var(x.samples))}
    sio.write_manifest(out / "manifest.json", command="apply", config=echo, outputs=files, stage_timings={"apply": t_apply}, **sections)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .suites import SUITES, run_suites

    names = list(SUITES) if "all" in args.suites else args.suites
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; known: {sorted(SUITES)} or 'all'")
    results = run_suites(names)
    doc = {"passed": all(r.passed for r in results), "suites": [r.to_dict() for r in results]}
    print(json.dumps(doc, indent=1))
    return EXIT_OK if doc["passed"] else EXIT_NUMERICAL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfwiener", description="Causal Wiener filters for scale-free noise.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="synthesise signal, noise and data series")
    s.add_argument("config", help="simulation config JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("design", help="design a causal filter from spectra or series")
    d.add_argument("config", help="design config JSON")
    d.add_argument("--out", required=True)
    d.add_argument("--n-modes", help="mode count or 'auto'")
    d.add_argument("--omega0", type=float, help="basis scale (rad/s)")
    d.add_argument("--lead-time", type=float, help="prediction lead time (s)")
    d.add_argument("--no-precondition", action="store_true", help="skip the scaling transformation")
    d.set_defaults(func=cmd_design)

    a = sub.add_parser("apply", help="filter a series with a designed filter")
    a.add_argument("filter", help="filter.json or taps.csv")
    a.add_argument("series", help="input series (.csv or raw float64 with .json sidecar)")
    a.add_argument("--out", required=True)
    a.add_argument("--mode", choices=("recorded", "stream"), default="recorded")
    a.add_argument("--stream-config", help="streaming config JSON (stream mode)")
    a.add_argument("--cold-start", action="store_true", help="stream mode: ignore the given filter until the first redesign")
    a.add_argument("--truth", help="true signal series; enables error-PSD output")
    a.add_argument("--n-taps", type=int, help="FIR length when realising filter.json")
    a.add_argument("--log-bins", type=int, default=250, help="log-spaced bins for the error PSD")
    a.add_argument("--segment-length", type=int, default=8192, help="Welch segment for the error PSD")
    a.set_defaults(func=cmd_apply)

    v = sub.add_parser("verify", help="run self-check suites")
    v.add_argument("suites", nargs="+", help="suite names or 'all'")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValidationFailed as exc:
        for name, detail in exc.report.failures:
            print(f"validation: {name} failed ({detail})", file=sys.stderr)
        return EXIT_VALIDATION
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DesignError, LeakageTooHigh, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
