"""End-to-end causal Wiener filter design and its time-domain application.

Pipeline: validate the data, scale it to a square-integrable problem,
project onto the causal eigenbasis, solve the Toeplitz system, collect
convergence diagnostics and the finite-band error budget, and rebuild the
filter as ``h = f * sum_k h_k phi_k``.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Union

import numpy as np
from scipy import signal

from . import basis as _basis
from .basis import BasisConfig
from .truncation_budget import ErrorBudget, choose_scale, compute_budget, n_max as _n_max
from .estimation import TimeSeries, WelchConfig, welch_psd
from .precondition import ScalingFunction, choose_exponents, eval_f, transform
from .spectral_model import (
    Asymptotics,
    SpectralFunction,
    TabulatedSpectrum,
    integrate_error_variance,
    validate_data,
)
from .toeplitz import ConditionReport, ToeplitzSystem, condition_report, solve

__all__ = [
    "DesignError",
    "ValidationFailed",
    "TruncationWarning",
    "LeakageTooHigh",
    "ColdStartWarning",
    "DesignOptions",
    "ConvergenceReport",
    "WienerFilter",
    "FrequencyResponse",
    "FIR",
    "LeadShifted",
    "design",
    "frequency_response",
    "to_fir",
    "apply_recorded",
    "StreamConfig",
    "StreamingFilter",
    "apply_streaming",
    "ErrorPSD",
    "error_psd",
]

log = logging.getLogger(__name__)


class DesignError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class ValidationFailed(DesignError):
    def __init__(self, report):
        names = ", ".join(n for n, _ in report.failures)
        super().__init__("validate", f"data conditions failed: {names}")
        self.report = report


class TruncationWarning(RuntimeWarning):
    """Requested mode count exceeds the finite-band limit ``n_max``."""


class LeakageTooHigh(RuntimeError):
    pass


class ColdStartWarning(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------


class LeadShifted:
    """Cross-spectrum for predicting ``x(t + tau)``: ``exp(-i w tau) S_xy(w)``."""

    kind = "cross"

    def __init__(self, base: SpectralFunction, tau: float):
        self.base, self.tau = base, float(tau)
        self.alpha, self.beta, self.support = base.alpha, base.beta, base.support
        self.amp_inf, self.amp_zero = base.amp_inf, base.amp_zero

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.exp(-1j * w * self.tau) * self.base(w)

    def tail_inf(self):
        return self.base.tail_inf()

    def tail_zero(self):
        return self.base.tail_zero()


@dataclass(frozen=True)
class DesignOptions:
    """Knobs of :func:`design`.

    ``n_modes="auto"`` picks ``n_max / 3`` from the error budget.
    ``omega_0=None`` uses the geometric mean of the trusted band (or 1
    rad/s when the band is unbounded).
    """

    n_modes: Union[int, str] = 100
    omega_0: Optional[float] = None
    precondition: bool = True
    exponents: Optional[tuple[float, float]] = None
    phase_rad: float = 0.0
    quad_points: int = 1 << 16
    solver: str = "cholesky"
    jitter: bool = False
    lead_time: float = 0.0
    band: Optional[tuple[float, float]] = None
    diagnostics: bool = True
    validate: bool = True

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["exponents"] = list(self.exponents) if self.exponents is not None else None
        d["band"] = list(self.band) if self.band is not None else None
        return d


@dataclass(frozen=True)
class ConvergenceReport:
    ns: tuple
    dyadic_deltas: tuple  # ||h^(n) - h^(2n)|| in coefficient (L2) norm
    rate_fit: float
    coeff_tail: tuple
    monotone_Veps: tuple  # V_eps[h^(n)] - Var(x), per n in ns plus the final n
    veps_ns: tuple

    def to_dict(self) -> dict:
        return {
            "ns": list(self.ns),
            "dyadic_deltas": list(self.dyadic_deltas),
            "rate_fit": self.rate_fit,
            "coeff_tail": list(self.coeff_tail),
            "veps_ns": list(self.veps_ns),
            "veps_minus_var_x": list(self.monotone_Veps),
        }


@dataclass
class WienerFilter:
    coeffs: np.ndarray
    scaling: ScalingFunction
    basis_cfg: BasisConfig
    diagnostics: Optional[ConvergenceReport] = None
    budget: Optional[ErrorBudget] = None
    condition: Optional[ConditionReport] = None
    bounds: Optional[tuple] = None
    band: Optional[tuple] = None
    lead_time: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.coeffs.size

    def response(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        return eval_f(self.scaling, w) * _basis.synthesize(self.coeffs, self.basis_cfg, w)

    def transformed_response(self, omega) -> np.ndarray:
        return _basis.synthesize(self.coeffs, self.basis_cfg, np.asarray(omega, dtype=float))

    def to_dict(self) -> dict:
        return {
            "coeffs_re": [float(c) for c in self.coeffs.real],
            "coeffs_im": [float(c) for c in self.coeffs.imag],
            "scaling": self.scaling.to_dict(),
            "basis": self.basis_cfg.to_dict(),
            "band": list(self.band) if self.band else None,
            "lead_time": self.lead_time,
            "bounds": list(self.bounds) if self.bounds else None,
            "budget": self.budget.to_dict() if self.budget else None,
            "condition": self.condition.to_dict() if self.condition else None,
            "diagnostics": self.diagnostics.to_dict() if self.diagnostics else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WienerFilter":
        b = d["basis"]
        coeffs = np.asarray(d["coeffs_re"], dtype=float) + 1j * np.asarray(d["coeffs_im"], dtype=float)
        return cls(
            coeffs=coeffs,
            scaling=ScalingFunction.from_dict(d["scaling"]),
            basis_cfg=BasisConfig(float(b["omega0"]), int(b["n_modes"]), int(b["quad_points"])),
            band=tuple(d["band"]) if d.get("band") else None,
            lead_time=float(d.get("lead_time", 0.0)),
            bounds=tuple(d["bounds"]) if d.get("bounds") else None,
        )


def _trusted_band(S_xy, S_yy, override):
    if override is not None:
        return tuple(float(x) for x in override)
    lo = max(S_xy.support[0], S_yy.support[0])
    hi = min(S_xy.support[1], S_yy.support[1])
    if lo > 0 and math.isfinite(hi):
        return lo, hi
    return None


def _pad(h, n):
    out = np.zeros(n, dtype=complex)
    out[: h.size] = h
    return out


def _solve_stage(t, s, opts, kappa):
    try:
        return solve(ToeplitzSystem(t, s), method=opts.solver, jitter=opts.jitter, kappa_upper=kappa)
    except ArithmeticError as exc:
        raise DesignError("solve", str(exc)) from exc


def design(S_xy, S_yy: SpectralFunction, opts: DesignOptions = DesignOptions(), S_xx=None) -> WienerFilter:
    """Globally optimal causal filter for the data ``(S_xy, S_yy)``.

    ``S_xx`` is optional and only used to report absolute error variances
    in the diagnostics.
    """
    timings = {}
    t_start = time.perf_counter()
    if opts.lead_time:
        S_xy = LeadShifted(S_xy, opts.lead_time)

    if opts.validate:
        report = validate_data(S_xy, S_yy)
        if not report.ok:
            raise ValidationFailed(report)
    timings["validate"] = time.perf_counter() - t_start

    band = _trusted_band(S_xy, S_yy, opts.band)
    if opts.omega_0 is not None:
        omega_0 = float(opts.omega_0)
    elif band is not None:
        omega_0 = choose_scale(*band)
    else:
        omega_0 = 1.0

    asym = Asymptotics.from_pair(S_xy, S_yy)
    if not opts.precondition:
        alpha, beta = 0.0, 0.0
    elif opts.exponents is not None:
        alpha, beta = opts.exponents
    else:
        alpha, beta = choose_exponents(asym)
    scaling = ScalingFunction(alpha, beta, omega_0, opts.phase_rad)

    t0 = time.perf_counter()
    try:
        tp = transform(S_xy, S_yy, scaling)
    except ValueError as exc:
        raise DesignError("precondition", str(exc)) from exc
    timings["precondition"] = time.perf_counter() - t0
    kappa_up = tp.kappa_upper

    if opts.n_modes == "auto":
        if band is None:
            raise DesignError("budget", "automatic mode count needs a finite trusted band")
        n = max(1, _n_max(kappa_up, *band) // 3)
    else:
        n = int(opts.n_modes)
        if band is not None:
            nm = _n_max(kappa_up, *band)
            if n > nm:
                warnings.warn(
                    f"{n} modes exceed n_max = {nm} for this band and conditioning",
                    TruncationWarning,
                    stacklevel=2,
                )

    # coefficients once, large enough for the nested diagnostics
    dyadic = []
    k = 8
    while opts.diagnostics and k <= n:
        dyadic.append(k)
        k *= 2
    n_coef = max(n, 2 * dyadic[-1]) if dyadic else n
    q = opts.quad_points
    while q < 8 * n_coef:
        q *= 2
    cfg_all = BasisConfig(omega_0, n_coef, q)
    t0 = time.perf_counter()
    try:
        t_all, et = _basis.toeplitz_coeffs(tp.S_yy_prime, cfg_all)
        with warnings.catch_warnings():
            if n_coef > n:
                warnings.simplefilter("ignore", _basis.UnderResolvedWarning)
            s_all, es = _basis.rhs_coeffs(tp.S_xy_prime, cfg_all)
        if n_coef > n:
            _check_decay(s_all, n, max(et, es))
    except ValueError as exc:
        raise DesignError("basis", str(exc)) from exc
    timings["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h = _solve_stage(t_all[:n], s_all[:n], opts, kappa_up)
    timings["solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cond = condition_report(ToeplitzSystem(t_all[:n], s_all[:n]), tp.bounds) if n >= 2 else None
    diag = None
    if opts.diagnostics:
        var_x = 0.0
        if S_xx is not None:
            var_x = integrate_error_variance(0.0, S_xx, S_xy, S_yy, band=band).value
        hs = {n: h}
        for m in dyadic + [2 * d for d in dyadic]:
            if m not in hs:
                hs[m] = _solve_stage(t_all[:m], s_all[:m], opts, None)
        deltas = tuple(float(np.linalg.norm(_pad(hs[m], 2 * m) - hs[2 * m])) for m in dyadic)
        rate = float(np.polyfit(np.log(dyadic), np.log(np.maximum(deltas, 1e-300)), 1)[0]) if len(dyadic) >= 2 else float("nan")
        veps_ns = tuple(sorted(hs))
        # V_eps - Var(x) = -Re(h^H s) / 2pi for the solution of the normal equations
        veps = tuple(float(-np.real(np.vdot(hs[m], s_all[:m])) / (2 * math.pi) + var_x) for m in veps_ns)
        diag = ConvergenceReport(tuple(dyadic), deltas, rate, tuple(np.abs(h)), veps, veps_ns)
    budget = None
    if band is not None:
        kappa = cond.kappa_measured if (cond is not None and cond.kappa_measured) else kappa_up
        budget = compute_budget(asym, tp.S_xy_prime, tp.bounds, s_all[:n], n, band, omega_0, kappa)
    timings["diagnostics"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return WienerFilter(
        coeffs=h,
        scaling=scaling,
        basis_cfg=BasisConfig(omega_0, n, max(q, 8 * n)),
        diagnostics=diag,
        budget=budget,
        condition=cond,
        bounds=tp.bounds,
        band=band,
        lead_time=float(opts.lead_time),
        timings=timings,
    )


def _check_decay(s_all, n, err, rtol=1e-3):
    nxt = abs(s_all[n]) if n < s_all.size else 0.0
    if nxt > max(10 * err, rtol * np.max(np.abs(s_all[:n]))):
        warnings.warn(
            f"|s_{n}| = {nxt:.3g} has not decayed; consider more modes or another omega_0",
            _basis.UnderResolvedWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# frequency and time domain realisations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyResponse:
    omega: np.ndarray
    h: np.ndarray

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.h) ** 2

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.h)


def frequency_response(flt: WienerFilter, omega) -> FrequencyResponse:
    w = np.asarray(omega, dtype=float)
    return FrequencyResponse(w, flt.response(w))


@dataclass(frozen=True)
class FIR:
    taps: np.ndarray
    dt: float
    leakage: float
    imag_residue: float = 0.0

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt


def _reference_pole(hN: complex, wN: float):
    """``(d, c, a)`` with ``d + c / (a - i w)`` equal to ``hN`` at ``w = wN``.

    A single causal pole is fitted when the response decays like ``1/w``;
    otherwise a constant plus a fixed pole at ``wN / 4`` is used.
    """
    if hN != 0:
        q = 1 / hN
        if q.imag < 0:
            c = -wN / q.imag
            a = c * q.real
            if 0 < a < 10 * wN:
                return 0.0, c, a
    a = wN / 4
    r = 1 / (a - 1j * wN)
    c = hN.imag / r.imag
    return hN.real - c * r.real, c, a


def to_fir(
    flt,
    sample_rate: float,
    n_taps: Optional[int] = None,
    grid_points: int = 1 << 20,
    taper: float = 0.1,
    max_leakage: float = 1e-2,
    energy_tol: float = 1e-10,
) -> FIR:
    """Causal taps ``g`` with ``h(w) ~ sum_m g[m] exp(i w m dt)``.

    The response is sampled on the DFT grid over ``[-pi/dt, pi/dt)``.  A
    one-pole reference matched at the Nyquist frequency is subtracted first
    and added back through its exact sampled impulse response, so the band
    edge does not ring into negative times.  The remaining negative-time
    energy fraction is reported as ``leakage`` and discarded; the last
    ``taper`` fraction of the kept taps is cosine-tapered.
    """
    dt = 1.0 / sample_rate
    N = int(grid_points)
    resp = flt.response if hasattr(flt, "response") else flt
    w = 2 * math.pi * np.fft.fftfreq(N, dt)
    wN = math.pi / dt
    hN = complex(np.asarray(resp(np.array([wN])))[0])
    d, c, a = _reference_pole(hN, wN)
    g = np.fft.fft(resp(w) - d - c / (a - 1j * w)) / N
    m = np.arange(N // 2)
    ref = c * dt * np.exp(-a * m * dt)
    ref[0] = c * dt / 2 + d
    g[: N // 2] += ref
    imag_res = float(np.max(np.abs(g.imag)) / max(np.max(np.abs(g.real)), 1e-300))
    g = g.real
    total = float(np.sum(g**2))
    leak = float(np.sum(g[N // 2:] ** 2) / total) if total > 0 else 0.0
    if leak > max_leakage:
        raise LeakageTooHigh(f"negative-time energy fraction {leak:.3g} exceeds {max_leakage:g}")
    causal = g[: N // 2]
    if n_taps is None:
        tail = np.cumsum((causal**2)[::-1])[::-1]
        keep = np.flatnonzero(tail > energy_tol * total)
        n_taps = int(keep[-1] + 1) if keep.size else 1
        n_taps = 1 << max(4, math.ceil(math.log2(n_taps)))
    n_taps = min(int(n_taps), N // 2)
    taps = causal[:n_taps].copy()
    nt = int(round(taper * n_taps))
    if nt > 1:
        taps[-nt:] *= 0.5 * (1 + np.cos(np.pi * np.arange(1, nt + 1) / nt))
    return FIR(taps, dt, leak, imag_res)


def _check_rate(fir: FIR, y: TimeSeries):
    if not math.isclose(fir.dt, y.dt, rel_tol=1e-9):
        raise ValueError(f"sample period mismatch: filter {fir.dt:g} s, series {y.dt:g} s")


def apply_recorded(fir: FIR, y: TimeSeries) -> TimeSeries:
    """Causal convolution; output sample ``k`` uses inputs up to ``k`` only."""
    _check_rate(fir, y)
    out = signal.oaconvolve(y.samples, fir.taps)[: len(y)]
    return TimeSeries(y.dt, out)


# ---------------------------------------------------------------------------
# streaming
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamConfig:
    """Block streaming: EMA of per-block Welch estimates, redesign every few blocks.

    ``alpha_y``/``beta_y`` declare the tails of ``S_yy`` beyond the band the
    running estimate resolves.
    """

    block_length: int = 4096
    smoothing: float = 0.9
    redesign_every: int = 8
    welch: WelchConfig = WelchConfig(segment_length=1024)
    alpha_y: float = 0.0
    beta_y: float = 1.8
    n_taps: int = 4096
    grid_points: int = 1 << 18
    design: DesignOptions = DesignOptions(diagnostics=False)

    def __post_init__(self):
        if not 0 <= self.smoothing < 1:
            raise ValueError("smoothing must be in [0, 1)")
        if self.redesign_every < 1 or self.block_length < 2 * self.welch.segment_length:
            raise ValueError("block must hold two Welch segments and redesign_every must be >= 1")


class StreamingFilter:
    """Single-owner streaming filter; taps change only at block boundaries."""

    def __init__(self, S_xy, dt: float, cfg: StreamConfig = StreamConfig()):
        self.S_xy, self.dt, self.cfg = S_xy, float(dt), cfg
        self.taps: Optional[np.ndarray] = None
        self.history = np.zeros(0)
        self.psd: Optional[np.ndarray] = None
        self.freqs: Optional[np.ndarray] = None
        self.blocks = 0
        self.filter: Optional[WienerFilter] = None
        self.redesigns = 0
        self.failures = 0

    def _update_psd(self, block):
        est = welch_psd(TimeSeries(self.dt, block), self.cfg.welch)
        if self.psd is None:
            self.freqs, self.psd = est.frequencies, est.values.copy()
        else:
            a = self.cfg.smoothing
            self.psd = a * self.psd + (1 - a) * est.values

    def current_spectrum(self) -> SpectralFunction:
        tab = TabulatedSpectrum(self.freqs, self.psd)
        return tab.to_function(alpha=self.cfg.alpha_y, beta=self.cfg.beta_y, name="S_yy_stream")

    def _redesign(self):
        try:
            flt = design(self.S_xy, self.current_spectrum(), self.cfg.design)
            fir = to_fir(flt, 1 / self.dt, self.cfg.n_taps, self.cfg.grid_points)
        except Exception as exc:  # keep the previous filter
            self.failures += 1
            log.warning("streaming redesign after block %d failed: %s", self.blocks, exc)
            return
        self.filter, self.taps = flt, fir.taps
        self.redesigns += 1

    def process(self, block) -> np.ndarray:
        block = np.asarray(block, dtype=float)
        if self.taps is None:
            if self.blocks == 0:
                warnings.warn("no spectral history yet; emitting zeros", ColdStartWarning, stacklevel=2)
            out = np.zeros_like(block)
        else:
            buf = np.concatenate([self.history, block])
            out = signal.lfilter(self.taps, [1.0], buf)[self.history.size:]
        keep = self.cfg.n_taps - 1
        self.history = np.concatenate([self.history, block])[-keep:] if keep > 0 else np.zeros(0)
        if block.size >= 2 * self.cfg.welch.segment_length:
            self._update_psd(block)
        self.blocks += 1
        if self.psd is not None and (self.blocks - 1) % self.cfg.redesign_every == 0:
            self._redesign()
        return out


def apply_streaming(source: Iterable, S_xy, dt: float, cfg: StreamConfig = StreamConfig()) -> Iterator[np.ndarray]:
    """Filter a block stream; yields one output block per input block."""
    sf = StreamingFilter(S_xy, dt, cfg)
    for block in source:
        yield sf.process(block)


# ---------------------------------------------------------------------------
# residual spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorPSD:
    omega: np.ndarray
    values: np.ndarray


def _log_bin(w, v, n_bins, outlier_sigma):
    edges = np.geomspace(w[0], w[-1] * (1 + 1e-12), n_bins + 1)
    idx = np.digitize(w, edges) - 1
    ow, ov = [], []
    for b in range(n_bins):
        sel = idx == b
        if not sel.any():
            continue
        vals, ws = v[sel], w[sel]
        if vals.size > 2:
            mu, sd = vals.mean(), vals.std()
            ok = np.abs(vals - mu) <= outlier_sigma * sd if sd > 0 else np.ones(vals.size, bool)
            vals, ws = vals[ok], ws[ok]
        ow.append(math.exp(np.mean(np.log(ws))))
        ov.append(vals.mean())
    return np.array(ow), np.array(ov)


def error_psd(
    x: TimeSeries, x_hat: TimeSeries, welch_cfg: WelchConfig = WelchConfig(), log_bins: Optional[int] = None,
    outlier_sigma: float = 10.0,
) -> ErrorPSD:
    """Welch PSD of ``x - x_hat``, optionally averaged into log-spaced bins."""
    if len(x) != len(x_hat):
        raise ValueError("series lengths differ")
    r = x.samples - x_hat.samples
    f, P = signal.welch(r, fs=1 / x.dt, scaling="density", **welch_cfg.scipy_kwargs())
    w, S = 2 * math.pi * f[1:], P[1:] / 2
    if welch_cfg.segment_length % 2 == 0:
        S[-1] = P[-1]
    if log_bins:
        w, S = _log_bin(w, S, log_bins, outlier_sigma)
    return ErrorPSD(w, S)
