"""Welch spectral estimates in the library's normalisation.

Estimates are two-sided densities in angular frequency, so that
``integral S dw / 2pi`` equals the variance, and cross-spectra follow

    S_xy(w) = integral E[x(t + tau) y(t)] exp(i w tau) dtau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import signal

from .spectral_model import TabulatedSpectrum

__all__ = [
    "TimeSeries",
    "WelchConfig",
    "PowerLawFit",
    "SpectrumAsymptotics",
    "welch_psd",
    "welch_csd",
    "fit_power_law",
    "fit_asymptotics",
    "segment_length_for_linewidth",
]


@dataclass(frozen=True)
class TimeSeries:
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("samples must be 1-D")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt


@dataclass(frozen=True)
class WelchConfig:
    segment_length: int = 2048
    overlap_fraction: float = 0.85
    window: str = "hann"  # or "slepian"
    nw: float = 3.0
    detrend: str = "mean"  # or "none"

    def __post_init__(self):
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if self.segment_length < 16:
            raise ValueError("segment_length must be >= 16")
        if self.window not in ("hann", "slepian"):
            raise ValueError("window must be 'hann' or 'slepian'")
        if self.detrend not in ("mean", "none"):
            raise ValueError("detrend must be 'mean' or 'none'")

    def scipy_kwargs(self) -> dict:
        n = self.segment_length
        win = ("dpss", self.nw) if self.window == "slepian" else "hann"
        return dict(
            window=win,
            nperseg=n,
            noverlap=int(round(self.overlap_fraction * n)),
            detrend="constant" if self.detrend == "mean" else False,
        )


def segment_length_for_linewidth(sample_rate: float, linewidth_hz: float, bins: int = 8) -> int:
    """Smallest power of two giving ``bins`` Fourier bins across ``linewidth_hz``."""
    need = bins * sample_rate / linewidth_hz
    return 1 << max(4, math.ceil(math.log2(need)))


def _two_sided(f, P, n):
    """One-sided per-Hz density to two-sided per-rad/s, DC dropped."""
    S = P / 2
    if n % 2 == 0:
        S[-1] = P[-1]  # Nyquist bin is not doubled in the one-sided estimate
    return 2 * math.pi * f[1:], S[1:]


def welch_psd(y: TimeSeries, cfg: WelchConfig = WelchConfig()) -> TabulatedSpectrum:
    if len(y) < 2 * cfg.segment_length:
        raise ValueError(f"series of {len(y)} samples is shorter than two segments ({cfg.segment_length})")
    f, P = signal.welch(y.samples, fs=y.sample_rate, scaling="density", return_onesided=True, **cfg.scipy_kwargs())
    w, S = _two_sided(f, P, cfg.segment_length)
    return TabulatedSpectrum.floored(w, S)


def welch_csd(x: TimeSeries, y: TimeSeries, cfg: WelchConfig = WelchConfig()) -> TabulatedSpectrum:
    if len(x) != len(y) or not math.isclose(x.dt, y.dt, rel_tol=1e-12):
        raise ValueError("cross-spectrum needs series of equal length and sample period")
    if len(y) < 2 * cfg.segment_length:
        raise ValueError("series shorter than two segments")
    # scipy forms conj(X_x) X_y, which matches the exp(+i w tau) convention
    f, P = signal.csd(x.samples, y.samples, fs=y.sample_rate, scaling="density", return_onesided=True, **cfg.scipy_kwargs())
    w, S = _two_sided(f, P, cfg.segment_length)
    return TabulatedSpectrum(w, S, "cross")


@dataclass(frozen=True)
class PowerLawFit:
    """``|S| = amplitude * w^-exponent`` fitted on ``band``."""

    exponent: float
    amplitude: float
    exponent_err: float
    log_amplitude_err: float
    band: tuple[float, float]


def fit_power_law(omega, values, band) -> PowerLawFit:
    w = np.asarray(omega, dtype=float)
    v = np.abs(np.asarray(values))
    sel = (w >= band[0]) & (w <= band[1]) & (v > 0)
    if sel.sum() < 3 or band[1] / band[0] < 10 * (1 - 1e-9):
        raise ValueError(f"power-law fit needs at least a decade and 3 points, got band {band}")
    X = np.log(w[sel])
    Y = np.log(v[sel])
    A = np.column_stack([np.ones_like(X), X])
    coef, res, *_ = np.linalg.lstsq(A, Y, rcond=None)
    dof = max(1, X.size - 2)
    resid = Y - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return PowerLawFit(
        exponent=float(-coef[1]),
        amplitude=float(math.exp(coef[0])),
        exponent_err=float(math.sqrt(cov[1, 1])),
        log_amplitude_err=float(math.sqrt(cov[0, 0])),
        band=(float(band[0]), float(band[1])),
    )


@dataclass(frozen=True)
class SpectrumAsymptotics:
    low: PowerLawFit
    high: PowerLawFit

    @property
    def alpha(self) -> float:
        return self.high.exponent

    @property
    def beta(self) -> float:
        return self.low.exponent

    @property
    def A(self) -> float:
        return self.high.amplitude

    @property
    def B(self) -> float:
        return self.low.amplitude


def fit_asymptotics(S, bands: Optional[Sequence[tuple[float, float]]] = None) -> SpectrumAsymptotics:
    """Log-log regressions at the low and high ends of a tabulated spectrum.

    ``bands`` defaults to the lowest and highest decade of the grid.
    """
    w, v = S.frequencies, S.values
    if bands is None:
        if w[-1] / w[0] < 10:
            raise ValueError("spectrum spans less than a decade")
        bands = [(w[0], 10 * w[0]), (w[-1] / 10, w[-1])]
    low, high = bands
    return SpectrumAsymptotics(fit_power_law(w, v, low), fit_power_law(w, v, high))
