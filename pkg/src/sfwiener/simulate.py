"""Gaussian time series with prescribed spectra by spectral shaping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .estimation import TimeSeries
from .spectral_model import SpectralFunction, model_from_config

__all__ = ["SimSpec", "synthesize", "shaped_noise", "stream"]


@dataclass(frozen=True)
class SimSpec:
    duration: float
    sample_rate: float
    signal: SpectralFunction
    noise: SpectralFunction
    seed: int = 0

    def __post_init__(self):
        if not (self.duration > 0 and self.sample_rate > 0):
            raise ValueError("duration and sample_rate must be positive")
        if self.n_samples < 1024:
            raise ValueError(f"record of {self.n_samples} samples is too short (need >= 1024)")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @classmethod
    def from_config(cls, cfg: dict) -> "SimSpec":
        return cls(
            duration=float(cfg["duration"]),
            sample_rate=float(cfg["sample_rate"]),
            signal=model_from_config(cfg["signal"]),
            noise=model_from_config(cfg["noise"]),
            seed=int(cfg.get("seed", 0)),
        )


def shaped_noise(S, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One realisation of length ``n`` with two-sided spectrum ``S`` (rad/s).

    A record of ``2n`` samples is shaped in the DFT domain and its middle
    half is kept, which suppresses the circular wrap-around correlation.
    The DC bin takes the value of the first nonzero bin.
    """
    M = 2 * n
    w = 2 * math.pi * np.fft.rfftfreq(M, dt)
    Sw = np.empty(w.size)
    Sw[1:] = np.real(S(w[1:]))
    Sw[0] = Sw[1]
    if not np.all(np.isfinite(Sw)) or np.any(Sw < 0):
        raise ValueError("spectrum is undefined or negative on the synthesis grid")
    amp = np.sqrt(M * Sw / dt)
    z = rng.standard_normal((2, w.size))
    X = amp * (z[0] + 1j * z[1]) / math.sqrt(2)
    X[0] = amp[0] * z[0, 0]
    if M % 2 == 0:
        X[-1] = amp[-1] * z[0, -1]
    x = np.fft.irfft(X, M)
    start = n // 2
    return x[start: start + n]


def synthesize(spec: SimSpec) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Independent signal and noise records and their sum ``(x, n, y)``."""
    gx, gn = (np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(spec.seed).spawn(2))
    n = spec.n_samples
    x = shaped_noise(spec.signal, n, spec.dt, gx)
    nn = shaped_noise(spec.noise, n, spec.dt, gn)
    return TimeSeries(spec.dt, x), TimeSeries(spec.dt, nn), TimeSeries(spec.dt, x + nn)


def stream(spec: SimSpec, block: int) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Blocks ``(x, n, y)`` of the record produced by :func:`synthesize`."""
    if block < 1:
        raise ValueError("block must be positive")
    x, nn, y = synthesize(spec)
    for i in range(0, len(y), block):
        yield x.samples[i: i + block], nn.samples[i: i + block], y.samples[i: i + block]
